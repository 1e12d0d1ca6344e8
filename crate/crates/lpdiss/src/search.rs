//! Minimisation of a pointwise quantity over the sampled points of a domain.

use crate::coeff::PointSet;
use crate::error::Result;
use crate::optimize::{refine_coordinatewise, RefineOptions};

/// Worst point found together with whatever the objective attached to it.
pub(crate) struct Worst<W> {
    pub value: f64,
    pub x: Vec<f64>,
    pub info: W,
    pub evals: usize,
}

/// Evaluates `f` at every sample and then polishes the `starts` best ones by
/// coordinate-wise refinement inside the domain box.
///
/// Ties keep the earliest sample. Points where `f` fails during refinement
/// are skipped; errors at the initial samples propagate.
pub(crate) fn minimize_over_points<W, F>(set: &PointSet, rounds: usize, starts: usize, mut f: F) -> Result<Worst<W>>
where
    F: FnMut(&[f64]) -> Result<(f64, W)>,
{
    let mut scored = Vec::with_capacity(set.points.len());
    for x in &set.points {
        scored.push(f(x)?);
    }
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[a].0.total_cmp(&scored[b].0));
    let mut evals = scored.len();
    let best_idx = order[0];
    let mut best_x = set.points[best_idx].clone();
    let mut infos: Vec<Option<(f64, W)>> = scored.into_iter().map(Some).collect();
    let (mut best_value, mut best_info) = infos[best_idx].take().expect("present");

    let Some(bounds) = set.bounds.as_ref() else {
        return Ok(Worst {
            value: best_value,
            x: best_x,
            info: best_info,
            evals,
        });
    };
    if rounds == 0 {
        return Ok(Worst {
            value: best_value,
            x: best_x,
            info: best_info,
            evals,
        });
    }
    let to_x = |u: &[f64]| -> Vec<f64> { u.iter().zip(bounds).map(|(t, (a, b))| a + t * (b - a)).collect() };
    let unit_bounds = vec![(0.0, 1.0); bounds.len()];
    let opts = RefineOptions {
        rounds,
        initial_radius: 0.25,
        shrink: 0.6,
        line_iters: 24,
    };
    for &idx in order.iter().take(starts.max(1)) {
        let start: Vec<f64> = set.points[idx]
            .iter()
            .zip(bounds)
            .map(|(x, (a, b))| ((x - a) / (b - a)).clamp(0.0, 1.0))
            .collect();
        let (u, _, n) = refine_coordinatewise(
            |u| f(&to_x(u)).map(|(v, _)| v).unwrap_or(f64::INFINITY),
            &start,
            Some(&unit_bounds),
            opts,
        );
        evals += n;
        let x = to_x(&u);
        if let Ok((v, info)) = f(&x) {
            evals += 1;
            if v < best_value {
                best_value = v;
                best_info = info;
                best_x = x;
            }
        }
    }
    Ok(Worst {
        value: best_value,
        x: best_x,
        info: best_info,
        evals,
    })
}
