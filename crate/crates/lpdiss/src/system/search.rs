//! Sampled minimisation over (x, auxiliary angles, ω on the complex unit sphere).

use std::f64::consts::PI;

use crate::coeff::{PointSet, SamplingPlan};
use crate::error::Result;
use crate::linalg::C64;
use crate::optimize::{refine_coordinatewise, sphere_angles, sphere_point, RefineOptions};
use crate::rng::Rng;
use crate::system::forms::{from_real, to_real};

/// Number of best samples polished by local refinement.
pub(crate) const REFINE_STARTS: usize = 4;

#[derive(Clone, Debug)]
pub(crate) struct Candidate {
    pub value: f64,
    pub x: Vec<f64>,
    pub extra: Vec<f64>,
    pub omega: Vec<C64>,
}

pub(crate) struct Found {
    pub best: Candidate,
    pub evals: usize,
}

/// Minimises `obj(prep(x), extra, ω)`.
///
/// `prep` evaluates the coefficients at x once per point; `extra` holds
/// `n_extra` angles in [0, π) (directions ξ of the plane, for instance).
pub(crate) fn search_min<T, Prep, Obj>(
    set: &PointSet,
    m: usize,
    n_extra: usize,
    plan: &SamplingPlan,
    stream: u64,
    mut prep: Prep,
    mut obj: Obj,
) -> Result<Found>
where
    Prep: FnMut(&[f64]) -> Result<T>,
    Obj: FnMut(&T, &[f64], &[C64]) -> f64,
{
    let mut rng = Rng::derived(plan.seed, stream);
    let mut pool: Vec<Candidate> = Vec::new();
    let mut evals = 0;
    let mut prepared: Vec<T> = Vec::with_capacity(set.points.len());
    for x in &set.points {
        let t = prep(x)?;
        for _ in 0..plan.n_directions {
            let extra: Vec<f64> = (0..n_extra).map(|_| rng.uniform_in(0.0, PI)).collect();
            let omega = rng.unit_complex(m);
            let value = obj(&t, &extra, &omega);
            evals += 1;
            keep_best(
                &mut pool,
                Candidate {
                    value,
                    x: x.clone(),
                    extra,
                    omega,
                },
            );
        }
        prepared.push(t);
    }

    let dim_x = if set.bounds.is_some() { set.points[0].len() } else { 0 };
    let bounds_x = set.bounds.clone().unwrap_or_default();
    let mut all_bounds: Vec<(f64, f64)> = vec![(0.0, 1.0); dim_x];
    all_bounds.extend(std::iter::repeat_n((f64::NEG_INFINITY, f64::INFINITY), n_extra + 2 * m - 1));
    let opts = RefineOptions {
        rounds: plan.refine_iters,
        initial_radius: 0.25,
        shrink: 0.6,
        line_iters: 24,
    };
    let decode = |z: &[f64]| -> (Vec<f64>, Vec<f64>, Vec<C64>) {
        let x: Vec<f64> = z[..dim_x]
            .iter()
            .zip(&bounds_x)
            .map(|(t, (a, b))| a + t.clamp(0.0, 1.0) * (b - a))
            .collect();
        let extra = z[dim_x..dim_x + n_extra].to_vec();
        let omega = from_real(&sphere_point(&z[dim_x + n_extra..]));
        (x, extra, omega)
    };

    let mut best = pool[0].clone();
    let constant_t = if dim_x == 0 { prepared.pop() } else { None };
    for start in pool.iter() {
        let mut z: Vec<f64> = start
            .x
            .iter()
            .zip(&bounds_x)
            .take(dim_x)
            .map(|(x, (a, b))| ((x - a) / (b - a)).clamp(0.0, 1.0))
            .collect();
        z.extend_from_slice(&start.extra);
        z.extend(sphere_angles(&to_real(&start.omega)));
        let (z, value, n) = refine_coordinatewise(
            |z| {
                let (x, extra, omega) = decode(z);
                match &constant_t {
                    Some(t) => obj(t, &extra, &omega),
                    None => match prep(&x) {
                        Ok(t) => obj(&t, &extra, &omega),
                        Err(_) => f64::INFINITY,
                    },
                }
            },
            &z,
            Some(&all_bounds),
            opts,
        );
        evals += n;
        if value < best.value {
            let (x, extra, omega) = decode(&z);
            best = Candidate {
                value,
                x: if dim_x == 0 { start.x.clone() } else { x },
                extra,
                omega,
            };
        }
    }
    Ok(Found { best, evals })
}

fn keep_best(pool: &mut Vec<Candidate>, c: Candidate) {
    if pool.len() == REFINE_STARTS && c.value >= pool[REFINE_STARTS - 1].value {
        return;
    }
    let pos = pool.iter().position(|q| c.value < q.value).unwrap_or(pool.len());
    pool.insert(pos, c);
    pool.truncate(REFINE_STARTS);
}
