//! Test fields built from a failing direction, and the violation search.
//!
//! Along the direction ξ the field is μω + s(⟨ξ,y⟩)λ, where s climbs from 0
//! to 1 and back on every unit interval, times a cutoff of radius R. On the
//! ramps the integrand is P(x, λ, ω) up to O(1/μ), so a negative P makes the
//! functional negative once μ and R are large enough.

use serde::{Deserialize, Serialize};

use crate::coeff::{field_points, PointSet, SamplingPlan};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::operator::OperatorSpec;
use crate::oracle::field::{random_testfield, Grid, TestField};
use crate::oracle::form::form_value;
use crate::rng::Rng;
use crate::scalar::PExponent;
use crate::system::search::search_min;
use crate::system::{min_p_over_lambda, min_p_value};
use crate::verdict::Witness;

/// Amplitudes tried by the violation search.
pub const MU_LADDER: [f64; 3] = [10.0, 100.0, 1000.0];
/// Cutoff radii tried by the violation search.
pub const R_LADDER: [f64; 3] = [8.0, 32.0, 128.0];
/// Threshold below which a functional value counts as a violation.
pub const VIOLATION_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessParams {
    /// Amplitude μ of the constant part.
    pub mu_amp: f64,
    /// Cutoff radius R along ξ, in ramp units.
    pub cutoff_r: f64,
    /// Cutoff radius across ξ, as a multiple of `cutoff_r`.
    pub transverse: f64,
    /// Shift of the ramp train along ξ.
    pub ramp_offset: f64,
    /// Grid nodes per ramp unit used by [`witness_grid`].
    pub nodes_per_unit: usize,
}

impl WitnessParams {
    pub fn new(mu_amp: f64, cutoff_r: f64) -> Self {
        Self {
            mu_amp,
            cutoff_r,
            transverse: 2.0,
            ramp_offset: 0.0,
            nodes_per_unit: 8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu_amp > 0.0 && self.mu_amp.is_finite()) {
            return Err(Error::InvalidParameter(format!("amplitude {} must be positive", self.mu_amp)));
        }
        if !(self.cutoff_r > 2.0 && self.cutoff_r.is_finite()) {
            return Err(Error::InvalidParameter(format!("cutoff radius {} must exceed 2", self.cutoff_r)));
        }
        if !(self.transverse >= 1.0) || self.nodes_per_unit < 4 {
            return Err(Error::InvalidParameter(
                "transverse ratio must be at least 1 and nodes per unit at least 4".into(),
            ));
        }
        Ok(())
    }
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Rises from 0 to 1 on [0, 1], falls back on [1, 2], period 2.
fn ramp_train(t: f64) -> f64 {
    let r = t.rem_euclid(2.0);
    smoothstep(if r > 1.0 { 2.0 - r } else { r })
}

/// Equal to 1 for |t| ≤ 1/2 and to 0 for |t| ≥ 1, C¹ in between.
fn cutoff(t: f64) -> f64 {
    smoothstep(2.0 * (1.0 - t.abs()))
}

/// Direction of the witness: ξ itself, the axis of block h, or the only axis.
fn witness_direction(w: &Witness, n: usize) -> Result<Vec<f64>> {
    let xi = match (&w.xi, w.h) {
        (Some(xi), _) => xi.clone(),
        (None, Some(h)) if h < n => (0..n).map(|k| if k == h { 1.0 } else { 0.0 }).collect(),
        (None, None) if n == 1 => vec![1.0],
        _ => return Err(Error::InvalidParameter("witness has no direction".into())),
    };
    if xi.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: xi.len() });
    }
    let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidParameter("witness direction vanishes".into()));
    }
    Ok(xi.iter().map(|v| v / norm).collect())
}

fn main_axis(xi: &[f64]) -> usize {
    (0..xi.len()).fold(0, |best, k| if xi[k].abs() > xi[best].abs() { k } else { best })
}

fn extents(xi: &[f64], wp: &WitnessParams) -> Vec<f64> {
    let a = main_axis(xi);
    (0..xi.len())
        .map(|k| if k == a { wp.cutoff_r } else { wp.transverse * wp.cutoff_r })
        .collect()
}

/// The test field of a witness (x, ξ or h, λ, ω) on `grid`.
///
/// The construction lives in coordinates y = (x − x₀)/ε, with ε as large as
/// the grid allows around the centre x₀ (the witness point, or the grid
/// centre for constant coefficients).
pub fn witness_testfield(witness: &Witness, op: &OperatorSpec, wp: &WitnessParams, grid: &Grid) -> Result<TestField> {
    wp.validate()?;
    let n = op.space_dim();
    let m = op.components();
    if grid.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: grid.dim() });
    }
    let (Some(lambda), Some(omega)) = (&witness.lambda, &witness.omega) else {
        return Err(Error::InvalidParameter("witness needs both lambda and omega".into()));
    };
    if lambda.len() != m || omega.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: lambda.len().min(omega.len()),
        });
    }
    let xi = witness_direction(witness, n)?;
    let ext = extents(&xi, wp);
    let centre: Vec<f64> = if op.domain()?.is_none() {
        (0..n).map(|k| 0.5 * (grid.lo()[k] + grid.hi()[k])).collect()
    } else {
        witness.x.clone()
    };
    if centre.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: centre.len() });
    }
    let mut scale = f64::INFINITY;
    for k in 0..n {
        let room = (centre[k] - grid.lo()[k]).min(grid.hi()[k] - centre[k]);
        if room <= 0.0 {
            return Err(Error::OutsideDomain { point: centre });
        }
        scale = scale.min(room / ext[k]);
    }
    let a = main_axis(&xi);
    let h = grid.spacing();
    let per_unit = scale / h[a];
    if per_unit < 4.0 {
        let needed = ((grid.hi()[a] - grid.lo()[a]) / (scale / 4.0)).ceil() as usize + 1;
        return Err(Error::CutoffTooLarge {
            radius: wp.cutoff_r,
            suggestion: format!("use at least {needed} nodes along axis {a} or a smaller radius"),
        });
    }
    TestField::from_fn(grid.clone(), m, |x| {
        let y: Vec<f64> = (0..n).map(|k| (x[k] - centre[k]) / scale).collect();
        let env: f64 = (0..n).map(|k| cutoff(y[k] / ext[k])).product();
        if env == 0.0 {
            return vec![C64::new(0.0, 0.0); m];
        }
        let t: f64 = wp.ramp_offset + y.iter().zip(&xi).map(|(a, b)| a * b).sum::<f64>();
        let s = ramp_train(t);
        (0..m).map(|j| (omega[j] * wp.mu_amp + lambda[j] * s) * env).collect()
    })
}

fn op_points(op: &OperatorSpec, plan: &SamplingPlan) -> Result<PointSet> {
    let fields = op.fields();
    if fields.is_empty() {
        return Ok(PointSet {
            points: vec![vec![0.0; op.space_dim()]],
            bounds: None,
            truncation: None,
            constant: true,
        });
    }
    field_points(&fields, plan)
}

/// Σ Aʰᵏ ξₕ ξₖ from the coefficient blocks.
fn symbol(blocks: &[Vec<ComplexMatrix>], xi: &[f64]) -> ComplexMatrix {
    let m = blocks[0][0].dim();
    let mut out = ComplexMatrix::zeros(m);
    for (h, row) in blocks.iter().enumerate() {
        for (k, b) in row.iter().enumerate() {
            let w = xi[h] * xi[k];
            if w == 0.0 {
                continue;
            }
            for i in 0..m {
                for j in 0..m {
                    out.set(i, j, out.get(i, j) + b.get(i, j) * w);
                }
            }
        }
    }
    out
}

/// The (x, ξ, λ, ω) minimising P computed from Σ Aʰᵏξₕξₖ.
///
/// Coordinate axes are examined first since they give grid-aligned test
/// fields; for two space dimensions a free direction is tried when no axis
/// gives a negative value.
pub fn worst_direction(op: &OperatorSpec, p: &PExponent, plan: &SamplingPlan) -> Result<Witness> {
    op.validate()?;
    plan.validate()?;
    let n = op.space_dim();
    let m = op.components();
    let set = op_points(op, plan)?;
    let mut best: Option<Witness> = None;
    let consider = |best: &mut Option<Witness>, x: Vec<f64>, xi: Vec<f64>, omega: Vec<C64>| -> Result<()> {
        let b = symbol(&op.coeff_blocks(&x)?, &xi);
        let (value, lambda) = min_p_over_lambda(&b, p, &omega)?;
        if best.as_ref().is_none_or(|w| value < w.margin) {
            *best = Some(Witness {
                h: None,
                x,
                xi: Some(xi),
                lambda: Some(lambda),
                omega: Some(omega),
                margin: value,
            });
        }
        Ok(())
    };
    for axis in 0..n {
        let xi: Vec<f64> = (0..n).map(|k| if k == axis { 1.0 } else { 0.0 }).collect();
        let found = search_min(
            &set,
            m,
            0,
            plan,
            0xD1 + axis as u64,
            |x| Ok(symbol(&op.coeff_blocks(x)?, &xi)),
            |b, _, w| min_p_value(b, p, w).unwrap_or(f64::INFINITY),
        )?;
        consider(&mut best, found.best.x, xi, found.best.omega)?;
    }
    let axis_margin = best.as_ref().map_or(f64::INFINITY, |w| w.margin);
    if n == 2 && axis_margin >= 0.0 {
        let found = search_min(
            &set,
            m,
            1,
            plan,
            0xD9,
            |x| op.coeff_blocks(x),
            |blocks, extra, w| {
                let xi = [extra[0].cos(), extra[0].sin()];
                min_p_value(&symbol(blocks, &xi), p, w).unwrap_or(f64::INFINITY)
            },
        )?;
        let phi = found.best.extra[0];
        consider(&mut best, found.best.x, vec![phi.cos(), phi.sin()], found.best.omega)?;
    }
    Ok(best.expect("at least one axis"))
}

/// Grid carrying the witness field for `wp`: `nodes_per_unit` nodes per ramp
/// unit along the main axis of ξ, 129 nodes across, shrunk around the
/// witness point to fit inside the coefficient domain.
pub fn witness_grid(witness: &Witness, op: &OperatorSpec, wp: &WitnessParams) -> Result<(Grid, Witness)> {
    wp.validate()?;
    let n = op.space_dim();
    let xi = witness_direction(witness, n)?;
    let ext = extents(&xi, wp);
    let a = main_axis(&xi);
    let mut centre = witness.x.clone();
    let mut scale: f64 = 1.0;
    if let Some(d) = op.domain()? {
        let (lo, hi) = d.effective_bounds();
        for k in 0..n {
            scale = scale.min(0.1 * (hi[k] - lo[k]) / ext[k]);
        }
        for k in 0..n {
            centre[k] = centre[k].clamp(lo[k] + scale * ext[k], hi[k] - scale * ext[k]);
        }
    }
    let lo: Vec<f64> = (0..n).map(|k| centre[k] - scale * ext[k]).collect();
    let hi: Vec<f64> = (0..n).map(|k| centre[k] + scale * ext[k]).collect();
    let nodes: Vec<usize> = (0..n)
        .map(|k| {
            if k == a {
                (2.0 * ext[k]).ceil() as usize * wp.nodes_per_unit + 1
            } else {
                129
            }
        })
        .collect();
    let grid = Grid::new(lo, hi, nodes)?;
    let moved = Witness {
        x: centre,
        xi: Some(xi),
        ..witness.clone()
    };
    Ok((grid, moved))
}

/// Where a violating field came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationSource {
    Witness,
    Random,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub field: TestField,
    pub value: f64,
    pub source: ViolationSource,
    /// (μ, R) of the witness ladder step that produced the field.
    pub ladder: Option<(f64, f64)>,
    pub evaluations: usize,
}

/// Looks for a test field with functional value below −1e−8.
///
/// Tries the witness fields of the worst direction over the (μ, R) ladder,
/// then random bump superpositions, for at most `budget` evaluations.
pub fn violation_search(
    op: &OperatorSpec,
    p: &PExponent,
    plan: &SamplingPlan,
    budget: usize,
) -> Result<Option<Violation>> {
    if budget == 0 {
        return Err(Error::InvalidParameter("the evaluation budget must be at least 1".into()));
    }
    let witness = worst_direction(op, p, plan)?;
    let mut used = 0;
    for &mu in &MU_LADDER {
        for &r in &R_LADDER {
            if used == budget {
                return Ok(None);
            }
            let wp = WitnessParams::new(mu, r);
            let Ok((grid, w)) = witness_grid(&witness, op, &wp) else {
                continue;
            };
            let field = witness_testfield(&w, op, &wp, &grid)?;
            let value = form_value(op, p, &field)?;
            used += 1;
            if value < -VIOLATION_TOL {
                return Ok(Some(Violation {
                    field,
                    value,
                    source: ViolationSource::Witness,
                    ladder: Some((mu, r)),
                    evaluations: used,
                }));
            }
        }
    }
    let grid = random_grid(op)?;
    let real = matches!(op, OperatorSpec::Elasticity { .. });
    let mut rng = Rng::derived(plan.seed, 0xB0B);
    while used < budget {
        let field = random_testfield(&grid, op.components(), real, &mut rng)?;
        let value = form_value(op, p, &field)?;
        used += 1;
        if value < -VIOLATION_TOL {
            return Ok(Some(Violation {
                field,
                value,
                source: ViolationSource::Random,
                ladder: None,
                evaluations: used,
            }));
        }
    }
    Ok(None)
}

/// Grid over the coefficient domain, or [−1, 1]ⁿ for constant coefficients.
pub fn random_grid(op: &OperatorSpec) -> Result<Grid> {
    let n = op.space_dim();
    let nodes = if n == 1 { 257 } else { 65 };
    match op.domain()? {
        None => Grid::new(vec![-1.0; n], vec![1.0; n], vec![nodes; n]),
        Some(d) => {
            let (lo, hi) = d.effective_bounds();
            Grid::new(lo, hi, vec![nodes; n])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CoefficientField;

    fn p(v: f64) -> PExponent {
        PExponent::new(v).unwrap()
    }

    fn diag19() -> OperatorSpec {
        OperatorSpec::Diagonal {
            blocks: vec![CoefficientField::constant(ComplexMatrix::diag_real(&[1.0, 9.0]), 1)],
        }
    }

    fn quick() -> SamplingPlan {
        SamplingPlan {
            n_points: 8,
            n_directions: 512,
            refine_iters: 20,
            ..Default::default()
        }
    }

    #[test]
    fn ramp_and_cutoff_shapes() {
        assert_eq!(ramp_train(0.0), 0.0);
        assert_eq!(ramp_train(1.0), 1.0);
        assert_eq!(ramp_train(2.0), 0.0);
        assert_eq!(ramp_train(-1.0), 1.0);
        assert_eq!(cutoff(0.3), 1.0);
        assert_eq!(cutoff(1.0), 0.0);
        assert!(cutoff(0.75) > 0.0 && cutoff(0.75) < 1.0);
    }

    #[test]
    fn worst_direction_sign_follows_the_criterion() {
        assert!(worst_direction(&diag19(), &p(10.0), &quick()).unwrap().margin < 0.0);
        assert!(worst_direction(&diag19(), &p(3.0), &quick()).unwrap().margin > 0.0);
    }

    #[test]
    fn diagonal_violation_at_ten() {
        let v = violation_search(&diag19(), &p(10.0), &quick(), 64).unwrap().expect("violation");
        assert!(v.value < -VIOLATION_TOL);
        assert_eq!(v.source, ViolationSource::Witness);
    }

    #[test]
    fn no_violation_when_dissipative() {
        assert!(violation_search(&diag19(), &p(3.0), &quick(), 16).unwrap().is_none());
    }

    #[test]
    fn oversized_cutoff_is_reported() {
        let w = worst_direction(&diag19(), &p(10.0), &quick()).unwrap();
        let grid = Grid::unit(1, 33).unwrap();
        let err = witness_testfield(&w, &diag19(), &WitnessParams::new(10.0, 128.0), &grid);
        assert!(matches!(err, Err(Error::CutoffTooLarge { .. })));
    }

    #[test]
    fn elasticity_violation_at_twenty() {
        let op = OperatorSpec::Elasticity { nu: 0.3 };
        let v = violation_search(&op, &p(20.0), &quick(), 64).unwrap().expect("violation");
        assert!(v.value < -VIOLATION_TOL);
    }

    #[test]
    fn identity_has_no_violation() {
        let op = OperatorSpec::Diagonal {
            blocks: vec![CoefficientField::constant(ComplexMatrix::identity(2), 1)],
        };
        assert!(violation_search(&op, &p(6.0), &quick(), 12).unwrap().is_none());
    }
}
