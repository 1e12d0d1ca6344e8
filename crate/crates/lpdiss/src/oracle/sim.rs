//! Method-of-lines evolution u_t = (A(x) u′)′ with zero Dirichlet data, and
//! the Lᵖ norm along the trajectory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::operator::OperatorSpec;
use crate::oracle::field::TestField;
use crate::scalar::PExponent;

/// Courant factor: dt must not exceed `CFL * h² / max‖A‖∞`.
pub const CFL: f64 = 0.4;
/// Relative growth of the norm tolerated in one step by the monotone flag.
pub const MONOTONE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub monotone: bool,
    /// Largest relative one-step increase (n₁ − n₀)/n₀; negative when the
    /// norm always decreased.
    pub worst_increase: f64,
    pub steps: usize,
    pub dt: f64,
}

struct Stepper {
    /// A at the midpoints x_{i+1/2}, i = 0..N−1.
    mid: Vec<ComplexMatrix>,
    m: usize,
    inv_h2: f64,
}

impl Stepper {
    fn rhs(&self, u: &[C64], out: &mut [C64]) {
        let m = self.m;
        let nodes = u.len() / m;
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for i in 0..nodes - 1 {
            let diff: Vec<C64> = (0..m).map(|j| u[(i + 1) * m + j] - u[i * m + j]).collect();
            let flux = self.mid[i].apply(&diff);
            for j in 0..m {
                out[i * m + j] += flux[j] * self.inv_h2;
                out[(i + 1) * m + j] -= flux[j] * self.inv_h2;
            }
        }
        for j in 0..m {
            out[j] = C64::new(0.0, 0.0);
            out[(nodes - 1) * m + j] = C64::new(0.0, 0.0);
        }
    }

    fn rk4(&self, u: &mut [C64], dt: f64, scratch: &mut [Vec<C64>; 5]) {
        let [k1, k2, k3, k4, tmp] = scratch;
        self.rhs(u, k1);
        axpy(tmp, u, k1, 0.5 * dt);
        self.rhs(tmp, k2);
        axpy(tmp, u, k2, 0.5 * dt);
        self.rhs(tmp, k3);
        axpy(tmp, u, k3, dt);
        self.rhs(tmp, k4);
        for i in 0..u.len() {
            u[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0);
        }
    }
}

fn axpy(out: &mut [C64], u: &[C64], k: &[C64], a: f64) {
    for i in 0..u.len() {
        out[i] = u[i] + k[i] * a;
    }
}

fn row_sum_norm(a: &ComplexMatrix) -> f64 {
    (0..a.dim())
        .map(|i| (0..a.dim()).map(|j| a.get(i, j).norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn lp_norm(u: &[C64], m: usize, h: f64, p: f64) -> f64 {
    let sum: f64 = u
        .chunks(m)
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().powf(p))
        .sum();
    (h * sum).powf(1.0 / p)
}

fn midpoint_coefficients(op: &OperatorSpec, u0: &TestField) -> Result<(Vec<ComplexMatrix>, f64)> {
    op.validate()?;
    if op.space_dim() != 1 || matches!(op, OperatorSpec::General2d { .. } | OperatorSpec::Elasticity { .. }) {
        return Err(Error::Unsupported("the evolution is implemented for one space variable".into()));
    }
    let grid = u0.grid();
    if grid.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: grid.dim() });
    }
    if u0.components() != op.components() {
        return Err(Error::DimensionMismatch {
            expected: op.components(),
            got: u0.components(),
        });
    }
    let h = grid.spacing()[0];
    let mid = (0..grid.nodes()[0] - 1)
        .map(|i| {
            let x = grid.lo()[0] + (i as f64 + 0.5) * h;
            op.coeff_blocks(&[x]).map(|b| b[0][0].clone())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((mid, h))
}

/// The largest step accepted by [`contraction_sim`] for `op` on the grid of `u0`.
pub fn stable_step(op: &OperatorSpec, u0: &TestField) -> Result<f64> {
    let (mid, h) = midpoint_coefficients(op, u0)?;
    let amax = mid.iter().map(row_sum_norm).fold(0.0, f64::max);
    Ok(if amax == 0.0 { f64::INFINITY } else { CFL * h * h / amax })
}

/// Integrates from `u0` up to `t_final` with classical RK4 and records the
/// Lᵖ norm after every step.
pub fn contraction_sim(op: &OperatorSpec, p: &PExponent, u0: &TestField, t_final: f64, dt: f64) -> Result<SimReport> {
    if !(t_final > 0.0 && t_final.is_finite()) || !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "final time {t_final} and step {dt} must be positive"
        )));
    }
    let bound = stable_step(op, u0)?;
    if dt > bound {
        return Err(Error::Cfl { dt, bound });
    }
    let (mid, h) = midpoint_coefficients(op, u0)?;
    let m = u0.components();
    let stepper = Stepper {
        mid,
        m,
        inv_h2: 1.0 / (h * h),
    };
    let mut u = u0.values().to_vec();
    let mut scratch: [Vec<C64>; 5] = std::array::from_fn(|_| vec![C64::new(0.0, 0.0); u.len()]);
    let steps = (t_final / dt).ceil() as usize;
    let mut times = vec![0.0];
    let mut norms = vec![lp_norm(&u, m, h, p.p())];
    let mut worst = f64::NEG_INFINITY;
    let mut t = 0.0;
    for k in 0..steps {
        let step = if k + 1 == steps { t_final - t } else { dt };
        stepper.rk4(&mut u, step, &mut scratch);
        t = if k + 1 == steps { t_final } else { t + step };
        let n1 = lp_norm(&u, m, h, p.p());
        let n0 = *norms.last().expect("initial norm");
        if n0 > 0.0 {
            worst = worst.max((n1 - n0) / n0);
        }
        times.push(t);
        norms.push(n1);
    }
    if !norms.iter().all(|n| n.is_finite()) {
        return Err(Error::NotANumber);
    }
    let worst = if worst == f64::NEG_INFINITY { 0.0 } else { worst };
    Ok(SimReport {
        times,
        norms,
        monotone: worst <= MONOTONE_TOL,
        worst_increase: worst,
        steps,
        dt,
    })
}

/// u = |v|^{2/p − 1} v, the initial datum whose norm derivative is −p times
/// the functional at v.
pub fn evolution_start(v: &TestField, p: &PExponent) -> Result<TestField> {
    let m = v.components();
    let power = 2.0 / p.p() - 1.0;
    let mut values = Vec::with_capacity(v.values().len());
    for c in v.values().chunks(m) {
        let r = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let s = if r > 0.0 { r.powf(power) } else { 0.0 };
        values.extend(c.iter().map(|z| z * s));
    }
    TestField::new(v.grid().clone(), m, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{CoefficientField, SamplingPlan};
    use crate::oracle::field::{random_testfield, Grid};
    use crate::oracle::witness::violation_search;
    use crate::rng::Rng;
    use std::f64::consts::PI;

    fn p(v: f64) -> PExponent {
        PExponent::new(v).unwrap()
    }

    fn diag19() -> OperatorSpec {
        OperatorSpec::Diagonal {
            blocks: vec![CoefficientField::constant(ComplexMatrix::diag_real(&[1.0, 9.0]), 1)],
        }
    }

    #[test]
    fn heat_equation_contracts() {
        let op = OperatorSpec::Scalar {
            field: CoefficientField::constant(ComplexMatrix::identity(1), 1),
        };
        let u0 = TestField::from_fn(Grid::unit(1, 101).unwrap(), 1, |x| vec![C64::new((PI * x[0]).sin(), 0.0)]).unwrap();
        let dt = stable_step(&op, &u0).unwrap();
        let r = contraction_sim(&op, &p(3.0), &u0, 0.05, dt).unwrap();
        assert!(r.monotone);
        // Decay rate π² of the first mode.
        let ratio = r.norms.last().unwrap() / r.norms[0];
        assert!((ratio - (-PI * PI * 0.05f64).exp()).abs() < 1e-3, "{ratio}");
    }

    #[test]
    fn dissipative_system_contracts() {
        let grid = Grid::unit(1, 129).unwrap();
        let mut rng = Rng::new(4);
        let u0 = random_testfield(&grid, 2, true, &mut rng).unwrap();
        let dt = stable_step(&diag19(), &u0).unwrap();
        assert!(contraction_sim(&diag19(), &p(3.0), &u0, 0.01, dt).unwrap().monotone);
    }

    #[test]
    fn witness_datum_grows_at_ten() {
        let plan = SamplingPlan {
            n_points: 4,
            n_directions: 256,
            ..Default::default()
        };
        let v = violation_search(&diag19(), &p(10.0), &plan, 16).unwrap().expect("violation").field;
        let u0 = evolution_start(&v, &p(10.0)).unwrap();
        let dt = stable_step(&diag19(), &u0).unwrap();
        let r = contraction_sim(&diag19(), &p(10.0), &u0, 20.0 * dt, dt).unwrap();
        assert!(!r.monotone, "worst increase {}", r.worst_increase);
    }

    #[test]
    fn step_above_the_bound_is_rejected() {
        let u0 = TestField::zeros(Grid::unit(1, 11).unwrap(), 2);
        let bound = stable_step(&diag19(), &u0).unwrap();
        assert!(matches!(
            contraction_sim(&diag19(), &p(2.0), &u0, 1.0, 2.0 * bound),
            Err(Error::Cfl { .. })
        ));
    }
}
