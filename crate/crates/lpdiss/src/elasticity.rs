//! The planar elasticity operator u ↦ Δu + (1 − 2ν)⁻¹ ∇ div u.
//!
//! Every result here is closed form in (ν, p).

use serde::{Deserialize, Serialize};

use crate::coeff::CoefficientField;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, RealMatrix};
use crate::scalar::PExponent;
use crate::system::{PInterval, ShiftMode, ShiftPath, ShiftReport, Trend};
use crate::verdict::{Scope, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElasticityParams {
    pub nu: f64,
    /// (1 − 2ν)⁻¹.
    pub gamma: f64,
    /// ν > 1 or ν < 1/2.
    pub strong_elliptic: bool,
}

impl ElasticityParams {
    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() {
            return Err(Error::InvalidParameter(format!("Poisson ratio {nu} is not finite")));
        }
        if nu == 0.5 {
            return Err(Error::InvalidParameter("the operator is undefined for nu = 1/2".into()));
        }
        Ok(Self {
            nu,
            gamma: 1.0 / (1.0 - 2.0 * nu),
            strong_elliptic: !(0.5..=1.0).contains(&nu),
        })
    }

    /// Coefficient blocks Aʰᵏ with (Aʰᵏ)ⱼₗ = δₕₖδⱼₗ + γ δⱼₕδₗₖ, indexed `[h][k]`.
    pub fn blocks(&self) -> [[RealMatrix; 2]; 2] {
        let g = self.gamma;
        let m = |rows: [[f64; 2]; 2]| RealMatrix::from_rows(&[rows[0].to_vec(), rows[1].to_vec()]).expect("2x2");
        [
            [m([[1.0 + g, 0.0], [0.0, 1.0]]), m([[0.0, g], [0.0, 0.0]])],
            [m([[0.0, 0.0], [g, 0.0]]), m([[1.0, 0.0], [0.0, 1.0 + g]])],
        ]
    }

    /// The blocks as constant fields over the plane.
    pub fn block_fields(&self) -> Vec<Vec<CoefficientField>> {
        self.blocks()
            .iter()
            .map(|row| {
                row.iter()
                    .map(|b| {
                        let rows: Vec<Vec<f64>> = (0..2).map(|i| (0..2).map(|j| b.get(i, j)).collect()).collect();
                        CoefficientField::constant(ComplexMatrix::from_real_rows(&rows).expect("2x2"), 2)
                    })
                    .collect()
            })
            .collect()
    }

    /// Right side 2(ν − 1)(2ν − 1)/(3 − 4ν)² of the criterion; −∞ at ν = 3/4.
    pub fn threshold(&self) -> f64 {
        let num = 2.0 * (self.nu - 1.0) * (2.0 * self.nu - 1.0);
        let den = (3.0 - 4.0 * self.nu).powi(2);
        if den == 0.0 {
            return if num > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
        }
        num / den
    }
}

fn half_distance_sq(p: &PExponent) -> f64 {
    (0.5 - 1.0 / p.p()).powi(2)
}

/// Decides (1/2 − 1/p)² ≤ 2(ν − 1)(2ν − 1)/(3 − 4ν)², with margin right
/// side minus left side.
///
/// The equivalent form 4/(pp′) ≥ (3 − 4ν)⁻² is evaluated as well; the two
/// margins differ by a factor 4 and must agree to 1e−12.
pub fn elasticity_check(params: &ElasticityParams, p: &PExponent) -> Result<Verdict> {
    let margin = params.threshold() - half_distance_sq(p);
    let den = (3.0 - 4.0 * params.nu).powi(2);
    if den > 0.0 {
        let alt = (p.four_over_pp() - 1.0 / den) / 4.0;
        if (alt - margin).abs() > 1e-12 * (1.0 + margin.abs()) {
            return Err(Error::Consistency(format!(
                "elasticity margins disagree: {margin:e} against {alt:e}"
            )));
        }
    }
    let mut verdict = Verdict::from_margin(margin, 1e-12, Scope::Exact);
    if !params.strong_elliptic {
        verdict.notes.push("operator is not strongly elliptic".into());
    }
    Ok(verdict)
}

/// All p satisfying the criterion: |1/2 − 1/p| ≤ √(threshold).
pub fn elasticity_p_interval(params: &ElasticityParams) -> PInterval {
    let t = params.threshold();
    if t < 0.0 {
        return PInterval::none();
    }
    PInterval::from_half_distance(t.sqrt(), false)
}

/// The admissible Poisson ratios for one exponent: ν ≤ ν₋ or ν ≥ ν₊, with
/// ν = 1/2 removed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NuSet {
    pub lower_ray_end: f64,
    /// The lower ray ends at 1/2, which is excluded.
    pub lower_open: bool,
    pub upper_ray_start: f64,
}

impl NuSet {
    pub fn contains(&self, nu: f64) -> bool {
        let below = if self.lower_open { nu < self.lower_ray_end } else { nu <= self.lower_ray_end };
        below || nu >= self.upper_ray_start
    }
}

/// Solves the criterion for ν: |3 − 4ν| ≥ √(pp′)/2.
pub fn elasticity_nu_set(p: &PExponent) -> NuSet {
    let c = p.sqrt_pp() / 2.0;
    let lower = (3.0 - c) / 4.0;
    NuSet {
        lower_ray_end: lower.min(0.5),
        lower_open: lower >= 0.5,
        upper_ray_start: (3.0 + c) / 4.0,
    }
}

fn closed_form_report(exists: bool, criterion_value: f64, k_sup: Option<f64>, notes: Vec<String>) -> ShiftReport {
    ShiftReport {
        exists,
        mode: ShiftMode::Positive,
        path: ShiftPath::Eigen,
        k_sup,
        k_min: None,
        criterion_value,
        trend: Trend::Untruncated,
        ladder: Vec::new(),
        supmu: None,
        supmu_trend: None,
        truncation: None,
        samples: 0,
        notes,
    }
}

/// Existence of k > 0 with E − kΔ dissipative, and the bound
/// k ≤ (|3 − 4ν| − √(pp′)/2)/(2|1 − 2ν|).
///
/// The criterion value is threshold − (1/2 − 1/p)², which must be positive.
/// At k = k_sup/2 the shifted operator is (1 − k) times an elasticity
/// operator with ratio ν(1 − k) + k/2; that operator is checked as well.
pub fn elasticity_shift_lower(params: &ElasticityParams, p: &PExponent) -> Result<ShiftReport> {
    let value = params.threshold() - half_distance_sq(p);
    let exists = value > 1e-12;
    let k_sup = ((3.0 - 4.0 * params.nu).abs() - p.sqrt_pp() / 2.0) / (2.0 * (1.0 - 2.0 * params.nu).abs());
    let mut notes = Vec::new();
    if exists {
        let k = k_sup / 2.0;
        if k < 1.0 {
            let reduced = ElasticityParams::new(params.nu * (1.0 - k) + k / 2.0)?;
            if !elasticity_check(&reduced, p)?.holds() {
                return Err(Error::Consistency(format!(
                    "operator shifted by k = {k} is not dissipative (reduced ratio {})",
                    reduced.nu
                )));
            }
            notes.push(format!("reduced Poisson ratio at k = {k}: {}", reduced.nu));
        }
    }
    Ok(closed_form_report(exists, value, exists.then_some(k_sup), notes))
}

/// Existence of k < 2 with kΔ − E dissipative:
/// (1/2 − 1/p)² < 2ν(2ν − 1)/(1 − 4ν)².
///
/// Only existence is reported. The answer is cross-checked against
/// [`elasticity_shift_lower`] at the ratio 1 − ν.
pub fn elasticity_shift_upper(params: &ElasticityParams, p: &PExponent) -> Result<ShiftReport> {
    let nu = params.nu;
    let den = (1.0 - 4.0 * nu).powi(2);
    if den == 0.0 {
        return Err(Error::DegenerateDenominator("nu = 1/4 makes (1 - 4 nu)^2 vanish".into()));
    }
    let value = 2.0 * nu * (2.0 * nu - 1.0) / den - half_distance_sq(p);
    let exists = value > 1e-12;
    let dual = elasticity_shift_lower(&ElasticityParams::new(1.0 - nu)?, p)?;
    if dual.exists != exists {
        return Err(Error::Consistency(format!(
            "shift at nu = {nu} and its dual at 1 - nu disagree ({value:e} against {:e})",
            dual.criterion_value
        )));
    }
    Ok(closed_form_report(exists, value, None, vec!["only existence of k is determined".into()]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn nu(v: f64) -> ElasticityParams {
        ElasticityParams::new(v).unwrap()
    }

    fn p(v: f64) -> PExponent {
        PExponent::new(v).unwrap()
    }

    #[test]
    fn check_examples() {
        let v = elasticity_check(&nu(0.3), &p(2.0)).unwrap();
        assert!(v.holds());
        assert_abs_diff_eq!(v.margin, 0.56 / 3.24, epsilon = 1e-15);
        assert!(elasticity_check(&nu(0.3), &p(12.0)).unwrap().fails());
        assert!(elasticity_check(&nu(0.7), &p(2.0)).unwrap().fails());
        assert!(ElasticityParams::new(0.5).is_err());
    }

    #[test]
    fn three_quarters_fails_everywhere() {
        for v in [1.5, 2.0, 4.0] {
            assert!(elasticity_check(&nu(0.75), &p(v)).unwrap().fails());
        }
    }

    #[test]
    fn interval_examples() {
        let i = elasticity_p_interval(&nu(0.3));
        assert_abs_diff_eq!(i.p_lo, 1.09202, epsilon = 1e-4);
        assert_abs_diff_eq!(i.p_hi, 11.8679, epsilon = 1e-4);
        assert_abs_diff_eq!(1.0 / i.p_lo + 1.0 / i.p_hi, 1.0, epsilon = 1e-12);
        assert!(elasticity_p_interval(&nu(0.7)).empty);
        let wide = elasticity_p_interval(&nu(-1e6));
        assert!(wide.p_lo < 1.001 && wide.p_hi > 1e3);
    }

    #[test]
    fn nu_set_examples() {
        let s = elasticity_nu_set(&p(2.0));
        assert!(s.contains(0.3) && s.contains(-5.0) && s.contains(1.0) && s.contains(3.0));
        assert!(!s.contains(0.5) && !s.contains(0.7));
        let narrow = elasticity_nu_set(&p(50.0));
        assert!(narrow.lower_ray_end < 0.0 && narrow.upper_ray_start > 1.5);
    }

    #[test]
    fn blocks_give_the_expected_symbol() {
        let b = nu(0.3).blocks();
        let g = nu(0.3).gamma;
        let (c, s) = (0.6, 0.8);
        let w = [[c * c, c * s], [s * c, s * s]];
        for i in 0..2 {
            for j in 0..2 {
                let sum: f64 = (0..2).flat_map(|h| (0..2).map(move |k| (h, k))).map(|(h, k)| b[h][k].get(i, j) * w[h][k]).sum();
                let xi = [c, s];
                let expect = if i == j { 1.0 } else { 0.0 } + g * xi[i] * xi[j];
                assert_abs_diff_eq!(sum, expect, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn shift_examples() {
        let r = elasticity_shift_lower(&nu(0.3), &p(2.0)).unwrap();
        assert!(r.exists);
        assert_abs_diff_eq!(r.k_sup.unwrap(), 1.0, epsilon = 1e-12);
        let edge = elasticity_p_interval(&nu(0.3)).p_hi;
        assert!(!elasticity_shift_lower(&nu(0.3), &p(edge)).unwrap().exists);
        assert!(!elasticity_shift_upper(&nu(0.3), &p(2.0)).unwrap().exists);
        assert!(elasticity_shift_upper(&nu(-1.0), &p(2.0)).unwrap().exists);
        assert!(matches!(
            elasticity_shift_upper(&nu(0.25), &p(2.0)),
            Err(Error::DegenerateDenominator(_))
        ));
    }
}
