//! Scalar operators ∇ᵗ(A(x)∇) with a complex n×n coefficient matrix.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::coeff::{field_points, CoefficientField, SamplingPlan};
use crate::error::{Error, Result};
use crate::linalg::{arccot, arccot_interval, re_im_split, sym_eigs, AngleInterval, RealMatrix};
use crate::rng::Rng;
use crate::search::minimize_over_points;
use crate::system::PInterval;
use crate::verdict::{Scope, Verdict, Witness};

/// The exponent p together with the derived constants used by every criterion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PExponent {
    p: f64,
    p_conj: f64,
    cp: f64,
}

impl PExponent {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidExponent(p));
        }
        let a = 1.0 - 2.0 / p;
        Ok(Self {
            p,
            p_conj: p / (p - 1.0),
            cp: a * a,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// p′ = p/(p−1).
    pub fn conj(&self) -> f64 {
        self.p_conj
    }

    /// (1 − 2/p)².
    pub fn cp(&self) -> f64 {
        self.cp
    }

    /// 1 − 2/p.
    pub fn skew(&self) -> f64 {
        1.0 - 2.0 / self.p
    }

    /// 4/(p p′), equal to 1 − cp.
    pub fn four_over_pp(&self) -> f64 {
        4.0 * (self.p - 1.0) / (self.p * self.p)
    }

    /// √(p p′).
    pub fn sqrt_pp(&self) -> f64 {
        self.p / (self.p - 1.0).sqrt()
    }

    /// The conjugate exponent as a `PExponent`.
    pub fn dual(&self) -> Self {
        Self::new(self.p_conj).expect("conjugate of a valid exponent is valid")
    }

    /// Whether p is treated as exactly 2 by the angle formulas.
    pub fn is_two(&self) -> bool {
        (self.p - 2.0).abs() < 1e-12
    }
}

/// Extremes of ⟨Im A ξ, ξ⟩ / ⟨Re A ξ, ξ⟩.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaBounds {
    #[serde(with = "crate::verdict::ext_real")]
    pub lambda1: f64,
    #[serde(with = "crate::verdict::ext_real")]
    pub lambda2: f64,
    /// No sampled pair has a positive real form.
    pub xi_empty: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarAngleReport {
    #[serde(with = "crate::verdict::ext_real")]
    pub lambda1: f64,
    #[serde(with = "crate::verdict::ext_real")]
    pub lambda2: f64,
    pub interval: AngleInterval,
    pub xi_empty: bool,
}

/// Symmetric parts of Re A and Im A at one point.
struct Parts {
    re: RealMatrix,
    im: RealMatrix,
    re_asymmetric: bool,
}

fn parts_at(f: &CoefficientField, x: &[f64]) -> Result<Parts> {
    let a = f.eval(x)?;
    let (re, im) = re_im_split(&a);
    let im_asym = im.asymmetry();
    if im_asym > 1e-10 * im.max_abs().max(1.0) {
        return Err(Error::HypothesisViolated(format!(
            "Im A is not symmetric at x = {x:?} (asymmetry {im_asym:e})"
        )));
    }
    let re_asymmetric = re.asymmetry() > 1e-10 * re.max_abs().max(1.0);
    Ok(Parts {
        re: re.symmetric_part(),
        im: im.symmetric_part(),
        re_asymmetric,
    })
}

fn check_square(f: &CoefficientField) -> Result<()> {
    if f.matrix_dim() != f.space_dim() {
        return Err(Error::DimensionMismatch {
            expected: f.space_dim(),
            got: f.matrix_dim(),
        });
    }
    Ok(())
}

/// min over unit ξ of 2√(p−1)⟨Sξ,ξ⟩ − |p−2||⟨Tξ,ξ⟩| with the minimising ξ.
///
/// Since a − |b| = min(a − b, a + b), the minimum is the smaller of the least
/// eigenvalues of 2√(p−1)S ∓ |p−2|T.
fn point_margin(parts: &Parts, p: &PExponent) -> Result<(f64, Vec<f64>, f64)> {
    let c = 2.0 * (p.p() - 1.0).sqrt();
    let d = (p.p() - 2.0).abs();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for sign in [-1.0, 1.0] {
        let eig = sym_eigs(&parts.re.combine(c, &parts.im, sign * d))?;
        if best.as_ref().is_none_or(|(v, _)| eig.values[0] < *v) {
            best = Some((eig.values[0], eig.vectors.column(0)));
        }
    }
    let (value, xi) = best.expect("two candidates");
    let scale = c * parts.re.max_abs() + d * parts.im.max_abs();
    Ok((value, xi, scale))
}

/// Decides |p−2||⟨Im A ξ,ξ⟩| ≤ 2√(p−1)⟨Re A ξ,ξ⟩ for all ξ ∈ Rⁿ and sampled x.
pub fn scalar_check(f: &CoefficientField, p: &PExponent, plan: &SamplingPlan) -> Result<Verdict> {
    plan.validate()?;
    check_square(f)?;
    let set = field_points(&[f], plan)?;
    let mut re_asymmetric = false;
    let worst = minimize_over_points(&set, plan.refine_iters, 3, |x| {
        let parts = parts_at(f, x)?;
        re_asymmetric |= parts.re_asymmetric;
        let (value, xi, scale) = point_margin(&parts, p)?;
        Ok((value, (xi, scale)))
    })?;
    let (xi, scale) = worst.info;
    let scope = if set.constant { Scope::Exact } else { Scope::SampledPoints };
    let mut verdict = Verdict::from_margin(worst.value, 1e-12 * scale, scope)
        .with_witness(Witness {
            x: worst.x,
            xi: Some(xi),
            margin: worst.value,
            ..Default::default()
        })
        .with_samples(worst.evals);
    verdict.truncation = set.truncation;
    if re_asymmetric {
        verdict.notes.push("Re A is not symmetric; only its symmetric part enters the condition".into());
    }
    if !set.constant {
        verdict.notes.push("holds on sampled set".into());
    }
    Ok(verdict)
}

/// Largest p at which the doubling search for the upper end stops.
const P_SEARCH_MAX: f64 = 1e12;

/// All p for which [`scalar_check`] holds, ends located by bisection to
/// 1e−12 relative.
///
/// Since 2√(p−1)/|p−2| decreases as p moves away from 2, the set is empty or
/// an interval around 2.
pub fn scalar_p_interval(f: &CoefficientField, plan: &SamplingPlan) -> Result<PInterval> {
    let holds = |q: f64| -> Result<bool> { Ok(scalar_check(f, &PExponent::new(q)?, plan)?.holds()) };
    if !holds(2.0)? {
        return Ok(PInterval::none());
    }
    let bisect = |mut inside: f64, mut outside: f64| -> Result<f64> {
        while (outside - inside).abs() > 1e-12 * inside.max(1.0) {
            let mid = 0.5 * (inside + outside);
            if holds(mid)? {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Ok(inside)
    };
    let mut out = PInterval::full();
    let near_one = 1.0 + 1e-12;
    if !holds(near_one)? {
        out.p_lo = bisect(2.0, near_one)?;
        out.closed_lo = true;
    }
    let mut outside = 4.0;
    while outside <= P_SEARCH_MAX && holds(outside)? {
        outside *= 2.0;
    }
    if outside <= P_SEARCH_MAX {
        out.p_hi = bisect(outside / 2.0, outside)?;
        out.closed_hi = true;
    }
    Ok(out)
}

/// Quotient extremes at one point. `inf > sup` encodes an empty set.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Range {
    pub inf: f64,
    pub sup: f64,
}

impl Range {
    pub const EMPTY: Range = Range {
        inf: f64::INFINITY,
        sup: f64::NEG_INFINITY,
    };

    pub fn include(&mut self, v: f64) {
        self.inf = self.inf.min(v);
        self.sup = self.sup.max(v);
    }

    pub fn is_empty(&self) -> bool {
        self.inf > self.sup
    }
}

/// Extremes of ⟨Tξ,ξ⟩/⟨Sξ,ξ⟩ over ξ with ⟨Sξ,ξ⟩ > 0. With `null_pairs`,
/// directions where the denominator vanishes and the numerator does not
/// count as ±∞.
///
/// Eigenvalues of S within `kernel_rel`·scale of zero are treated as zero.
pub(crate) fn quotient_range(
    s: &RealMatrix,
    t: &RealMatrix,
    null_pairs: bool,
    kernel_rel: f64,
    rng: &mut Rng,
    n_dirs: usize,
) -> Result<Range> {
    let scale = s.max_abs().max(t.max_abs());
    let mut out = Range::EMPTY;
    if scale == 0.0 {
        return Ok(out);
    }
    let tol = kernel_rel * scale;
    let m = s.dim();
    let eig = sym_eigs(s)?;
    if eig.values[0] < -tol {
        return sampled_quotient_range(s, t, null_pairs, rng, n_dirs);
    }
    let range_idx: Vec<usize> = (0..m).filter(|&k| eig.values[k] > tol).collect();
    let kernel_idx: Vec<usize> = (0..m).filter(|&k| eig.values[k] <= tol).collect();
    let cols: Vec<Vec<f64>> = (0..m).map(|k| eig.vectors.column(k)).collect();
    let t_in_basis = |a: usize, b: usize| -> f64 {
        let tb = t.apply(&cols[b]);
        cols[a].iter().zip(&tb).map(|(x, y)| x * y).sum()
    };
    if range_idx.is_empty() {
        if null_pairs {
            let te = sym_eigs(t)?;
            if te.values[m - 1] > tol {
                out.include(f64::INFINITY);
            }
            if te.values[0] < -tol {
                out.include(f64::NEG_INFINITY);
            }
        }
        return Ok(out);
    }
    if !kernel_idx.is_empty() {
        let coupled = kernel_idx
            .iter()
            .any(|&k| range_idx.iter().any(|&r| t_in_basis(k, r).abs() > tol));
        if coupled {
            out.include(f64::NEG_INFINITY);
            out.include(f64::INFINITY);
            return Ok(out);
        }
        let kk = kernel_idx.len();
        let mut block = RealMatrix::zeros(kk);
        for (i, &a) in kernel_idx.iter().enumerate() {
            for (j, &b) in kernel_idx.iter().enumerate() {
                block.set(i, j, t_in_basis(a, b));
            }
        }
        let be = sym_eigs(&block.symmetric_part())?;
        if be.values[kk - 1] > tol {
            out.include(f64::INFINITY);
        }
        if be.values[0] < -tol {
            out.include(f64::NEG_INFINITY);
        }
    }
    let rr = range_idx.len();
    let mut reduced = RealMatrix::zeros(rr);
    for (i, &a) in range_idx.iter().enumerate() {
        for (j, &b) in range_idx.iter().enumerate() {
            let v = t_in_basis(a, b) / (eig.values[a] * eig.values[b]).sqrt();
            reduced.set(i, j, v);
        }
    }
    let re = sym_eigs(&reduced.symmetric_part())?;
    out.include(re.values[0]);
    out.include(re.values[rr - 1]);
    Ok(out)
}

/// Fallback for an indefinite real part: random directions only.
fn sampled_quotient_range(s: &RealMatrix, t: &RealMatrix, null_pairs: bool, rng: &mut Rng, n_dirs: usize) -> Result<Range> {
    let tol = 1e-12 * s.max_abs().max(t.max_abs());
    let mut out = Range::EMPTY;
    for _ in 0..n_dirs {
        let xi = rng.unit_real(s.dim());
        let den = s.quad_form(&xi);
        let num = t.quad_form(&xi);
        if den > tol {
            out.include(num / den);
        } else if null_pairs && den.abs() <= tol && num.abs() > tol {
            out.include(if num > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY });
        }
    }
    Ok(out)
}

fn bounds_over_field(f: &CoefficientField, plan: &SamplingPlan, null_pairs: bool) -> Result<(Range, bool)> {
    plan.validate()?;
    check_square(f)?;
    let set = field_points(&[f], plan)?;
    let mut rng = Rng::derived(plan.seed, 0x5CA1);
    let mut eval = |x: &[f64]| -> Result<Range> {
        let parts = parts_at(f, x)?;
        quotient_range(&parts.re, &parts.im, null_pairs, 1e-12, &mut rng, plan.n_directions)
    };
    let mut total = Range::EMPTY;
    for x in &set.points {
        let r = eval(x)?;
        if !r.is_empty() {
            total.include(r.inf);
            total.include(r.sup);
        }
    }
    if !set.constant {
        let lo = minimize_over_points(&set, plan.refine_iters, 1, |x| {
            let r = eval(x)?;
            Ok((if r.is_empty() { f64::INFINITY } else { r.inf }, ()))
        })?;
        let hi = minimize_over_points(&set, plan.refine_iters, 1, |x| {
            let r = eval(x)?;
            Ok((if r.is_empty() { f64::INFINITY } else { -r.sup }, ()))
        })?;
        if lo.value.is_finite() || lo.value == f64::NEG_INFINITY {
            total.include(lo.value);
        }
        if hi.value.is_finite() || hi.value == f64::NEG_INFINITY {
            total.include(-hi.value);
        }
    }
    let xi_empty = total.is_empty();
    Ok((total, xi_empty))
}

/// Λ₁, Λ₂: extremes of ⟨Im A ξ,ξ⟩/⟨Re A ξ,ξ⟩ over pairs with ⟨Re A ξ,ξ⟩ > 0.
///
/// When no pair qualifies, returns Λ₁ = +∞, Λ₂ = −∞ and `xi_empty`.
pub fn scalar_lambda_bounds(f: &CoefficientField, plan: &SamplingPlan) -> Result<LambdaBounds> {
    let (r, xi_empty) = bounds_over_field(f, plan, false)?;
    Ok(LambdaBounds {
        lambda1: r.inf,
        lambda2: r.sup,
        xi_empty,
    })
}

/// The arc of arguments θ for which e^{iθ}A satisfies the scalar condition.
pub fn scalar_angle(f: &CoefficientField, p: &PExponent, plan: &SamplingPlan) -> Result<ScalarAngleReport> {
    let check = scalar_check(f, p, plan)?;
    if check.fails() {
        return Err(Error::NotDissipative {
            margin: check.margin,
            witness: check.witness.map(Box::new),
        });
    }
    let strict = scalar_lambda_bounds(f, plan)?;
    let (r, _) = bounds_over_field(f, plan, true)?;
    let interval = if p.is_two() {
        arccot_interval(r.inf, r.sup)?
    } else if r.is_empty() {
        AngleInterval::new(-PI, PI)
    } else {
        angle_from_bounds(p, r.inf, r.sup)
    };
    Ok(ScalarAngleReport {
        lambda1: r.inf,
        lambda2: r.sup,
        interval,
        xi_empty: strict.xi_empty,
    })
}

/// θ± from Λ₁, Λ₂ for p ≠ 2. A vanishing or negative denominator is read as
/// +0, which puts the corresponding end at 0.
pub fn angle_from_bounds(p: &PExponent, lambda1: f64, lambda2: f64) -> AngleInterval {
    let c = 2.0 * (p.p() - 1.0).sqrt();
    let d = (p.p() - 2.0).abs();
    let pp = p.p() * p.p();
    let recip = |den: f64| if den > 0.0 { 1.0 / den } else { f64::INFINITY };
    let lower = arccot(c / d - pp / d * recip(c + d * lambda1)) - PI;
    let upper = arccot(-c / d + pp / d * recip(c - d * lambda2));
    AngleInterval::new(lower, upper)
}

/// The arc for real coefficients, ±arctan(2√(p−1)/|p−2|); independent of A.
pub fn real_scalar_angle(p: &PExponent) -> AngleInterval {
    let half = (2.0 * (p.p() - 1.0).sqrt()).atan2((p.p() - 2.0).abs());
    AngleInterval::new(-half, half)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ComplexMatrix, C64};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_3;

    fn mixed() -> CoefficientField {
        let rows = vec![vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)], vec![C64::new(0.0, 1.0), C64::new(1.0, 0.0)]];
        CoefficientField::constant(ComplexMatrix::from_rows(&rows).unwrap(), 2)
    }

    fn p(v: f64) -> PExponent {
        PExponent::new(v).unwrap()
    }

    #[test]
    fn exponent_identities() {
        for v in [1.1, 1.5, 2.0, 3.0, 7.5, 40.0] {
            let e = p(v);
            assert_abs_diff_eq!(e.four_over_pp(), 1.0 - e.cp(), epsilon = 1e-15);
            assert_abs_diff_eq!(e.sqrt_pp(), (e.p() * e.conj()).sqrt(), epsilon = 1e-12);
        }
        assert!(PExponent::new(1.0).is_err());
        assert!(PExponent::new(f64::INFINITY).is_err());
    }

    #[test]
    fn identity_holds_with_known_margin() {
        for n in 1..4 {
            let f = CoefficientField::constant(ComplexMatrix::identity(n), n);
            let v = scalar_check(&f, &p(5.0), &SamplingPlan::default()).unwrap();
            assert!(v.holds());
            assert_abs_diff_eq!(v.margin, 4.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mixed_matrix_interval_of_exponents() {
        let plan = SamplingPlan::default();
        assert!(scalar_check(&mixed(), &p(7.0), &plan).unwrap().fails());
        assert!(scalar_check(&mixed(), &p(3.0), &plan).unwrap().holds());
    }

    #[test]
    fn mixed_matrix_exponent_ends() {
        let r = scalar_p_interval(&mixed(), &SamplingPlan::default()).unwrap();
        assert_abs_diff_eq!(r.p_lo, 4.0 - 2.0 * 2f64.sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(r.p_hi, 4.0 + 2.0 * 2f64.sqrt(), epsilon = 1e-9);
        assert!(r.closed_lo && r.closed_hi);
        let real = CoefficientField::constant(ComplexMatrix::identity(2), 2);
        assert_eq!(scalar_p_interval(&real, &SamplingPlan::default()).unwrap(), PInterval::full());
    }

    #[test]
    fn asymmetric_imaginary_part_is_rejected() {
        let rows = vec![vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)], vec![C64::new(0.0, -1.0), C64::new(1.0, 0.0)]];
        let f = CoefficientField::constant(ComplexMatrix::from_rows(&rows).unwrap(), 2);
        assert!(matches!(
            scalar_check(&f, &p(2.0), &SamplingPlan::default()),
            Err(Error::HypothesisViolated(_))
        ));
    }

    #[test]
    fn lambda_bound_examples() {
        let plan = SamplingPlan::default();
        let real = CoefficientField::constant(ComplexMatrix::diag_real(&[1.0, 3.0]), 2);
        let b = scalar_lambda_bounds(&real, &plan).unwrap();
        assert_eq!((b.lambda1, b.lambda2, b.xi_empty), (0.0, 0.0, false));

        let b = scalar_lambda_bounds(&mixed(), &plan).unwrap();
        assert_abs_diff_eq!(b.lambda1, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.lambda2, 1.0, epsilon = 1e-12);

        let imag = CoefficientField::constant(ComplexMatrix::identity(2).scale(C64::new(0.0, 1.0)), 2);
        let b = scalar_lambda_bounds(&imag, &plan).unwrap();
        assert!(b.xi_empty);
        assert_eq!((b.lambda1, b.lambda2), (f64::INFINITY, f64::NEG_INFINITY));
    }

    #[test]
    fn angle_examples() {
        let plan = SamplingPlan::default();
        let real = CoefficientField::constant(ComplexMatrix::diag_real(&[1.0, 3.0]), 2);
        let a = scalar_angle(&real, &p(4.0), &plan).unwrap().interval;
        assert_abs_diff_eq!(a.theta_minus, -FRAC_PI_3, epsilon = 1e-12);
        assert_abs_diff_eq!(a.theta_plus, FRAC_PI_3, epsilon = 1e-12);

        let a = scalar_angle(&real, &p(2.0), &plan).unwrap().interval;
        assert_abs_diff_eq!(a.theta_plus, PI / 2.0, epsilon = 1e-15);

        let a = scalar_angle(&mixed(), &p(2.0), &plan).unwrap().interval;
        assert_abs_diff_eq!(a.theta_minus, -PI / 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.theta_plus, PI / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn purely_imaginary_identity_at_two() {
        let imag = CoefficientField::constant(ComplexMatrix::identity(2).scale(C64::new(0.0, 1.0)), 2);
        let r = scalar_angle(&imag, &p(2.0), &SamplingPlan::default()).unwrap();
        assert!(r.xi_empty);
        assert_abs_diff_eq!(r.interval.theta_minus, -PI);
        assert_abs_diff_eq!(r.interval.theta_plus, 0.0);
    }

    #[test]
    fn angle_requires_dissipativity() {
        let err = scalar_angle(&mixed(), &p(7.0), &SamplingPlan::default()).unwrap_err();
        match err {
            Error::NotDissipative { witness, .. } => assert!(witness.is_some()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn real_angle_examples() {
        assert_abs_diff_eq!(real_scalar_angle(&p(4.0)).theta_plus, FRAC_PI_3, epsilon = 1e-15);
        assert_abs_diff_eq!(real_scalar_angle(&p(2.0)).theta_plus, PI / 2.0);
        let a = real_scalar_angle(&p(3.0));
        let b = real_scalar_angle(&p(1.5));
        assert_abs_diff_eq!(a.theta_plus, b.theta_plus, epsilon = 1e-15);
    }

    #[test]
    fn variable_field_is_sampled() {
        use crate::coeff::DomainBox;
        use std::collections::BTreeMap;
        let rows = vec![vec!["1", "i*x1"], vec!["i*x1", "1"]];
        let f = CoefficientField::expression(&rows, BTreeMap::new(), DomainBox::bounded(&[0.0, 0.0], &[1.0, 1.0]).unwrap()).unwrap();
        // At x1 = 1 this is the mixed matrix, which fails at p = 7.
        let v = scalar_check(&f, &p(7.0), &SamplingPlan::default()).unwrap();
        assert!(v.fails());
        assert_eq!(v.scope, Scope::SampledPoints);
        assert!(v.witness.unwrap().x[0] > 0.9);
        let v = scalar_check(&f, &p(3.0), &SamplingPlan::default()).unwrap();
        assert!(v.holds());
    }
}
