//! Systems u ↦ Σₕ ∂ₕ(Aʰ(x) ∂ₕ u) with m×m coefficient blocks, and the
//! necessary condition for general two-dimensional systems.

mod forms;
pub(crate) mod search;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use forms::{min_p_over_lambda, min_p_value, min_shift_quotient, p_form_matrix, pq_values, q_form_matrix, PQValue};

use crate::coeff::{field_points, CoefficientField, PointSet, SamplingPlan};
use crate::error::{Error, Result};
use crate::linalg::{arccot_interval, sym_eigs, AngleInterval, ComplexMatrix, RealMatrix, C64};
use crate::rng::Rng;
use crate::scalar::{quotient_range, PExponent};
use crate::search::minimize_over_points;
use crate::verdict::{ext_real, ext_real_opt, Scope, Verdict, Witness};
pub(crate) use forms::from_real;
use search::search_min;

/// A range of exponents p.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PInterval {
    pub p_lo: f64,
    #[serde(with = "ext_real")]
    pub p_hi: f64,
    pub closed_lo: bool,
    pub closed_hi: bool,
    /// No exponent qualifies.
    #[serde(default)]
    pub empty: bool,
}

impl PInterval {
    /// The whole range (1, ∞).
    pub fn full() -> Self {
        Self {
            p_lo: 1.0,
            p_hi: f64::INFINITY,
            closed_lo: false,
            closed_hi: false,
            empty: false,
        }
    }

    pub fn closed(p_lo: f64, p_hi: f64) -> Self {
        Self {
            p_lo,
            p_hi,
            closed_lo: true,
            closed_hi: true,
            empty: false,
        }
    }

    /// The empty interval, written as the open interval (2, 2).
    pub fn none() -> Self {
        Self {
            p_lo: 2.0,
            p_hi: 2.0,
            closed_lo: false,
            closed_hi: false,
            empty: true,
        }
    }

    pub fn contains(&self, p: f64) -> bool {
        if self.empty {
            return false;
        }
        let above = if self.closed_lo { p >= self.p_lo } else { p > self.p_lo };
        let below = if self.closed_hi { p <= self.p_hi } else { p < self.p_hi };
        above && below
    }

    /// Interval of p with |1/2 − 1/p| ≤ `bound` (strictly below when `strict`).
    pub fn from_half_distance(bound: f64, strict: bool) -> Self {
        if bound < 0.0 || (strict && bound == 0.0) {
            return Self::none();
        }
        if bound >= 0.5 {
            return Self::full();
        }
        Self {
            p_lo: 1.0 / (0.5 + bound),
            p_hi: 1.0 / (0.5 - bound),
            closed_lo: !strict,
            closed_hi: !strict,
            empty: false,
        }
    }
}

fn check_blocks(fields: &[CoefficientField]) -> Result<usize> {
    let Some(first) = fields.first() else {
        return Err(Error::InvalidField("at least one coefficient block is required".into()));
    };
    let m = first.matrix_dim();
    for f in fields {
        if f.matrix_dim() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: f.matrix_dim(),
            });
        }
    }
    if fields.len() != first.space_dim() {
        return Err(Error::DimensionMismatch {
            expected: first.space_dim(),
            got: fields.len(),
        });
    }
    Ok(m)
}

fn points_for(fields: &[CoefficientField], plan: &SamplingPlan) -> Result<PointSet> {
    plan.validate()?;
    let refs: Vec<&CoefficientField> = fields.iter().collect();
    field_points(&refs, plan)
}

fn sampled_scope(set: &PointSet) -> Scope {
    if set.constant {
        Scope::SampledDirections
    } else {
        Scope::SampledPoints
    }
}

/// Combines per-block verdicts: the worst block decides.
fn overall(components: Vec<Verdict>, scope: Scope, set: &PointSet) -> Verdict {
    let worst = components
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.margin.total_cmp(&b.1.margin))
        .map(|(i, _)| i)
        .expect("at least one block");
    let w = &components[worst];
    let mut out = Verdict {
        status: w.status,
        margin: w.margin,
        witness: w.witness.clone(),
        boundary: w.boundary,
        scope,
        samples: components.iter().map(|c| c.samples).sum(),
        truncation: set.truncation,
        components: Vec::new(),
        notes: Vec::new(),
    };
    if components.iter().any(|c| c.fails()) {
        out.status = crate::verdict::Status::Fails;
    }
    if !set.constant {
        out.notes.push("holds on sampled set".into());
    }
    if components.len() > 1 {
        out.components = components;
    }
    out
}

/// Decides P(x, λ, ω) ≥ 0 for every block h, sampled x and unit λ, ω.
///
/// For each ω the minimum over λ is the least eigenvalue of the quadratic
/// form of P in λ, so only x and ω are sampled.
pub fn system_check(fields: &[CoefficientField], p: &PExponent, plan: &SamplingPlan) -> Result<Verdict> {
    let m = check_blocks(fields)?;
    let set = points_for(fields, plan)?;
    let scope = sampled_scope(&set);
    let mut components = Vec::with_capacity(fields.len());
    for (h, field) in fields.iter().enumerate() {
        let found = search_min(
            &set,
            m,
            0,
            plan,
            h as u64,
            |x| field.eval(x),
            |a, _, omega| min_p_value(a, p, omega).unwrap_or(f64::INFINITY),
        )?;
        let a = field.eval(&found.best.x)?;
        let (value, lambda) = min_p_over_lambda(&a, p, &found.best.omega)?;
        let band = 1e-9 * a.max_abs().max(f64::MIN_POSITIVE);
        components.push(
            Verdict::from_margin(value, band, scope)
                .with_witness(Witness {
                    h: Some(h),
                    x: found.best.x,
                    lambda: Some(lambda),
                    omega: Some(found.best.omega),
                    margin: value,
                    ..Default::default()
                })
                .with_samples(found.evals),
        );
    }
    Ok(overall(components, scope, &set))
}

/// Eigenvalue extremes μ₁ ≤ μₘ of a real symmetric, positive semidefinite sample.
fn symmetric_extremes(a: &ComplexMatrix, x: &[f64], h: usize) -> Result<(f64, f64)> {
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    if !a.is_real() || a.asymmetry() > 1e-12 * scale {
        return Err(Error::HypothesisViolated(format!(
            "block {h} is not real symmetric at x = {x:?}"
        )));
    }
    let m = a.dim();
    let re = RealMatrix::new(m, a.entries().iter().map(|z| z.re).collect())?;
    let eig = sym_eigs(&re.symmetric_part())?;
    let (mu1, mum) = (eig.values[0], eig.values[m - 1]);
    if mu1 < -1e-12 * scale {
        return Err(Error::HypothesisViolated(format!(
            "block {h} is indefinite at x = {x:?} (least eigenvalue {mu1:e})"
        )));
    }
    Ok((mu1.max(0.0), mum))
}

/// The eigenvalue condition (1/2 − 1/p)²(μ₁ + μₘ)² ≤ μ₁μₘ for real symmetric,
/// positive semidefinite blocks.
pub fn sym_system_check(fields: &[CoefficientField], p: &PExponent, plan: &SamplingPlan) -> Result<Verdict> {
    let m = check_blocks(fields)?;
    let set = points_for(fields, plan)?;
    let scope = if set.constant { Scope::Exact } else { Scope::SampledPoints };
    let k2 = (0.5 - 1.0 / p.p()).powi(2);
    let mut components = Vec::with_capacity(fields.len());
    for (h, field) in fields.iter().enumerate() {
        let worst = minimize_over_points(&set, plan.refine_iters, 3, |x| {
            let a = field.eval(x)?;
            let (mu1, mum) = symmetric_extremes(&a, x, h)?;
            let sum2 = (mu1 + mum).powi(2);
            let margin = mu1 * mum - k2 * sum2;
            if m == 2 {
                let det = (a.get(0, 0) * a.get(1, 1) - a.get(0, 1) * a.get(1, 0)).re;
                let tr = (a.get(0, 0) + a.get(1, 1)).re;
                let alt = det - k2 * tr * tr;
                if (alt - margin).abs() > 1e-10 * sum2.max(1.0) {
                    return Err(Error::Consistency(format!(
                        "eigenvalue margin {margin:e} and trace/determinant margin {alt:e} disagree at x = {x:?}"
                    )));
                }
            }
            Ok((margin, sum2))
        })?;
        let band = 1e-12 * worst.info;
        components.push(
            Verdict::from_margin(worst.value, band, scope)
                .with_witness(Witness {
                    h: Some(h),
                    x: worst.x,
                    margin: worst.value,
                    ..Default::default()
                })
                .with_samples(worst.evals),
        );
    }
    Ok(overall(components, scope, &set))
}

/// All p with |1/2 − 1/p| ≤ √(μ₁μₘ)/(μ₁ + μₘ).
pub fn sym_p_interval(mu1: f64, mum: f64) -> Result<PInterval> {
    if !(mu1.is_finite() && mum.is_finite()) || mu1 < 0.0 || mum < mu1 {
        return Err(Error::InvalidParameter(format!(
            "eigenvalues must satisfy 0 <= mu1 <= mum, got ({mu1}, {mum})"
        )));
    }
    if mum == 0.0 {
        return Ok(PInterval::full());
    }
    let b = (mu1 * mum).sqrt() / (mu1 + mum);
    Ok(PInterval::from_half_distance(b, false))
}

/// Smallest eigenvalue of the Hermitian part over sampled x: Re⟨Aλ,λ⟩ ≥ 0
/// is necessary for dissipativity.
pub fn positivity_necessary(fields: &[CoefficientField], plan: &SamplingPlan) -> Result<Verdict> {
    let m = check_blocks(fields)?;
    let set = points_for(fields, plan)?;
    let mut components = Vec::with_capacity(fields.len());
    for (h, field) in fields.iter().enumerate() {
        let worst = minimize_over_points(&set, plan.refine_iters, 3, |x| {
            let a = field.eval(x)?;
            let mut herm = RealMatrix::zeros(2 * m);
            for i in 0..m {
                for j in 0..m {
                    let z = 0.5 * (a.get(i, j) + a.get(j, i).conj());
                    herm.set(i, j, z.re);
                    herm.set(m + i, m + j, z.re);
                    herm.set(i, m + j, -z.im);
                    herm.set(m + i, j, z.im);
                }
            }
            let eig = sym_eigs(&herm)?;
            Ok((eig.values[0], (from_real(&eig.vectors.column(0)), a.max_abs())))
        })?;
        let (lambda, scale) = worst.info;
        components.push(
            Verdict::from_margin(worst.value, 1e-12 * scale, Scope::NecessaryOnly)
                .with_witness(Witness {
                    h: Some(h),
                    x: worst.x,
                    lambda: Some(lambda),
                    margin: worst.value,
                    ..Default::default()
                })
                .with_samples(worst.evals),
        );
    }
    let mut out = overall(components, Scope::NecessaryOnly, &set);
    out.notes.push("necessary condition only".into());
    Ok(out)
}

/// Which variant of the shift A − k·I·d²/dx² is examined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftMode {
    /// Some k > 0.
    Positive,
    /// Some real k.
    AnyReal,
    /// Some k > 0 for positive semidefinite blocks, through the product
    /// condition and the boundedness of the largest eigenvalue.
    PositiveSemidefinite,
}

/// How the shift criterion was evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftPath {
    /// Closed-form eigenvalue expression for real symmetric blocks.
    Eigen,
    /// Sampled minimisation of P over (x, λ, ω).
    Sampled,
}

/// Behaviour of a sampled extremum as the truncation radius grows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    /// Bounded domain or constant coefficients: a single evaluation.
    Untruncated,
    Settled,
    /// Positive infimum shrinking geometrically towards zero.
    DecaysToZero,
    /// Infimum diverging to −∞.
    DivergesDown,
    /// Supremum diverging to +∞.
    DivergesUp,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderStep {
    pub radius: f64,
    #[serde(with = "ext_real")]
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport {
    pub exists: bool,
    pub mode: ShiftMode,
    pub path: ShiftPath,
    /// Largest admissible k, when the variant determines one.
    #[serde(with = "ext_real_opt")]
    pub k_sup: Option<f64>,
    /// Smallest admissible k for the k·I·d²/dx² − A family.
    #[serde(with = "ext_real_opt", default, skip_serializing_if = "Option::is_none")]
    pub k_min: Option<f64>,
    /// The infimum or supremum tested, at the largest truncation radius.
    #[serde(with = "ext_real")]
    pub criterion_value: f64,
    pub trend: Trend,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ladder: Vec<LadderStep>,
    /// Supremum of the largest eigenvalue, when it enters the decision.
    #[serde(with = "ext_real_opt", default, skip_serializing_if = "Option::is_none")]
    pub supmu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supmu_trend: Option<Trend>,
    pub truncation: Option<f64>,
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Truncation radii R/100, R/10, R that leave a nonempty box, or `None` for
/// bounded and constant problems.
fn truncation_ladder(fields: &[CoefficientField], plan: &SamplingPlan) -> Result<Option<Vec<f64>>> {
    let set = points_for(fields, plan)?;
    let Some(r) = set.truncation else {
        return Ok(None);
    };
    let radii: Vec<f64> = [r / 100.0, r / 10.0, r]
        .into_iter()
        .filter(|&radius| fields.iter().all(|f| f.with_truncation(radius).is_ok()))
        .collect();
    if radii.len() < 2 {
        return Err(Error::InvalidDomain(format!(
            "truncation radius {r} is too small to examine the behaviour at infinity"
        )));
    }
    Ok(Some(radii))
}

#[derive(Clone, Copy, PartialEq)]
enum Extremum {
    Inf,
    Sup,
}

fn classify(values: &[f64], kind: Extremum) -> Trend {
    if values.len() < 2 {
        return Trend::Untruncated;
    }
    let pairs = || values.windows(2).map(|w| (w[0], w[1]));
    match kind {
        Extremum::Inf => {
            if values.contains(&f64::NEG_INFINITY) {
                Trend::DivergesDown
            } else if values.iter().all(|v| *v > 0.0) && pairs().all(|(a, b)| b <= 0.5 * a) {
                Trend::DecaysToZero
            } else if values.iter().all(|v| *v < 0.0) && pairs().all(|(a, b)| b <= 2.0 * a) {
                Trend::DivergesDown
            } else {
                Trend::Settled
            }
        }
        Extremum::Sup => {
            if values.contains(&f64::INFINITY)
                || (values.iter().all(|v| *v > 0.0) && pairs().all(|(a, b)| b >= 2.0 * a))
            {
                Trend::DivergesUp
            } else {
                Trend::Settled
            }
        }
    }
}

/// Evaluates `eval` on the untruncated problem or along the truncation ladder.
fn along_ladder<F>(fields: &[CoefficientField], plan: &SamplingPlan, mut eval: F) -> Result<(Vec<LadderStep>, Option<f64>)>
where
    F: FnMut(&[CoefficientField]) -> Result<f64>,
{
    match truncation_ladder(fields, plan)? {
        None => Ok((
            vec![LadderStep {
                radius: f64::NAN,
                value: eval(fields)?,
            }],
            None,
        )),
        Some(radii) => {
            let mut steps = Vec::with_capacity(radii.len());
            for &radius in &radii {
                let cut: Vec<CoefficientField> =
                    fields.iter().map(|f| f.with_truncation(radius)).collect::<Result<_>>()?;
                steps.push(LadderStep {
                    radius,
                    value: eval(&cut)?,
                });
            }
            let last = radii.last().copied();
            Ok((steps, last))
        }
    }
}

fn all_real_symmetric(fields: &[CoefficientField], plan: &SamplingPlan) -> Result<bool> {
    let set = points_for(fields, plan)?;
    for field in fields {
        for x in &set.points {
            let a = field.eval(x)?;
            if !a.is_real() || a.asymmetry() > 1e-12 * a.max_abs().max(f64::MIN_POSITIVE) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn real_eigen_extremes(a: &ComplexMatrix) -> Result<(f64, f64)> {
    let m = a.dim();
    let re = RealMatrix::new(m, a.entries().iter().map(|z| z.re).collect())?;
    let eig = sym_eigs(&re.symmetric_part())?;
    Ok((eig.values[0], eig.values[m - 1]))
}

/// Infimum over blocks and sampled x of a function of the eigenvalue extremes.
fn inf_over_eigen<F>(fields: &[CoefficientField], plan: &SamplingPlan, samples: &mut usize, g: F) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    let set = points_for(fields, plan)?;
    let mut best = f64::INFINITY;
    for field in fields {
        let worst = minimize_over_points(&set, plan.refine_iters, 3, |x| {
            let (mu1, mum) = real_eigen_extremes(&field.eval(x)?)?;
            Ok((g(mu1, mum), ()))
        })?;
        *samples += worst.evals;
        best = best.min(worst.value);
    }
    Ok(best)
}

/// Infimum over blocks, sampled x and unit ω of `obj(A(x), ω)`.
fn inf_over_pairs<F>(fields: &[CoefficientField], plan: &SamplingPlan, samples: &mut usize, obj: F) -> Result<f64>
where
    F: Fn(&ComplexMatrix, &[C64]) -> f64,
{
    let m = fields[0].matrix_dim();
    let set = points_for(fields, plan)?;
    let mut best = f64::INFINITY;
    for (h, field) in fields.iter().enumerate() {
        let found = search_min(&set, m, 0, plan, 0x5_0000 + h as u64, |x| field.eval(x), |a, _, w| obj(a, w))?;
        *samples += found.evals;
        best = best.min(found.best.value);
    }
    Ok(best)
}

/// Tolerance below which a sampled infimum counts as nonpositive.
fn shift_tol(fields: &[CoefficientField], plan: &SamplingPlan) -> Result<f64> {
    let set = points_for(fields, plan)?;
    let mut scale: f64 = 0.0;
    for f in fields {
        for x in &set.points {
            scale = scale.max(f.eval(x)?.max_abs());
        }
    }
    Ok(1e-9 * scale.max(f64::MIN_POSITIVE))
}

/// Existence of k with A − k·I·d²/dx² dissipative, in the selected variant.
///
/// Real symmetric blocks use the eigenvalue expression
/// (1 + √(pp′)/2)μ₁ + (1 − √(pp′)/2)μₘ; other blocks use the infimum of P
/// over unit (λ, ω). On unbounded domains the infimum is followed along the
/// truncation radii R/100, R/10, R to tell decay to zero from a positive limit.
pub fn shift_lower_bound(
    fields: &[CoefficientField],
    p: &PExponent,
    plan: &SamplingPlan,
    mode: ShiftMode,
) -> Result<ShiftReport> {
    check_blocks(fields)?;
    let path = if all_real_symmetric(fields, plan)? {
        ShiftPath::Eigen
    } else {
        ShiftPath::Sampled
    };
    if mode == ShiftMode::PositiveSemidefinite && path != ShiftPath::Eigen {
        return Err(Error::HypothesisViolated(
            "the positive semidefinite variant needs real symmetric blocks".into(),
        ));
    }
    let s = p.sqrt_pp();
    let mut samples = 0;
    let tol = shift_tol(fields, plan)?;
    let mut notes = Vec::new();
    let (ladder, truncation) = match (mode, path) {
        (ShiftMode::PositiveSemidefinite, _) => along_ladder(fields, plan, |f| {
            let k2 = (0.5 - 1.0 / p.p()).powi(2);
            inf_over_eigen(f, plan, &mut samples, |a, b| {
                if a < -1e-12 * b.abs().max(f64::MIN_POSITIVE) {
                    f64::NEG_INFINITY
                } else {
                    a * b - k2 * (a + b).powi(2)
                }
            })
        })?,
        (_, ShiftPath::Eigen) => along_ladder(fields, plan, |f| {
            inf_over_eigen(f, plan, &mut samples, |a, b| (1.0 + s / 2.0) * a + (1.0 - s / 2.0) * b)
        })?,
        (_, ShiftPath::Sampled) => along_ladder(fields, plan, |f| {
            inf_over_pairs(f, plan, &mut samples, |a, w| {
                min_p_value(a, p, w).unwrap_or(f64::INFINITY)
            })
        })?,
    };
    let values: Vec<f64> = ladder.iter().map(|s| s.value).collect();
    let value = *values.last().expect("nonempty ladder");
    let trend = classify(&values, Extremum::Inf);
    let positive = value > tol && trend != Trend::DecaysToZero && trend != Trend::DivergesDown;
    let mut supmu = None;
    let mut supmu_trend = None;
    let (exists, k_sup) = match mode {
        ShiftMode::Positive => {
            let k = match path {
                ShiftPath::Eigen => value / 2.0,
                ShiftPath::Sampled => {
                    let mut n = 0;
                    let q = inf_over_pairs(&cut_to(fields, truncation)?, plan, &mut n, |a, w| {
                        min_shift_quotient(a, p, w).unwrap_or(f64::INFINITY)
                    })?;
                    samples += n;
                    q
                }
            };
            (positive, positive.then_some(k))
        }
        ShiftMode::AnyReal => {
            let finite = value.is_finite() && trend != Trend::DivergesDown;
            let k = match path {
                ShiftPath::Eigen => value / 2.0,
                ShiftPath::Sampled => {
                    let mut n = 0;
                    let q = inf_over_pairs(&cut_to(fields, truncation)?, plan, &mut n, |a, w| {
                        min_shift_quotient(a, p, w).unwrap_or(f64::INFINITY)
                    })?;
                    samples += n;
                    q
                }
            };
            (finite, finite.then_some(k))
        }
        ShiftMode::PositiveSemidefinite => {
            let (steps, _) = along_ladder(fields, plan, |f| {
                inf_over_eigen(f, plan, &mut samples, |_, b| -b).map(|v| -v)
            })?;
            let sups: Vec<f64> = steps.iter().map(|s| s.value).collect();
            let t = classify(&sups, Extremum::Sup);
            supmu = sups.last().copied();
            supmu_trend = Some(t);
            let bounded = t != Trend::DivergesUp;
            if !bounded {
                notes.push("largest eigenvalue is unbounded".into());
            }
            (positive && bounded, None)
        }
    };
    if let Some(r) = truncation {
        notes.push(format!("unbounded domain examined up to truncation radius {r}"));
    }
    Ok(ShiftReport {
        exists,
        mode,
        path,
        k_sup,
        k_min: None,
        criterion_value: value,
        trend,
        ladder: if truncation.is_some() { ladder } else { Vec::new() },
        supmu,
        supmu_trend,
        truncation,
        samples,
        notes,
    })
}

fn cut_to(fields: &[CoefficientField], truncation: Option<f64>) -> Result<Vec<CoefficientField>> {
    match truncation {
        None => Ok(fields.to_vec()),
        Some(r) => fields.iter().map(|f| f.with_truncation(r)).collect(),
    }
}

/// Existence of k with k·I·d²/dx² − A dissipative: the supremum of
/// (1 − √(pp′)/2)μ₁ + (1 + √(pp′)/2)μₘ must be finite.
///
/// For blocks that are not real symmetric the supremum of P over unit
/// (λ, ω) is examined instead.
pub fn shift_upper_bound(fields: &[CoefficientField], p: &PExponent, plan: &SamplingPlan) -> Result<ShiftReport> {
    check_blocks(fields)?;
    let path = if all_real_symmetric(fields, plan)? {
        ShiftPath::Eigen
    } else {
        ShiftPath::Sampled
    };
    let s = p.sqrt_pp();
    let mut samples = 0;
    let mut notes = Vec::new();
    let (ladder, truncation) = match path {
        ShiftPath::Eigen => along_ladder(fields, plan, |f| {
            inf_over_eigen(f, plan, &mut samples, |a, b| -((1.0 - s / 2.0) * a + (1.0 + s / 2.0) * b)).map(|v| -v)
        })?,
        ShiftPath::Sampled => along_ladder(fields, plan, |f| {
            inf_over_pairs(f, plan, &mut samples, |a, w| {
                min_p_value(&a.scale(C64::new(-1.0, 0.0)), p, w).unwrap_or(f64::INFINITY)
            })
            .map(|v| -v)
        })?,
    };
    let values: Vec<f64> = ladder.iter().map(|s| s.value).collect();
    let value = *values.last().expect("nonempty ladder");
    let trend = classify(&values, Extremum::Sup);
    let exists = value.is_finite() && trend != Trend::DivergesUp;
    let k_min = match path {
        ShiftPath::Eigen => value / 2.0,
        ShiftPath::Sampled => {
            let mut n = 0;
            let q = inf_over_pairs(&cut_to(fields, truncation)?, plan, &mut n, |a, w| {
                min_shift_quotient(&a.scale(C64::new(-1.0, 0.0)), p, w).unwrap_or(f64::INFINITY)
            })?;
            samples += n;
            -q
        }
    };
    let mut supmu = None;
    let mut supmu_trend = None;
    if path == ShiftPath::Eigen {
        let nonneg = inf_over_eigen(&cut_to(fields, truncation)?, plan, &mut samples, |a, _| a)? >= -1e-12;
        if nonneg {
            let (steps, _) = along_ladder(fields, plan, |f| {
                inf_over_eigen(f, plan, &mut samples, |_, b| -b).map(|v| -v)
            })?;
            let sups: Vec<f64> = steps.iter().map(|s| s.value).collect();
            supmu = sups.last().copied();
            supmu_trend = Some(classify(&sups, Extremum::Sup));
        }
    }
    if let Some(r) = truncation {
        notes.push(format!("unbounded domain examined up to truncation radius {r}"));
    }
    if !exists {
        notes.push("expression grows without bound".into());
    }
    Ok(ShiftReport {
        exists,
        mode: ShiftMode::Positive,
        path,
        k_sup: None,
        k_min: exists.then_some(k_min),
        criterion_value: value,
        trend,
        ladder: if truncation.is_some() { ladder } else { Vec::new() },
        supmu,
        supmu_trend,
        truncation,
        samples,
        notes,
    })
}

/// max over the unit sphere of (Σ μₕωₕ²)(Σ μₕ⁻¹ωₕ²), which equals
/// (μ₁ + μₘ)²/(4μ₁μₘ).
pub fn sphere_product_max(mu: &[f64]) -> Result<f64> {
    if mu.is_empty() {
        return Err(Error::InvalidParameter("empty eigenvalue list".into()));
    }
    if mu.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidParameter(format!("eigenvalues must be positive, got {mu:?}")));
    }
    if mu.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter(format!("eigenvalues must be ascending, got {mu:?}")));
    }
    let (a, b) = (mu[0], mu[mu.len() - 1]);
    Ok((a + b).powi(2) / (4.0 * a * b))
}

/// Angle data of one coefficient block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockAngle {
    #[serde(with = "ext_real")]
    pub qp_inf: f64,
    #[serde(with = "ext_real")]
    pub qp_sup: f64,
    pub interval: AngleInterval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemAngleReport {
    pub interval: AngleInterval,
    pub blocks: Vec<BlockAngle>,
    pub samples: usize,
}

/// Arguments θ for which e^{iθ}A stays dissipative, from the extremes of Q/P
/// over the pairs (λ, ω) with P² + Q² > 0.
///
/// Pairs with P = 0 and Q ≠ 0 count as Q/P = ±∞. The operator must be
/// dissipative, otherwise the formulas do not apply and an error is returned.
pub fn system_angle(fields: &[CoefficientField], p: &PExponent, plan: &SamplingPlan) -> Result<SystemAngleReport> {
    let check = system_check(fields, p, plan)?;
    if check.fails() {
        return Err(Error::NotDissipative {
            margin: check.margin,
            witness: check.witness.map(Box::new),
        });
    }
    let m = check_blocks(fields)?;
    let set = points_for(fields, plan)?;
    let mut rng = Rng::derived(plan.seed, 0xA6);
    let mut interval = AngleInterval::new(-PI, PI);
    let mut blocks = Vec::with_capacity(fields.len());
    let mut samples = check.samples;
    for (h, field) in fields.iter().enumerate() {
        let mut range = |a: &ComplexMatrix, w: &[C64]| {
            quotient_range(&p_form_matrix(a, p, w), &q_form_matrix(a, p, w), true, 1e-9, &mut rng, 64)
        };
        let lo = search_min(&set, m, 0, plan, 0xA000 + h as u64, |x| field.eval(x), |a, _, w| {
            range(a, w).map_or(f64::INFINITY, |r| if r.is_empty() { f64::INFINITY } else { r.inf })
        })?;
        let hi = search_min(&set, m, 0, plan, 0xB000 + h as u64, |x| field.eval(x), |a, _, w| {
            range(a, w).map_or(f64::INFINITY, |r| if r.is_empty() { f64::INFINITY } else { -r.sup })
        })?;
        samples += lo.evals + hi.evals;
        let (qp_inf, qp_sup) = (lo.best.value, -hi.best.value);
        let block = if qp_inf > qp_sup {
            AngleInterval::new(-PI, PI)
        } else {
            arccot_interval(qp_inf, qp_sup)?
        };
        interval = interval.intersect(&block);
        blocks.push(BlockAngle {
            qp_inf,
            qp_sup,
            interval: block,
        });
    }
    Ok(SystemAngleReport {
        interval,
        blocks,
        samples,
    })
}

/// Necessary condition for u ↦ Σₕₖ ∂ₕ(Aʰᵏ ∂ₖ u) in two dimensions:
/// P computed from B(ξ) = Σ Aʰᵏξₕξₖ must be nonnegative for every unit ξ.
///
/// `blocks[h][k]` holds Aʰᵏ. Passing proves nothing; failing rules out
/// dissipativity.
pub fn general2d_necessary(blocks: &[Vec<CoefficientField>], p: &PExponent, plan: &SamplingPlan) -> Result<Verdict> {
    if blocks.len() != 2 || blocks.iter().any(|row| row.len() != 2) {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: blocks.len(),
        });
    }
    let flat: Vec<&CoefficientField> = blocks.iter().flatten().collect();
    let m = flat[0].matrix_dim();
    for f in &flat {
        if f.space_dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: f.space_dim(),
            });
        }
        if f.matrix_dim() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: f.matrix_dim(),
            });
        }
    }
    plan.validate()?;
    let set = field_points(&flat, plan)?;
    let eval_all = |x: &[f64]| -> Result<Vec<ComplexMatrix>> { flat.iter().map(|f| f.eval(x)).collect() };
    let found = search_min(&set, m, 1, plan, 0x2D, eval_all, |a, extra, w| {
        let b = symbol(a, extra[0]);
        min_p_value(&b, p, w).unwrap_or(f64::INFINITY)
    })?;
    let a = eval_all(&found.best.x)?;
    let phi = found.best.extra[0];
    let b = symbol(&a, phi);
    let (value, lambda) = min_p_over_lambda(&b, p, &found.best.omega)?;
    let scale = a.iter().map(|c| c.max_abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut verdict = Verdict::from_margin(value, 1e-9 * scale, Scope::NecessaryOnly)
        .with_witness(Witness {
            x: found.best.x,
            xi: Some(vec![phi.cos(), phi.sin()]),
            lambda: Some(lambda),
            omega: Some(found.best.omega),
            margin: value,
            ..Default::default()
        })
        .with_samples(found.evals);
    verdict.truncation = set.truncation;
    verdict.notes.push("NECESSARY-ONLY: passing does not establish dissipativity".into());
    Ok(verdict)
}

/// Σ Aʰᵏ ξₕ ξₖ for ξ = (cos φ, sin φ); `a` lists A¹¹, A¹², A²¹, A²².
fn symbol(a: &[ComplexMatrix], phi: f64) -> ComplexMatrix {
    let (c, s) = (phi.cos(), phi.sin());
    let weights = [c * c, c * s, s * c, s * s];
    let m = a[0].dim();
    let mut out = ComplexMatrix::zeros(m);
    for (blk, w) in a.iter().zip(weights) {
        for i in 0..m {
            for j in 0..m {
                out.set(i, j, out.get(i, j) + blk.get(i, j) * w);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::DomainBox;
    use crate::linalg::arccot;
    use approx::assert_abs_diff_eq;
    use std::collections::BTreeMap;
    use std::f64::consts::FRAC_PI_3;

    fn p(v: f64) -> PExponent {
        PExponent::new(v).unwrap()
    }

    fn diag(d: &[f64]) -> Vec<CoefficientField> {
        vec![CoefficientField::constant(ComplexMatrix::diag_real(d), 1)]
    }

    fn quick() -> SamplingPlan {
        SamplingPlan {
            n_points: 12,
            n_directions: 256,
            refine_iters: 20,
            ..Default::default()
        }
    }

    /// Diagonal field whose eigenvalue shift expression equals 2/x on (1, ∞).
    fn growing_field(e: &PExponent, radius: f64) -> Vec<CoefficientField> {
        let params = BTreeMap::from([("s".to_string(), e.sqrt_pp())]);
        let rows = vec![vec!["(1 - 2/s)*x1 + 1/x1", "0"], vec!["0", "(1 + 2/s)*x1 + 1/x1"]];
        let domain = DomainBox::new(vec![1.0], vec![f64::INFINITY], Some(radius)).unwrap();
        vec![CoefficientField::expression(&rows, params, domain).unwrap()]
    }

    #[test]
    fn identity_blocks_hold_with_expected_margin() {
        let e = p(3.0);
        let fields = vec![
            CoefficientField::constant(ComplexMatrix::identity(2), 2),
            CoefficientField::constant(ComplexMatrix::identity(2), 2),
        ];
        let v = system_check(&fields, &e, &quick()).unwrap();
        assert!(v.holds());
        assert!(v.margin >= e.four_over_pp() - 1e-9, "{}", v.margin);
        assert_eq!(v.components.len(), 2);
    }

    #[test]
    fn diagonal_nine_holds_at_four_and_fails_at_ten() {
        assert!(system_check(&diag(&[1.0, 9.0]), &p(4.0), &quick()).unwrap().holds());
        let v = system_check(&diag(&[1.0, 9.0]), &p(10.0), &quick()).unwrap();
        assert!(v.fails());
        let w = v.witness.unwrap();
        assert_eq!(w.h, Some(0));
        assert!(w.lambda.is_some() && w.omega.is_some());
    }

    #[test]
    fn mismatched_blocks_are_rejected() {
        let fields = vec![
            CoefficientField::constant(ComplexMatrix::identity(2), 2),
            CoefficientField::constant(ComplexMatrix::identity(3), 2),
        ];
        assert!(matches!(
            system_check(&fields, &p(2.0), &quick()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn eigenvalue_check_examples() {
        let plan = quick();
        assert!(sym_system_check(&diag(&[1.0, 1.0]), &p(50.0), &plan).unwrap().holds());
        let edge = sym_system_check(&diag(&[1.0, 9.0]), &p(5.0), &plan).unwrap();
        assert!(edge.holds() && edge.boundary);
        assert!(sym_system_check(&diag(&[1.0, 9.0]), &p(5.0 + 1e-6), &plan).unwrap().fails());
        let indefinite = sym_system_check(&diag(&[-1.0, 1.0]), &p(2.0), &plan);
        assert!(matches!(indefinite, Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn p_interval_examples() {
        let full = sym_p_interval(1.0, 1.0).unwrap();
        assert_eq!(full, PInterval::full());
        let nine = sym_p_interval(1.0, 9.0).unwrap();
        assert_abs_diff_eq!(nine.p_lo, 1.25, epsilon = 1e-14);
        assert_abs_diff_eq!(nine.p_hi, 5.0, epsilon = 1e-13);
        assert!(nine.closed_lo && nine.closed_hi);
        let point = sym_p_interval(0.0, 1.0).unwrap();
        assert_eq!((point.p_lo, point.p_hi), (2.0, 2.0));
        assert!(point.contains(2.0) && !point.contains(2.0 + 1e-9));
        assert!(sym_p_interval(-1.0, 1.0).is_err());
    }

    #[test]
    fn positivity_examples() {
        let plan = quick();
        let id = positivity_necessary(&diag(&[1.0, 1.0]), &plan).unwrap();
        assert!(id.holds());
        assert_abs_diff_eq!(id.margin, 1.0, epsilon = 1e-12);
        assert!(positivity_necessary(&diag(&[-1.0, -1.0]), &plan).unwrap().fails());
        let skew = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let v = positivity_necessary(&[CoefficientField::constant(skew, 1)], &plan).unwrap();
        assert!(v.holds());
        assert_abs_diff_eq!(v.margin, 0.0, epsilon = 1e-12);
        assert_eq!(v.scope, Scope::NecessaryOnly);
    }

    #[test]
    fn shift_lower_for_constant_fields() {
        for d in [[1.0, 9.0], [1.0, 1.0]] {
            let r = shift_lower_bound(&diag(&d), &p(2.0), &quick(), ShiftMode::Positive).unwrap();
            assert!(r.exists);
            assert_eq!(r.path, ShiftPath::Eigen);
            assert_abs_diff_eq!(r.k_sup.unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn sampled_shift_path_agrees_with_eigen_path() {
        let e = p(3.0);
        let plan = quick();
        let a = ComplexMatrix::from_rows(&[
            vec![C64::new(2.0, 0.0), C64::new(0.0, 1e-3)],
            vec![C64::new(0.0, 1e-3), C64::new(3.0, 0.0)],
        ])
        .unwrap();
        let sampled = shift_lower_bound(&[CoefficientField::constant(a, 1)], &e, &plan, ShiftMode::Positive).unwrap();
        assert_eq!(sampled.path, ShiftPath::Sampled);
        let eigen = shift_lower_bound(&diag(&[2.0, 3.0]), &e, &plan, ShiftMode::Positive).unwrap();
        assert!(sampled.exists && eigen.exists);
        assert_abs_diff_eq!(sampled.k_sup.unwrap(), eigen.k_sup.unwrap(), epsilon = 1e-2);
    }

    #[test]
    fn growing_field_has_no_positive_shift() {
        let e = p(3.0);
        let r = shift_lower_bound(&growing_field(&e, 1e3), &e, &quick(), ShiftMode::Positive).unwrap();
        assert!(!r.exists);
        assert_eq!(r.trend, Trend::DecaysToZero);
        assert_eq!(r.ladder.len(), 3);
        for step in &r.ladder {
            assert_abs_diff_eq!(step.value, 2.0 / step.radius, epsilon = 1e-6 / step.radius);
        }
    }

    #[test]
    fn growing_field_product_condition() {
        let e = p(3.0);
        let r = shift_lower_bound(&growing_field(&e, 1e3), &e, &quick(), ShiftMode::PositiveSemidefinite).unwrap();
        let limit = 8.0 / (e.p() * e.conj());
        assert!((r.criterion_value - limit).abs() < 1e-6 * limit, "{}", r.criterion_value);
        assert_eq!(r.supmu_trend, Some(Trend::DivergesUp));
        assert!(!r.exists);
    }

    #[test]
    fn upper_shift_examples() {
        let e = p(3.0);
        let bounded = shift_upper_bound(&diag(&[1.0, 9.0]), &e, &quick()).unwrap();
        assert!(bounded.exists);
        assert_abs_diff_eq!(bounded.supmu.unwrap(), 9.0, epsilon = 1e-12);
        let grows = shift_upper_bound(&growing_field(&e, 1e3), &e, &quick()).unwrap();
        assert!(!grows.exists);
        assert_eq!(grows.trend, Trend::DivergesUp);
        assert_eq!(grows.truncation, Some(1e3));
    }

    #[test]
    fn sphere_product_examples() {
        assert_abs_diff_eq!(sphere_product_max(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(sphere_product_max(&[1.0, 2.0, 4.0]).unwrap(), 25.0 / 16.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sphere_product_max(&[1.0, 9.0]).unwrap(), 100.0 / 36.0, epsilon = 1e-15);
        assert!(sphere_product_max(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn scalar_system_angle() {
        let plan = SamplingPlan::default().with_directions(4096);
        let r = system_angle(&diag(&[1.0]), &p(4.0), &plan).unwrap();
        assert_abs_diff_eq!(r.interval.theta_plus, FRAC_PI_3, epsilon = 2e-3);
        assert_abs_diff_eq!(r.interval.theta_minus, -FRAC_PI_3, epsilon = 2e-3);
    }

    #[test]
    fn real_symmetric_angle_at_two_is_a_half_turn() {
        let r = system_angle(&diag(&[1.0, 9.0]), &p(2.0), &quick()).unwrap();
        assert_abs_diff_eq!(r.interval.theta_plus, arccot(0.0), epsilon = 1e-6);
        assert_abs_diff_eq!(r.interval.theta_minus, -arccot(0.0), epsilon = 1e-6);
    }

    #[test]
    fn angle_requires_dissipativity() {
        assert!(matches!(
            system_angle(&diag(&[1.0, 9.0]), &p(10.0), &quick()),
            Err(Error::NotDissipative { .. })
        ));
    }

    #[test]
    fn decoupled_laplacians_pass_the_necessary_condition() {
        let id = CoefficientField::constant(ComplexMatrix::identity(2), 2);
        let zero = CoefficientField::constant(ComplexMatrix::zeros(2), 2);
        let blocks = vec![vec![id.clone(), zero.clone()], vec![zero, id]];
        for v in [1.2, 2.0, 7.0] {
            let r = general2d_necessary(&blocks, &p(v), &quick()).unwrap();
            assert!(r.holds(), "p = {v}: {}", r.margin);
            assert_eq!(r.scope, Scope::NecessaryOnly);
        }
        let one_dim = vec![vec![CoefficientField::constant(ComplexMatrix::identity(2), 1); 2]; 2];
        assert!(general2d_necessary(&one_dim, &p(2.0), &quick()).is_err());
    }
}
