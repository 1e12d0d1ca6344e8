//! Deterministic sample points for sampled extrema over x.

use serde::{Deserialize, Serialize};

use crate::coeff::field::{CoefficientField, DomainBox};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Budget of a sampled criterion evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub seed: u64,
    /// Spatial sample points (ignored for constant coefficients).
    pub n_points: usize,
    /// Direction samples (ξ or ω) per point.
    pub n_directions: usize,
    /// Rounds of coordinate-wise refinement around the worst samples.
    pub refine_iters: usize,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self {
            seed: 0,
            n_points: 32,
            n_directions: 2048,
            refine_iters: 40,
        }
    }
}

impl SamplingPlan {
    pub fn validate(&self) -> Result<()> {
        if self.n_points == 0 || self.n_directions == 0 || self.refine_iters == 0 {
            return Err(Error::InvalidPlan(format!(
                "all counts must be at least 1 (points {}, directions {}, refine {})",
                self.n_points, self.n_directions, self.refine_iters
            )));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn with_directions(self, n_directions: usize) -> Self {
        Self { n_directions, ..self }
    }
}

/// `plan.n_points` uniform points in the effective box, reproducible from
/// the seed.
pub fn sample_points(domain: &DomainBox, plan: &SamplingPlan) -> Vec<Vec<f64>> {
    let (lo, hi) = domain.effective_bounds();
    let mut rng = Rng::new(plan.seed);
    (0..plan.n_points)
        .map(|_| lo.iter().zip(&hi).map(|(a, b)| rng.uniform_in(*a, *b)).collect())
        .collect()
}

/// Where a criterion over several fields has to look.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    pub points: Vec<Vec<f64>>,
    /// Box bounds for refining x, absent for constant coefficients.
    pub bounds: Option<Vec<(f64, f64)>>,
    pub truncation: Option<f64>,
    pub constant: bool,
}

/// Sample points shared by all fields: the single origin when every field
/// is constant, otherwise points of the common effective domain.
pub fn field_points(fields: &[&CoefficientField], plan: &SamplingPlan) -> Result<PointSet> {
    let n = fields.first().map(|f| f.space_dim()).unwrap_or(1);
    let mut domain: Option<DomainBox> = None;
    for f in fields {
        if f.space_dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: f.space_dim(),
            });
        }
        if let Some(d) = f.domain() {
            domain = Some(match domain {
                None => d.clone(),
                Some(prev) => prev.intersect(d)?,
            });
        }
    }
    Ok(match domain {
        None => PointSet {
            points: vec![vec![0.0; n]],
            bounds: None,
            truncation: None,
            constant: true,
        },
        Some(d) => {
            let (lo, hi) = d.effective_bounds();
            PointSet {
                points: sample_points(&d, plan),
                bounds: Some(lo.into_iter().zip(hi).collect()),
                truncation: if d.is_bounded() { None } else { d.truncation() },
                constant: false,
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexMatrix;

    #[test]
    fn single_point_is_reproducible() {
        let plan = SamplingPlan {
            n_points: 1,
            seed: 42,
            ..Default::default()
        };
        let a = sample_points(&DomainBox::unit(1), &plan);
        let b = sample_points(&DomainBox::unit(1), &plan);
        assert_eq!(a.len(), 1);
        assert_eq!(a[0][0].to_bits(), b[0][0].to_bits());
        assert!((0.0..1.0).contains(&a[0][0]));
    }

    #[test]
    fn first_coordinate_comes_from_seed_zero_vector() {
        let plan = SamplingPlan {
            n_points: 1,
            ..Default::default()
        };
        let x = sample_points(&DomainBox::unit(1), &plan)[0][0];
        let expected = (0xE220_A839_7B1D_CDAFu64 >> 11) as f64 / (1u64 << 53) as f64;
        assert_eq!(x, expected);
    }

    #[test]
    fn different_seeds_differ() {
        let d = DomainBox::unit(2);
        let a = sample_points(&d, &SamplingPlan::default().with_seed(1));
        let b = sample_points(&d, &SamplingPlan::default().with_seed(2));
        assert_ne!(a, b);
    }

    #[test]
    fn empty_plan_is_rejected() {
        let plan = SamplingPlan {
            n_directions: 0,
            ..Default::default()
        };
        assert!(plan.validate().is_err());
    }

    #[test]
    fn constant_fields_collapse_to_one_point() {
        let f = CoefficientField::constant(ComplexMatrix::identity(2), 2);
        let set = field_points(&[&f, &f], &SamplingPlan::default()).unwrap();
        assert!(set.constant);
        assert_eq!(set.points, vec![vec![0.0, 0.0]]);
    }
}
