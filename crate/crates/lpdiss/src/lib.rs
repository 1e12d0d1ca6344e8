//! Lᵖ-dissipativity of second-order operators `∇ᵗ(A(x)∇)` whose coefficients
//! are complex matrices.
//!
//! The crate answers three kinds of questions about such an operator:
//!
//! * whether it is Lᵖ-dissipative for a given exponent, with a margin and a
//!   witness when it is not ([`scalar`], [`system`], [`elasticity`]);
//! * for which exponents and which rotations `e^{iθ}A` it stays dissipative
//!   (angle and exponent intervals in the same modules);
//! * whether the algebraic answer is confirmed numerically, by evaluating the
//!   dissipativity functional on grid fields, building violating fields from
//!   failing directions and integrating the evolution equation ([`oracle`]).
//!
//! Coefficients are described by [`coeff::CoefficientField`] (constant,
//! sampled on a grid, or given by expressions) and wrapped into an
//! [`operator::OperatorSpec`]. Every sampled search is driven by a
//! [`coeff::SamplingPlan`] and is deterministic for a fixed seed.
//!
//! ```
//! use lpdiss::elasticity::{elasticity_check, elasticity_p_interval, ElasticityParams};
//! use lpdiss::scalar::PExponent;
//!
//! let params = ElasticityParams::new(0.3).unwrap();
//! let verdict = elasticity_check(&params, &PExponent::new(2.0).unwrap()).unwrap();
//! assert!(verdict.holds());
//! let range = elasticity_p_interval(&params);
//! assert!(range.p_lo < 1.1 && range.p_hi > 11.8);
//! ```
//!
//! The `lpdiss` binary exposes the same functionality through [`cli::run`].

pub mod cli;
pub mod coeff;
pub mod elasticity;
pub mod error;
pub mod linalg;
pub mod operator;
pub mod optimize;
pub mod oracle;
pub mod rng;
pub mod scalar;
mod search;
pub mod system;
pub mod verdict;

pub use error::{Error, Result};
