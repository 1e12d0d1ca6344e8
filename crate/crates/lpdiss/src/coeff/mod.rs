//! Coefficient fields and their sampling.

pub mod expr;
pub mod field;
pub mod sampling;

pub use expr::{parse_expr, Expr};
pub use field::{CoefficientField, DomainBox, FieldKind};
pub use sampling::{field_points, sample_points, PointSet, SamplingPlan};
