//! Numerical checks that do not rely on the algebraic criteria: quadrature
//! of the dissipativity functional on grid fields, witness fields built from
//! failing directions, the X/Y identities for planar fields and a time
//! stepper for the Lᵖ norm.

mod field;
mod form;
mod sim;
mod witness;
mod xy;

pub use field::{random_testfield, Grid, TestField, MAX_NODES};
pub use form::{form_value, form_value_with, form_values, FormValues, SUPPORT_EPS};
pub use sim::{contraction_sim, evolution_start, stable_step, SimReport, CFL, MONOTONE_TOL};
pub use witness::{
    random_grid, violation_search, witness_grid, witness_testfield, worst_direction, Violation, ViolationSource,
    WitnessParams, MU_LADDER, R_LADDER, VIOLATION_TOL,
};
pub use xy::{elasticity_xy_identities, XyReport};
