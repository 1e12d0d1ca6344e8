//! Quadrature of the dissipativity functional: an analytic value, a
//! violating field where the criterion fails, and the X/Y identities.

use std::f64::consts::PI;

use lpdiss::coeff::{CoefficientField, SamplingPlan};
use lpdiss::linalg::{ComplexMatrix, C64};
use lpdiss::operator::OperatorSpec;
use lpdiss::oracle::{elasticity_xy_identities, form_value, violation_search, Grid, TestField};
use lpdiss::scalar::PExponent;

fn main() -> lpdiss::Result<()> {
    let laplace = OperatorSpec::Scalar {
        field: CoefficientField::constant(ComplexMatrix::identity(1), 1),
    };
    let sine = TestField::from_fn(Grid::unit(1, 1000)?, 1, |x| vec![C64::new((PI * x[0]).sin(), 0.0)])?;
    let value = form_value(&laplace, &PExponent::new(2.0)?, &sine)?;
    println!("Dirichlet energy of sin(pi x): {value:.6} (exact {:.6})", PI * PI / 2.0);

    let diag = OperatorSpec::Diagonal {
        blocks: vec![CoefficientField::constant(ComplexMatrix::diag_real(&[1.0, 9.0]), 1)],
    };
    let plan = SamplingPlan::default();
    for (name, op, p) in [
        ("diag(1, 9)", &diag, 3.0),
        ("diag(1, 9)", &diag, 10.0),
        ("elasticity 0.3", &OperatorSpec::Elasticity { nu: 0.3 }, 20.0),
    ] {
        match violation_search(op, &PExponent::new(p)?, &plan, 16)? {
            Some(v) => println!(
                "{name} at p = {p}: value {:.4e} after {} evaluations, ladder {:?}",
                v.value, v.evaluations, v.ladder
            ),
            None => println!("{name} at p = {p}: no violating field"),
        }
    }

    let field = TestField::from_fn(Grid::unit(2, 256)?, 2, |x| {
        let bump = ((PI * x[0]).sin() * (PI * x[1]).sin()).powi(4);
        let t = x[0] + 2.0 * x[1];
        vec![C64::new(bump * t.cos(), 0.0), C64::new(bump * t.sin(), 0.0)]
    })?;
    let r = elasticity_xy_identities(&field)?;
    println!(
        "X/Y identities: pointwise {:.2e}, integral {:.2e}",
        r.pointwise_residual, r.integral_residual
    );
    Ok(())
}
