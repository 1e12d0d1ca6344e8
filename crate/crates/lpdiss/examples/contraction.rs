//! Lᵖ norm along u_t = (A u′)′ for A = diag(1, 9): nonincreasing at p = 3,
//! growing at p = 10 from a datum built out of a violating field.

use lpdiss::coeff::{CoefficientField, SamplingPlan};
use lpdiss::linalg::ComplexMatrix;
use lpdiss::operator::OperatorSpec;
use lpdiss::oracle::{contraction_sim, evolution_start, random_testfield, stable_step, violation_search, Grid};
use lpdiss::rng::Rng;
use lpdiss::scalar::PExponent;

fn main() -> lpdiss::Result<()> {
    let op = OperatorSpec::Diagonal {
        blocks: vec![CoefficientField::constant(ComplexMatrix::diag_real(&[1.0, 9.0]), 1)],
    };

    let three = PExponent::new(3.0)?;
    let mut rng = Rng::new(11);
    let u0 = random_testfield(&Grid::unit(1, 257)?, 2, true, &mut rng)?;
    let dt = stable_step(&op, &u0)?;
    let r = contraction_sim(&op, &three, &u0, 0.01, dt)?;
    println!(
        "p = 3: {} steps, norm {:.6} -> {:.6}, monotone {}",
        r.steps,
        r.norms[0],
        r.norms.last().unwrap(),
        r.monotone
    );

    let ten = PExponent::new(10.0)?;
    if let Some(v) = violation_search(&op, &ten, &SamplingPlan::default(), 16)? {
        let u0 = evolution_start(&v.field, &ten)?;
        let dt = stable_step(&op, &u0)?;
        let r = contraction_sim(&op, &ten, &u0, 50.0 * dt, dt)?;
        println!(
            "p = 10: monotone {}, largest one-step growth {:.3e}",
            r.monotone, r.worst_increase
        );
    }
    Ok(())
}
