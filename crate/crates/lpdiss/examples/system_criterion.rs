//! The one-dimensional system with A = diag(1, 9): sampled criterion,
//! eigenvalue criterion, admissible exponents and angle.

use lpdiss::coeff::{CoefficientField, SamplingPlan};
use lpdiss::linalg::ComplexMatrix;
use lpdiss::scalar::PExponent;
use lpdiss::system::{sphere_product_max, sym_p_interval, sym_system_check, system_angle, system_check};

fn main() -> lpdiss::Result<()> {
    let fields = vec![CoefficientField::constant(ComplexMatrix::diag_real(&[1.0, 9.0]), 1)];
    let plan = SamplingPlan::default();

    for p in [1.25, 3.0, 5.0, 10.0] {
        let p = PExponent::new(p)?;
        let sampled = system_check(&fields, &p, &plan)?;
        let exact = sym_system_check(&fields, &p, &plan)?;
        println!(
            "p = {:<5} sampled {:?} ({:+.4})  eigenvalue {:?} ({:+.4})",
            p.p(),
            sampled.status,
            sampled.margin,
            exact.status,
            exact.margin
        );
        if let Some(w) = sampled.witness.as_ref().filter(|_| sampled.fails()) {
            let lambda: Vec<String> = w.lambda.iter().flatten().map(|z| format!("{z:.4}")).collect();
            println!("    witness lambda ({})", lambda.join(", "));
        }
    }

    let range = sym_p_interval(1.0, 9.0)?;
    println!("admissible exponents [{}, {}]", range.p_lo, range.p_hi);
    println!("max of the sphere product for (1, 9): {:.6}", sphere_product_max(&[1.0, 9.0])?);

    let angle = system_angle(&fields, &PExponent::new(3.0)?, &plan)?;
    println!(
        "angle at p = 3: [{:.4}, {:.4}]",
        angle.interval.theta_minus, angle.interval.theta_plus
    );
    Ok(())
}
