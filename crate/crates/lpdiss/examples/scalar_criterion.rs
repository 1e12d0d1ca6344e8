//! Scalar operator with A = [[1, i], [i, 1]]: where it is dissipative, and
//! how far its coefficients may be rotated.

use lpdiss::coeff::{CoefficientField, SamplingPlan};
use lpdiss::linalg::{ComplexMatrix, C64};
use lpdiss::scalar::{real_scalar_angle, scalar_angle, scalar_check, scalar_p_interval, PExponent};

fn main() -> lpdiss::Result<()> {
    let i = C64::new(0.0, 1.0);
    let one = C64::new(1.0, 0.0);
    let a = ComplexMatrix::from_rows(&[vec![one, i], vec![i, one]])?;
    let field = CoefficientField::constant(a, 2);
    let plan = SamplingPlan::default();

    for p in [1.1, 2.0, 3.0, 7.0] {
        let v = scalar_check(&field, &PExponent::new(p)?, &plan)?;
        println!("p = {p:<4} {:?} margin {:+.6}", v.status, v.margin);
    }

    let range = scalar_p_interval(&field, &plan)?;
    println!("dissipative for p in [{:.9}, {:.9}]", range.p_lo, range.p_hi);

    let two = PExponent::new(2.0)?;
    let angle = scalar_angle(&field, &two, &plan)?;
    println!(
        "angle at p = 2: [{:.6}, {:.6}]",
        angle.interval.theta_minus, angle.interval.theta_plus
    );

    // Real coefficients: the arc depends on p only.
    let four = PExponent::new(4.0)?;
    let real = real_scalar_angle(&four);
    println!("real coefficients at p = 4: ±{:.12}", real.theta_plus);
    Ok(())
}
