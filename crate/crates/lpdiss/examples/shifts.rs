//! Shifted systems A + k·I·d²/dx² on (1, ∞) with growing coefficients.
//! The product condition holds with infimum 8/(pp′), yet no k works: the
//! infimum of the lower-shift expression decays like 2/x.

use std::collections::BTreeMap;

use lpdiss::coeff::{CoefficientField, DomainBox, SamplingPlan};
use lpdiss::scalar::PExponent;
use lpdiss::system::{shift_lower_bound, ShiftMode};

fn main() -> lpdiss::Result<()> {
    let p = PExponent::new(4.0)?;
    let params = BTreeMap::from([("s".to_string(), p.sqrt_pp())]);
    let rows = vec![
        vec!["(1 - 2/s)*x1 + 1/x1", "0"],
        vec!["0", "(1 + 2/s)*x1 + 1/x1"],
    ];
    let domain = DomainBox::new(vec![1.0], vec![f64::INFINITY], Some(1000.0))?;
    let fields = vec![CoefficientField::expression(&rows, params, domain)?];
    let plan = SamplingPlan::default();

    let positive = shift_lower_bound(&fields, &p, &plan, ShiftMode::Positive)?;
    println!("some k > 0: {} ({:?})", positive.exists, positive.trend);
    for step in &positive.ladder {
        println!("  R = {:>6}: inf = {:.6e}  (2/R = {:.6e})", step.radius, step.value, 2.0 / step.radius);
    }

    let psd = shift_lower_bound(&fields, &p, &plan, ShiftMode::PositiveSemidefinite)?;
    println!(
        "product condition infimum {:.6} against 8/(pp') = {:.6}; largest eigenvalue {:?}",
        psd.criterion_value,
        8.0 / (p.p() * p.conj()),
        psd.supmu_trend
    );
    Ok(())
}
