//! Planar elasticity: exponent interval over ν, the dual ratio set and the
//! shifted operators.

use lpdiss::elasticity::{
    elasticity_check, elasticity_nu_set, elasticity_p_interval, elasticity_shift_lower, elasticity_shift_upper,
    ElasticityParams,
};
use lpdiss::scalar::PExponent;

fn main() -> lpdiss::Result<()> {
    println!("{:>6}  {:>10}  {:>10}", "nu", "p_lo", "p_hi");
    for nu in [-1.0, 0.0, 0.25, 0.3, 0.4, 0.49, 1.5] {
        let r = elasticity_p_interval(&ElasticityParams::new(nu)?);
        println!("{nu:>6}  {:>10.5}  {:>10.5}", r.p_lo, r.p_hi);
    }

    let params = ElasticityParams::new(0.3)?;
    let p = PExponent::new(2.0)?;
    println!("check at (0.3, 2): margin {:.6}", elasticity_check(&params, &p)?.margin);

    let set = elasticity_nu_set(&PExponent::new(4.0)?);
    println!(
        "at p = 4: nu <= {:.6} or nu >= {:.6}",
        set.lower_ray_end, set.upper_ray_start
    );

    let lower = elasticity_shift_lower(&params, &p)?;
    println!("E + kΔ dissipative for some k > 0: {}, k_sup = {:?}", lower.exists, lower.k_sup);
    let upper = elasticity_shift_upper(&params, &p)?;
    println!("kΔ − E dissipative for some k: {}", upper.exists);
    Ok(())
}
