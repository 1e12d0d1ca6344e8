#![allow(dead_code)]

use lpdiss::coeff::{CoefficientField, SamplingPlan};
use lpdiss::linalg::{ComplexMatrix, C64};
use lpdiss::operator::OperatorSpec;
use lpdiss::rng::Rng;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn diag19() -> Vec<CoefficientField> {
    vec![CoefficientField::constant(ComplexMatrix::diag_real(&[1.0, 9.0]), 1)]
}

pub fn diag19_op() -> OperatorSpec {
    OperatorSpec::Diagonal { blocks: diag19() }
}

pub fn mixed() -> CoefficientField {
    let m = ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(0.0, 1.0)], vec![c(0.0, 1.0), c(1.0, 0.0)]]).unwrap();
    CoefficientField::constant(m, 2)
}

/// Q diag(mu) Qᵗ with a random orthogonal Q from Gram–Schmidt.
pub fn spd_with_eigs(mu: &[f64], rng: &mut Rng) -> Vec<Vec<f64>> {
    let m = mu.len();
    let mut q: Vec<Vec<f64>> = Vec::new();
    while q.len() < m {
        let mut v: Vec<f64> = (0..m).map(|_| rng.normal()).collect();
        for u in &q {
            let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
        }
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-6 {
            q.push(v.iter().map(|a| a / n).collect());
        }
    }
    (0..m)
        .map(|i| (0..m).map(|j| (0..m).map(|k| q[k][i] * mu[k] * q[k][j]).sum()).collect())
        .collect()
}

pub fn real_field(rows: &[Vec<f64>], n: usize) -> CoefficientField {
    CoefficientField::constant(ComplexMatrix::from_real_rows(rows).unwrap(), n)
}

/// Maximum of `f` over the unit sphere of Rᵐ by dense random sampling
/// followed by coordinate hill climbing with shrinking steps.
pub fn sphere_max_brute<F: Fn(&[f64]) -> f64>(f: F, m: usize, samples: usize, rng: &mut Rng) -> f64 {
    let normalize = |v: &mut Vec<f64>| {
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= n);
    };
    let mut best = vec![1.0; m];
    normalize(&mut best);
    let mut best_val = f(&best);
    for _ in 0..samples {
        let mut v: Vec<f64> = (0..m).map(|_| rng.normal()).collect();
        normalize(&mut v);
        let val = f(&v);
        if val > best_val {
            best_val = val;
            best = v;
        }
    }
    let mut step = 0.1;
    while step > 1e-10 {
        let mut improved = false;
        for k in 0..m {
            for sign in [-1.0, 1.0] {
                let mut v = best.clone();
                v[k] += sign * step;
                normalize(&mut v);
                let val = f(&v);
                if val > best_val {
                    best_val = val;
                    best = v;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best_val
}

pub fn fast_plan(seed: u64) -> SamplingPlan {
    SamplingPlan {
        seed,
        n_points: 8,
        n_directions: 512,
        refine_iters: 20,
    }
}
