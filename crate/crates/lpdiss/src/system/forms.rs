//! The functions P and Q of (x, λ, ω) and their matrices as quadratic forms in λ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{herm_form, inner, norm, sym_eigs, sym_eigvals, ComplexMatrix, RealMatrix, C64};
use crate::scalar::PExponent;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PQValue {
    pub p_val: f64,
    pub q_val: f64,
}

/// P and Q at one point for coefficient value `a`, exponent `p` and a pair
/// (λ, ω) with |ω| = 1.
pub fn pq_values(a: &ComplexMatrix, p: &PExponent, lambda: &[C64], omega: &[C64]) -> Result<PQValue> {
    let w = norm(omega);
    if (w - 1.0).abs() > 1e-12 {
        return Err(Error::NotUnit { norm: w });
    }
    let ll = herm_form(a, lambda, lambda)?;
    let ww = herm_form(a, omega, omega)?;
    let cross = herm_form(a, omega, lambda)? - herm_form(a, lambda, omega)?;
    let r = inner(lambda, omega).re;
    let (cp, s) = (p.cp(), p.skew());
    Ok(PQValue {
        p_val: ll.re - cp * ww.re * r * r - s * cross.re * r,
        q_val: ll.im - cp * ww.im * r * r - s * cross.im * r,
    })
}

/// Real coordinates (Re λ, Im λ) of a complex vector.
pub(crate) fn to_real(v: &[C64]) -> Vec<f64> {
    v.iter().map(|z| z.re).chain(v.iter().map(|z| z.im)).collect()
}

pub(crate) fn from_real(v: &[f64]) -> Vec<C64> {
    let m = v.len() / 2;
    (0..m).map(|j| C64::new(v[j], v[m + j])).collect()
}

/// Symmetric 2m×2m matrix M with P(x, λ, ω) = zᵗ M z for z = (Re λ, Im λ).
///
/// Q is obtained from the same routine applied to −i·A.
pub fn p_form_matrix(a: &ComplexMatrix, p: &PExponent, omega: &[C64]) -> RealMatrix {
    let m = a.dim();
    let big = 2 * m;
    let mut out = RealMatrix::zeros(big);
    // Re⟨Aλ,λ⟩ through the Hermitian part H = Hr + i Hi.
    for i in 0..m {
        for j in 0..m {
            let h = 0.5 * (a.get(i, j) + a.get(j, i).conj());
            out.set(i, j, h.re);
            out.set(m + i, m + j, h.re);
            out.set(i, m + j, -h.im);
            out.set(m + i, j, h.im);
        }
    }
    let g = to_real(omega);
    let beta = herm_form_raw(a, omega, omega).re;
    // Re⟨Aω,λ⟩ = h1·z and Re⟨Aλ,ω⟩ = h2·z.
    let a_omega = a.apply(omega);
    let h1 = to_real(&a_omega);
    let y: Vec<C64> = (0..m).map(|k| (0..m).map(|j| a.get(j, k) * omega[j].conj()).sum()).collect();
    let h2: Vec<f64> = y.iter().map(|z| z.re).chain(y.iter().map(|z| -z.im)).collect();
    let d: Vec<f64> = h1.iter().zip(&h2).map(|(a, b)| a - b).collect();
    let (cp, s) = (p.cp(), p.skew());
    for i in 0..big {
        for j in 0..big {
            let v = out.get(i, j) - cp * beta * g[i] * g[j] - 0.5 * s * (d[i] * g[j] + g[i] * d[j]);
            out.set(i, j, v);
        }
    }
    out
}

fn herm_form_raw(a: &ComplexMatrix, u: &[C64], v: &[C64]) -> C64 {
    inner(&a.apply(u), v)
}

/// Q as a quadratic form in λ.
pub fn q_form_matrix(a: &ComplexMatrix, p: &PExponent, omega: &[C64]) -> RealMatrix {
    p_form_matrix(&a.scale(C64::new(0.0, -1.0)), p, omega)
}

/// min over |λ| = 1 of P(x, λ, ω), with the minimising λ.
pub fn min_p_over_lambda(a: &ComplexMatrix, p: &PExponent, omega: &[C64]) -> Result<(f64, Vec<C64>)> {
    let eig = sym_eigs(&p_form_matrix(a, p, omega))?;
    Ok((eig.values[0], from_real(&eig.vectors.column(0))))
}

/// The value part of [`min_p_over_lambda`].
pub fn min_p_value(a: &ComplexMatrix, p: &PExponent, omega: &[C64]) -> Result<f64> {
    Ok(sym_eigvals(&p_form_matrix(a, p, omega))?[0])
}

/// Matrix of |λ|² − cp(Re⟨λ,ω⟩)² in real coordinates and its inverse square root.
pub(crate) fn shift_metric_inv_sqrt(p: &PExponent, omega: &[C64]) -> RealMatrix {
    let g = to_real(omega);
    let n = g.len();
    let c = 1.0 / (1.0 - p.cp()).sqrt() - 1.0;
    let mut out = RealMatrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, out.get(i, j) + c * g[i] * g[j]);
        }
    }
    out
}

/// min over λ of P / (|λ|² − cp(Re⟨λ,ω⟩)²): the largest k for which
/// P − k(|λ|² − cp(Re⟨λ,ω⟩)²) stays nonnegative at this (x, ω).
pub fn min_shift_quotient(a: &ComplexMatrix, p: &PExponent, omega: &[C64]) -> Result<f64> {
    let m = p_form_matrix(a, p, omega);
    let w = shift_metric_inv_sqrt(p, omega);
    let n = m.dim();
    let mut wm = RealMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                for l in 0..n {
                    acc += w.get(i, k) * m.get(k, l) * w.get(l, j);
                }
            }
            wm.set(i, j, acc);
        }
    }
    Ok(sym_eigvals(&wm.symmetric_part())?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use approx::assert_abs_diff_eq;

    fn p(v: f64) -> PExponent {
        PExponent::new(v).unwrap()
    }

    fn random_matrix(rng: &mut Rng, m: usize) -> ComplexMatrix {
        let data = (0..m * m).map(|_| C64::new(rng.normal(), rng.normal())).collect();
        ComplexMatrix::new(m, data).unwrap()
    }

    #[test]
    fn identity_values() {
        let e = p(3.0);
        let omega = vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let v = pq_values(&ComplexMatrix::identity(2), &e, &omega, &omega).unwrap();
        assert_abs_diff_eq!(v.p_val, e.four_over_pp(), epsilon = 1e-15);
        assert_abs_diff_eq!(v.q_val, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn diagonal_example() {
        let a = ComplexMatrix::diag_real(&[1.0, 9.0]);
        let unit = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let v = pq_values(&a, &p(10.0), &unit, &unit).unwrap();
        assert_abs_diff_eq!(v.p_val, 3.24, epsilon = 1e-12);
    }

    #[test]
    fn non_unit_omega_is_rejected() {
        let a = ComplexMatrix::identity(1);
        let two = vec![C64::new(2.0, 0.0)];
        assert!(matches!(pq_values(&a, &p(2.0), &two, &two), Err(Error::NotUnit { .. })));
    }

    #[test]
    fn matrices_reproduce_direct_evaluation() {
        let mut rng = Rng::new(9);
        for m in 1..5 {
            for _ in 0..10 {
                let a = random_matrix(&mut rng, m);
                let e = p(1.0 + 10.0 * rng.uniform());
                let omega = rng.unit_complex(m);
                let lambda: Vec<C64> = (0..m).map(|_| C64::new(rng.normal(), rng.normal())).collect();
                let direct = pq_values(&a, &e, &lambda, &omega).unwrap();
                let z = to_real(&lambda);
                let pm = p_form_matrix(&a, &e, &omega);
                let qm = q_form_matrix(&a, &e, &omega);
                assert!(pm.asymmetry() < 1e-12);
                assert_abs_diff_eq!(pm.quad_form(&z), direct.p_val, epsilon = 1e-10);
                assert_abs_diff_eq!(qm.quad_form(&z), direct.q_val, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn shift_quotient_for_identity() {
        // P = |λ|² − cp r² for A = I, so the quotient is identically 1.
        let e = p(4.0);
        let omega = vec![C64::new(0.0, 1.0), C64::new(0.0, 0.0)];
        let k = min_shift_quotient(&ComplexMatrix::identity(2), &e, &omega).unwrap();
        assert_abs_diff_eq!(k, 1.0, epsilon = 1e-12);
    }
}
