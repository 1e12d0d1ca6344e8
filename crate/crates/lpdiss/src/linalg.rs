//! Dense linear algebra for small complex matrices.
//!
//! Everything here is a pure function of its inputs. Matrices are stored
//! row-major and are expected to be small (dimension up to a few dozen).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Maximum number of cyclic Jacobi sweeps before giving up.
pub const JACOBI_MAX_SWEEPS: usize = 50;

/// A dense square complex matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    m: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(m: usize, data: Vec<C64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidMatrix("dimension must be at least 1".into()));
        }
        if data.len() != m * m {
            return Err(Error::DimensionMismatch {
                expected: m * m,
                got: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidMatrix("entries must be finite".into()));
        }
        Ok(Self { m, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let m = rows.len();
        let mut data = Vec::with_capacity(m * m);
        for row in rows {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(m, data)
    }

    /// Real matrix given by rows.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn identity(m: usize) -> Self {
        Self::diag_real(&vec![1.0; m])
    }

    pub fn zeros(m: usize) -> Self {
        Self {
            m,
            data: vec![C64::new(0.0, 0.0); m * m],
        }
    }

    pub fn diag_real(d: &[f64]) -> Self {
        let m = d.len();
        let mut out = Self::zeros(m);
        for (i, &x) in d.iter().enumerate() {
            out.data[i * m + i] = C64::new(x, 0.0);
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.m + j]
    }

    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        self.data[i * self.m + j] = z;
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn scale(&self, z: C64) -> Self {
        Self {
            m: self.m,
            data: self.data.iter().map(|&a| a * z).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if other.m != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: other.m,
            });
        }
        Ok(Self {
            m: self.m,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Matrix-vector product without dimension checks.
    pub fn apply(&self, u: &[C64]) -> Vec<C64> {
        let m = self.m;
        (0..m)
            .map(|i| {
                let row = &self.data[i * m..(i + 1) * m];
                row.iter().zip(u).map(|(a, x)| a * x).sum()
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    /// Largest |a_ij - a_ji| over all entries.
    pub fn asymmetry(&self) -> f64 {
        let m = self.m;
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in (i + 1)..m {
                worst = worst.max((self.get(i, j) - self.get(j, i)).norm());
            }
        }
        worst
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.m)
            .map(|i| {
                (0..self.m)
                    .map(|j| {
                        let z = self.get(i, j);
                        [z.re, z.im]
                    })
                    .collect()
            })
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let rows: Vec<Vec<C64>> = rows
            .into_iter()
            .map(|r| r.into_iter().map(|[re, im]| C64::new(re, im)).collect())
            .collect();
        ComplexMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// A dense square real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct RealMatrix {
    m: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn new(m: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != m * m {
            return Err(Error::DimensionMismatch {
                expected: m * m,
                got: data.len(),
            });
        }
        Ok(Self { m, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let mut data = Vec::with_capacity(m * m);
        for row in rows {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(m, data)
    }

    pub fn zeros(m: usize) -> Self {
        Self {
            m,
            data: vec![0.0; m * m],
        }
    }

    pub fn identity(m: usize) -> Self {
        let mut out = Self::zeros(m);
        for i in 0..m {
            out.data[i * m + i] = 1.0;
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.m + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.m + j] = x;
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    pub fn asymmetry(&self) -> f64 {
        let m = self.m;
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in (i + 1)..m {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// (S + Sᵗ) / 2.
    pub fn symmetric_part(&self) -> Self {
        let m = self.m;
        let mut out = self.clone();
        for i in 0..m {
            for j in 0..m {
                out.data[i * m + j] = 0.5 * (self.get(i, j) + self.get(j, i));
            }
        }
        out
    }

    /// a·self + b·other.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        let data = self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect();
        Self { m: self.m, data }
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.m).map(|i| self.get(i, k)).collect()
    }

    pub fn apply(&self, xi: &[f64]) -> Vec<f64> {
        let m = self.m;
        (0..m).map(|i| (0..m).map(|j| self.data[i * m + j] * xi[j]).sum()).collect()
    }

    /// ⟨S ξ, ξ⟩ for a real vector ξ.
    pub fn quad_form(&self, xi: &[f64]) -> f64 {
        let m = self.m;
        let mut acc = 0.0;
        for i in 0..m {
            let mut row = 0.0;
            for j in 0..m {
                row += self.data[i * m + j] * xi[j];
            }
            acc += row * xi[i];
        }
        acc
    }
}

/// Splits a complex matrix into its entrywise real and imaginary parts.
pub fn re_im_split(a: &ComplexMatrix) -> (RealMatrix, RealMatrix) {
    let m = a.dim();
    let re = a.entries().iter().map(|z| z.re).collect();
    let im = a.entries().iter().map(|z| z.im).collect();
    (RealMatrix { m, data: re }, RealMatrix { m, data: im })
}

/// ⟨Mu, v⟩ = Σ_j (Mu)_j conj(v_j).
pub fn herm_form(a: &ComplexMatrix, u: &[C64], v: &[C64]) -> Result<C64> {
    let m = a.dim();
    for len in [u.len(), v.len()] {
        if len != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: len,
            });
        }
    }
    Ok(herm_form_unchecked(a, u, v))
}

pub(crate) fn herm_form_unchecked(a: &ComplexMatrix, u: &[C64], v: &[C64]) -> C64 {
    let m = a.dim();
    let data = a.entries();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..m {
        let row = &data[i * m..(i + 1) * m];
        let au: C64 = row.iter().zip(u).map(|(x, y)| x * y).sum();
        acc += au * v[i].conj();
    }
    acc
}

/// Euclidean inner product ⟨u, v⟩ = Σ u_j conj(v_j).
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a * b.conj()).sum()
}

pub fn norm(u: &[C64]) -> f64 {
    u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenSpectrum {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    #[serde(skip)]
    pub vectors: RealMatrix,
    /// Frobenius norm of Q diag(values) Qᵗ - S.
    pub residual: f64,
}

/// Cyclic Jacobi sweeps on the row-major symmetric matrix `a` until the
/// off-diagonal mass drops below `target`. Rotations are accumulated into `q`
/// when given.
fn jacobi(a: &mut [f64], m: usize, mut q: Option<&mut [f64]>, target: f64) -> Result<()> {
    let off = |a: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    acc += a[i * m + j] * a[i * m + j];
                }
            }
        }
        acc.sqrt()
    };
    let mut sweeps = 0;
    while off(a) > target {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NotConverged {
                sweeps,
                residual: off(a),
            });
        }
        for p in 0..m {
            for r in (p + 1)..m {
                let apr = a[p * m + r];
                if apr == 0.0 {
                    continue;
                }
                let (app, arr) = (a[p * m + p], a[r * m + r]);
                if apr.abs() < 1e-18 * (app.abs() + arr.abs()) {
                    a[p * m + r] = 0.0;
                    a[r * m + p] = 0.0;
                    continue;
                }
                let theta = (arr - app) / (2.0 * apr);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..m {
                    let (akp, akr) = (a[k * m + p], a[k * m + r]);
                    a[k * m + p] = c * akp - sn * akr;
                    a[k * m + r] = sn * akp + c * akr;
                }
                for k in 0..m {
                    let (apk, ark) = (a[p * m + k], a[r * m + k]);
                    a[p * m + k] = c * apk - sn * ark;
                    a[r * m + k] = sn * apk + c * ark;
                }
                if let Some(q) = q.as_deref_mut() {
                    for k in 0..m {
                        let (qkp, qkr) = (q[k * m + p], q[k * m + r]);
                        q[k * m + p] = c * qkp - sn * qkr;
                        q[k * m + r] = sn * qkp + c * qkr;
                    }
                }
            }
        }
        sweeps += 1;
    }
    Ok(())
}

/// Validated, exactly symmetrised copy of `s` and the convergence target.
fn jacobi_start(s: &RealMatrix) -> Result<(Vec<f64>, f64)> {
    let m = s.dim();
    if s.data.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidMatrix("entries must be finite".into()));
    }
    let scale = s.max_abs().max(1.0);
    let asym = s.asymmetry();
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let mut a = s.data.clone();
    for i in 0..m {
        for j in (i + 1)..m {
            let avg = 0.5 * (a[i * m + j] + a[j * m + i]);
            a[i * m + j] = avg;
            a[j * m + i] = avg;
        }
    }
    Ok((a, 1e-14 * s.frobenius()))
}

/// Symmetric eigenvalues by cyclic Jacobi rotations.
pub fn sym_eigs(s: &RealMatrix) -> Result<EigenSpectrum> {
    let m = s.dim();
    let (mut a, target) = jacobi_start(s)?;
    let mut q = RealMatrix::identity(m);
    jacobi(&mut a, m, Some(&mut q.data), target)?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| a[i * m + i].total_cmp(&a[j * m + j]));
    let values: Vec<f64> = order.iter().map(|&i| a[i * m + i]).collect();
    let mut vectors = RealMatrix::zeros(m);
    for (col, &src) in order.iter().enumerate() {
        for k in 0..m {
            vectors.set(k, col, q.get(k, src));
        }
    }
    let mut residual = 0.0;
    for i in 0..m {
        for j in 0..m {
            let mut rec = 0.0;
            for k in 0..m {
                rec += vectors.get(i, k) * values[k] * vectors.get(j, k);
            }
            let d = rec - s.get(i, j);
            residual += d * d;
        }
    }
    Ok(EigenSpectrum {
        values,
        vectors,
        residual: residual.sqrt(),
    })
}

/// Ascending eigenvalues of a symmetric matrix, without eigenvectors.
pub fn sym_eigvals(s: &RealMatrix) -> Result<Vec<f64>> {
    let m = s.dim();
    let (mut a, target) = jacobi_start(s)?;
    jacobi(&mut a, m, None, target)?;
    let mut values: Vec<f64> = (0..m).map(|i| a[i * m + i]).collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// arccot with values in (0, π), extended by arccot(+∞) = 0 and arccot(-∞) = π.
pub fn arccot(y: f64) -> f64 {
    1.0f64.atan2(y)
}

/// An interval [θ₋, θ₊] of admissible arguments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleInterval {
    pub theta_minus: f64,
    pub theta_plus: f64,
    pub empty: bool,
}

impl AngleInterval {
    pub fn new(theta_minus: f64, theta_plus: f64) -> Self {
        Self {
            theta_minus,
            theta_plus,
            empty: theta_minus > theta_plus,
        }
    }

    pub fn width(&self) -> f64 {
        if self.empty {
            0.0
        } else {
            self.theta_plus - self.theta_minus
        }
    }

    pub fn contains(&self, theta: f64) -> bool {
        !self.empty && self.theta_minus <= theta && theta <= self.theta_plus
    }

    /// Intersection of two intervals.
    pub fn intersect(&self, other: &Self) -> Self {
        if self.empty || other.empty {
            return Self {
                empty: true,
                ..*self
            };
        }
        Self::new(
            self.theta_minus.max(other.theta_minus),
            self.theta_plus.min(other.theta_plus),
        )
    }
}

/// Solves P cos θ - Q sin θ ≥ 0 given the extremes of Q/P:
/// returns [arccot(inf) - π, arccot(sup)].
///
/// An empty index set is encoded as `(+∞, -∞)` and yields [-π, π].
pub fn arccot_interval(qp_inf: f64, qp_sup: f64) -> Result<AngleInterval> {
    if qp_inf.is_nan() || qp_sup.is_nan() {
        return Err(Error::NotANumber);
    }
    if qp_inf > qp_sup && qp_inf.is_finite() && qp_sup.is_finite() {
        return Err(Error::InvertedBounds {
            inf: qp_inf,
            sup: qp_sup,
        });
    }
    Ok(AngleInterval::new(arccot(qp_inf) - PI, arccot(qp_sup)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample_matrix() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[vec![c(1., 0.), c(0., 1.)], vec![c(0., 1.), c(1., 0.)]]).unwrap()
    }

    #[test]
    fn split_identity_and_offdiagonal_i() {
        let (re, im) = re_im_split(&ComplexMatrix::identity(3));
        assert_eq!(re, RealMatrix::identity(3));
        assert_eq!(im, RealMatrix::zeros(3));

        let (re, im) = re_im_split(&sample_matrix());
        assert_eq!(re, RealMatrix::identity(2));
        assert_eq!(im, RealMatrix::from_rows(&[vec![0., 1.], vec![1., 0.]]).unwrap());

        let one = ComplexMatrix::new(1, vec![c(2., 3.)]).unwrap();
        let (re, im) = re_im_split(&one);
        assert_eq!((re.get(0, 0), im.get(0, 0)), (2.0, 3.0));
    }

    #[test]
    fn split_recombines_exactly() {
        let a = ComplexMatrix::from_rows(&[
            vec![c(0.3, -1.7), c(2.5, 0.25)],
            vec![c(-4.0, 1e-9), c(7.0, 3.0)],
        ])
        .unwrap();
        let (re, im) = re_im_split(&a);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(c(re.get(i, j), im.get(i, j)), a.get(i, j));
            }
        }
    }

    #[test]
    fn herm_form_examples() {
        let u = [c(1., 0.), c(0., 1.)];
        let z = herm_form(&ComplexMatrix::identity(2), &u, &u).unwrap();
        assert_abs_diff_eq!(z.re, 2.0);
        assert_abs_diff_eq!(z.im, 0.0);

        let swap = ComplexMatrix::from_real_rows(&[vec![0., 1.], vec![1., 0.]]).unwrap();
        let xi = [c(0.3, 0.), c(-1.2, 0.)];
        let z = herm_form(&swap, &xi, &xi).unwrap();
        assert_abs_diff_eq!(z.re, 2.0 * 0.3 * -1.2, epsilon = 1e-15);

        let ones = [c(1., 0.), c(1., 0.)];
        let z = herm_form(&sample_matrix(), &ones, &ones).unwrap();
        assert_eq!(z, c(2., 2.));
    }

    #[test]
    fn herm_form_rejects_wrong_length() {
        let u = [c(1., 0.)];
        let v = [c(1., 0.), c(0., 0.)];
        assert!(matches!(
            herm_form(&ComplexMatrix::identity(2), &u, &v),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn eigen_examples() {
        let e = sym_eigs(&RealMatrix::from_rows(&[vec![1., 0.], vec![0., 9.]]).unwrap()).unwrap();
        assert_eq!(e.values, vec![1.0, 9.0]);
        let e = sym_eigs(&RealMatrix::from_rows(&[vec![2., 1.], vec![1., 2.]]).unwrap()).unwrap();
        assert_abs_diff_eq!(e.values[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 3.0, epsilon = 1e-14);
        assert!(e.residual < 1e-13);
    }

    #[test]
    fn eigen_rejects_asymmetric() {
        let s = RealMatrix::from_rows(&[vec![1., 2.], vec![0., 1.]]).unwrap();
        assert!(matches!(sym_eigs(&s), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn arccot_conventions() {
        assert_eq!(arccot(f64::INFINITY), 0.0);
        assert_eq!(arccot(f64::NEG_INFINITY), PI);
        assert_abs_diff_eq!(arccot(0.0), PI / 2.0);
        assert_abs_diff_eq!(arccot(-1.0), 3.0 * PI / 4.0, epsilon = 1e-15);
    }

    #[test]
    fn arccot_interval_examples() {
        let i = arccot_interval(0.0, 0.0).unwrap();
        assert_abs_diff_eq!(i.theta_minus, -PI / 2.0);
        assert_abs_diff_eq!(i.theta_plus, PI / 2.0);

        let i = arccot_interval(f64::INFINITY, f64::NEG_INFINITY).unwrap();
        assert_eq!((i.theta_minus, i.theta_plus, i.empty), (-PI, PI, false));

        let q = 1.0 / 3.0f64.sqrt();
        let i = arccot_interval(q, q).unwrap();
        assert_abs_diff_eq!(i.theta_minus, PI / 3.0 - PI, epsilon = 1e-15);
        assert_abs_diff_eq!(i.theta_plus, PI / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn arccot_interval_errors() {
        assert!(matches!(arccot_interval(2.0, 1.0), Err(Error::InvertedBounds { .. })));
        assert!(matches!(arccot_interval(f64::NAN, 1.0), Err(Error::NotANumber)));
    }

    #[test]
    fn complex_matrix_rejects_non_finite() {
        assert!(ComplexMatrix::new(1, vec![c(f64::NAN, 0.)]).is_err());
        assert!(ComplexMatrix::new(0, vec![]).is_err());
    }

    #[test]
    fn matrix_json_round_trip() {
        let a = sample_matrix();
        let text = serde_json::to_string(&a).unwrap();
        assert_eq!(text, "[[[1.0,0.0],[0.0,1.0]],[[0.0,1.0],[1.0,0.0]]]");
        let back: ComplexMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, a);
    }
}
