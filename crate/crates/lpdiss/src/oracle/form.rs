//! Quadrature of the dissipativity functional of u ↦ Σ ∂ₕ(Aʰᵏ ∂ₖ u) on a test field v.

use crate::elasticity::ElasticityParams;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::oracle::field::{Grid, TestField};
use crate::operator::OperatorSpec;
use crate::scalar::PExponent;

/// Default relative threshold below which |v| counts as zero.
pub const SUPPORT_EPS: f64 = 1e-12;

/// Functional value on `v`: gradients by centred differences at cell
/// centres, midpoint quadrature over cells. Terms carrying negative powers
/// of |v| are dropped where |v| ≤ 1e−12·max|v|.
///
/// For elasticity and real v the specialised elasticity integrand is
/// evaluated too, and the two totals must agree to 1e−6 relative.
pub fn form_value(op: &OperatorSpec, p: &PExponent, v: &TestField) -> Result<f64> {
    form_value_with(op, p, v, SUPPORT_EPS)
}

/// [`form_value`] with a custom support threshold `eps_rel`.
pub fn form_value_with(op: &OperatorSpec, p: &PExponent, v: &TestField, eps_rel: f64) -> Result<f64> {
    let values = form_values(op, p, v, eps_rel)?;
    if let Some(alt) = values.elasticity {
        let scale = values.general.abs().max(alt.abs()).max(values.gradient_energy);
        if (values.general - alt).abs() > 1e-6 * scale {
            return Err(Error::Consistency(format!(
                "general and elasticity assemblies disagree: {:e} against {alt:e}",
                values.general
            )));
        }
    }
    Ok(values.general)
}

/// Both assemblies of the functional, without the agreement check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FormValues {
    pub general: f64,
    /// Specialised elasticity integrand, for elasticity and real fields.
    pub elasticity: Option<f64>,
    /// ∫ Σⱼ|∇vⱼ|², a scale for relative comparisons.
    pub gradient_energy: f64,
}

pub fn form_values(op: &OperatorSpec, p: &PExponent, v: &TestField, eps_rel: f64) -> Result<FormValues> {
    op.validate()?;
    let grid = v.grid();
    if grid.dim() != op.space_dim() {
        return Err(Error::DimensionMismatch {
            expected: op.space_dim(),
            got: grid.dim(),
        });
    }
    if v.components() != op.components() {
        return Err(Error::DimensionMismatch {
            expected: op.components(),
            got: v.components(),
        });
    }
    grid.require_interior(4)?;
    let eps = eps_rel * v.max_norm();
    let elastic = match op {
        OperatorSpec::Elasticity { nu } if v.is_real() => Some(ElasticityParams::new(*nu)?),
        _ => None,
    };
    let skew = 1.0 - 2.0 / p.p();
    let cp = skew * skew;
    let vol = grid.cell_volume();
    let mut general = Vec::new();
    let mut special = Vec::new();
    let mut energy = Vec::new();
    for cell in CellIter::new(grid) {
        let (mid, grads) = cell_values(v, grid, &cell);
        if mid.iter().all(|z| *z == C64::new(0.0, 0.0)) && grads.iter().flatten().all(|z| *z == C64::new(0.0, 0.0)) {
            continue;
        }
        let x = cell_centre(grid, &cell);
        let blocks = op.coeff_blocks(&x)?;
        general.push(vol * general_integrand(&blocks, &mid, &grads, eps, cp, skew));
        if let Some(params) = &elastic {
            special.push(vol * elasticity_integrand(params.gamma, &mid, &grads, eps, cp));
        }
        energy.push(vol * grads.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>());
    }
    Ok(FormValues {
        general: pairwise_sum(&general),
        elasticity: elastic.map(|_| pairwise_sum(&special)),
        gradient_energy: pairwise_sum(&energy),
    })
}

/// Lower corner indices of every cell, in row-major order.
pub(crate) struct CellIter {
    cells: Vec<usize>,
    next: usize,
    total: usize,
}

impl CellIter {
    pub(crate) fn new(grid: &Grid) -> Self {
        let cells: Vec<usize> = grid.nodes().iter().map(|n| n - 1).collect();
        let total = cells.iter().product();
        Self { cells, next: 0, total }
    }
}

impl Iterator for CellIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.next == self.total {
            return None;
        }
        let mut i = self.next;
        self.next += 1;
        let mut out = vec![0; self.cells.len()];
        for k in (0..self.cells.len()).rev() {
            out[k] = i % self.cells[k];
            i /= self.cells[k];
        }
        Some(out)
    }
}

pub(crate) fn cell_centre(grid: &Grid, cell: &[usize]) -> Vec<f64> {
    let h = grid.spacing();
    cell.iter()
        .enumerate()
        .map(|(k, &i)| grid.lo()[k] + (i as f64 + 0.5) * h[k])
        .collect()
}

/// Cell-centre value and gradient (`grads[k][j]` = ∂ₖvⱼ) from the 2ⁿ corners.
fn cell_values(v: &TestField, grid: &Grid, cell: &[usize]) -> (Vec<C64>, Vec<Vec<C64>>) {
    let n = grid.dim();
    let m = v.components();
    let h = grid.spacing();
    let corners = 1usize << n;
    let mut mid = vec![C64::new(0.0, 0.0); m];
    let mut grads = vec![vec![C64::new(0.0, 0.0); m]; n];
    let mut idx = cell.to_vec();
    for c in 0..corners {
        for k in 0..n {
            idx[k] = cell[k] + ((c >> k) & 1);
        }
        let val = v.at(grid.linear(&idx));
        for j in 0..m {
            mid[j] += val[j];
            for k in 0..n {
                let sign = if (c >> k) & 1 == 1 { 1.0 } else { -1.0 };
                grads[k][j] += val[j] * sign;
            }
        }
    }
    let avg = 1.0 / corners as f64;
    let edge_avg = 2.0 / corners as f64;
    for z in &mut mid {
        *z *= avg;
    }
    for (k, g) in grads.iter_mut().enumerate() {
        for z in g.iter_mut() {
            *z *= edge_avg / h[k];
        }
    }
    (mid, grads)
}

fn dot(u: &[C64], w: &[C64]) -> C64 {
    u.iter().zip(w).map(|(a, b)| a * b.conj()).sum()
}

fn general_integrand(blocks: &[Vec<ComplexMatrix>], v: &[C64], d: &[Vec<C64>], eps: f64, cp: f64, skew: f64) -> f64 {
    let n = d.len();
    let r2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let mut total = 0.0;
    for h in 0..n {
        for k in 0..n {
            total += dot(&blocks[h][k].apply(&d[k]), &d[h]).re;
        }
    }
    if r2.sqrt() <= eps {
        return total;
    }
    let s: Vec<f64> = d.iter().map(|dk| dot(v, dk).re).collect();
    for h in 0..n {
        for k in 0..n {
            let a = &blocks[h][k];
            let av = a.apply(v);
            total -= cp / (r2 * r2) * dot(&av, v).re * s[k] * s[h];
            let cross = dot(&av, &d[h]) * s[k] - dot(&a.apply(&d[k]), v) * s[h];
            total -= skew / r2 * cross.re;
        }
    }
    total
}

/// −C_p|∇|v||² + Σⱼ|∇vⱼ|² − γC_p|v|⁻²(vₕ∂ₕ|v|)² + γ(div v)² for real v.
fn elasticity_integrand(gamma: f64, v: &[C64], d: &[Vec<C64>], eps: f64, cp: f64) -> f64 {
    let grad_sq: f64 = d.iter().flatten().map(|z| z.re * z.re).sum();
    let div = d[0][0].re + d[1][1].re;
    let mut total = grad_sq + gamma * div * div;
    let r = v.iter().map(|z| z.re * z.re).sum::<f64>().sqrt();
    if r > eps {
        let g: Vec<f64> = d.iter().map(|dk| v.iter().zip(dk).map(|(a, b)| a.re * b.re).sum::<f64>() / r).collect();
        let radial: f64 = v.iter().zip(&g).map(|(a, gk)| a.re * gk).sum();
        total -= cp * g.iter().map(|x| x * x).sum::<f64>();
        total -= gamma * cp * radial * radial / (r * r);
    }
    total
}

/// Sum in a fixed pairwise order.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CoefficientField;
    use crate::rng::Rng;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn p(v: f64) -> PExponent {
        PExponent::new(v).unwrap()
    }

    fn scalar_one(n: usize) -> OperatorSpec {
        OperatorSpec::Scalar {
            field: CoefficientField::constant(ComplexMatrix::identity(n), n),
        }
    }

    fn sine(nodes: usize) -> TestField {
        TestField::from_fn(Grid::unit(1, nodes).unwrap(), 1, |x| vec![C64::new((PI * x[0]).sin(), 0.0)]).unwrap()
    }

    #[test]
    fn sine_dirichlet_energy() {
        let value = form_value(&scalar_one(1), &p(2.0), &sine(1000)).unwrap();
        assert_abs_diff_eq!(value, PI * PI / 2.0, epsilon = 1e-3);
    }

    #[test]
    fn second_order_convergence() {
        let exact = PI * PI / 2.0;
        let errs: Vec<f64> = [51, 101, 201]
            .iter()
            .map(|&n| (form_value(&scalar_one(1), &p(2.0), &sine(n)).unwrap() - exact).abs())
            .collect();
        for w in errs.windows(2) {
            let slope = (w[0] / w[1]).log2();
            assert!((slope - 2.0).abs() < 0.3, "slope {slope}");
        }
    }

    #[test]
    fn zero_field_gives_zero() {
        let v = TestField::zeros(Grid::unit(2, 9).unwrap(), 2);
        assert_eq!(form_value(&OperatorSpec::Elasticity { nu: 0.3 }, &p(3.0), &v).unwrap(), 0.0);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let v = TestField::zeros(Grid::unit(1, 5).unwrap(), 1);
        assert!(matches!(
            form_value(&scalar_one(1), &p(2.0), &v),
            Err(Error::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn identity_system_is_nonnegative() {
        let op = OperatorSpec::Diagonal {
            blocks: vec![
                CoefficientField::constant(ComplexMatrix::identity(2), 2),
                CoefficientField::constant(ComplexMatrix::identity(2), 2),
            ],
        };
        let grid = Grid::unit(2, 33).unwrap();
        let mut rng = Rng::new(3);
        for _ in 0..5 {
            let v = crate::oracle::random_testfield(&grid, 2, false, &mut rng).unwrap();
            assert!(form_value(&op, &p(7.0), &v).unwrap() >= -1e-10);
        }
    }

    #[test]
    fn elasticity_assemblies_agree() {
        let op = OperatorSpec::Elasticity { nu: 0.3 };
        let grid = Grid::unit(2, 41).unwrap();
        let mut rng = Rng::new(8);
        for _ in 0..5 {
            let v = crate::oracle::random_testfield(&grid, 2, true, &mut rng).unwrap();
            let both = form_values(&op, &p(5.0), &v, SUPPORT_EPS).unwrap();
            let alt = both.elasticity.unwrap();
            assert!((both.general - alt).abs() <= 1e-10 * both.gradient_energy);
        }
    }
}
