//! The X/Y decomposition of the gradient of a real planar vector field.
//!
//! With e = v/|v| on {v ≠ 0}:
//! X₁ = e·∂₁|v|·e₁ + …, precisely X₁ = |v|⁻¹(v₁∂₁|v| + v₂∂₂|v|),
//! X₂ = |v|⁻¹(v₂∂₁|v| − v₁∂₂|v|), Y₁ = |v| div e, Y₂ = |v|(∂₁e₂ − ∂₂e₁).
//! Then Σⱼ|∇vⱼ|² = X₁² + X₂² + Y₁² + Y₂² pointwise and ∫(X₁Y₁ + X₂Y₂) = 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::field::TestField;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XyReport {
    /// max over the support of |Σ|∇vⱼ|² − ΣX² − ΣY²| divided by max Σ|∇vⱼ|².
    pub pointwise_residual: f64,
    /// |∫(X₁Y₁ + X₂Y₂)| divided by ∫Σ|∇vⱼ|².
    pub integral_residual: f64,
    pub support_nodes: usize,
}

/// Fourth-order centred derivative along `axis`; zero within two nodes of
/// the boundary.
fn derivative(f: &[f64], nx: usize, ny: usize, h: f64, axis: usize) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    let at = |i: usize, j: usize| f[i * ny + j];
    for i in 0..nx {
        for j in 0..ny {
            let (pos, len) = if axis == 0 { (i, nx) } else { (j, ny) };
            if pos < 2 || pos + 2 >= len {
                continue;
            }
            let shift = |d: isize| {
                if axis == 0 {
                    at((i as isize + d) as usize, j)
                } else {
                    at(i, (j as isize + d) as usize)
                }
            };
            out[i * ny + j] = (-shift(2) + 8.0 * shift(1) - 8.0 * shift(-1) + shift(-2)) / (12.0 * h);
        }
    }
    out
}

/// Residuals of the two identities on a real field with two components in
/// two variables.
pub fn elasticity_xy_identities(v: &TestField) -> Result<XyReport> {
    let grid = v.grid();
    if grid.dim() != 2 || v.components() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: if grid.dim() != 2 { grid.dim() } else { v.components() },
        });
    }
    if !v.is_real() {
        return Err(Error::Unsupported("the decomposition is defined for real fields".into()));
    }
    let (nx, ny) = (grid.nodes()[0], grid.nodes()[1]);
    let h = grid.spacing();
    let len = nx * ny;
    let v1: Vec<f64> = (0..len).map(|i| v.at(i)[0].re).collect();
    let v2: Vec<f64> = (0..len).map(|i| v.at(i)[1].re).collect();
    let r: Vec<f64> = v1.iter().zip(&v2).map(|(a, b)| a.hypot(*b)).collect();
    let rmax = r.iter().cloned().fold(0.0, f64::max);
    if rmax == 0.0 {
        return Err(Error::ZeroField);
    }
    let mask: Vec<bool> = r.iter().map(|x| *x > 1e-12 * rmax).collect();
    let e1: Vec<f64> = (0..len).map(|i| if mask[i] { v1[i] / r[i] } else { 0.0 }).collect();
    let e2: Vec<f64> = (0..len).map(|i| if mask[i] { v2[i] / r[i] } else { 0.0 }).collect();
    let d = |f: &[f64], axis: usize| derivative(f, nx, ny, h[axis], axis);
    let (a1, a2) = (d(&v1, 0), d(&v1, 1));
    let (b1, b2) = (d(&v2, 0), d(&v2, 1));
    let (g1, g2) = (d(&r, 0), d(&r, 1));
    let mut worst: f64 = 0.0;
    let mut gmax: f64 = 0.0;
    let mut cross = 0.0;
    let mut energy = 0.0;
    let mut count = 0;
    for i in 0..len {
        let g = a1[i] * a1[i] + a2[i] * a2[i] + b1[i] * b1[i] + b2[i] * b2[i];
        gmax = gmax.max(g);
        if !mask[i] {
            continue;
        }
        count += 1;
        let x1 = (v1[i] * g1[i] + v2[i] * g2[i]) / r[i];
        let x2 = (v2[i] * g1[i] - v1[i] * g2[i]) / r[i];
        // |v|∂ₖeⱼ = ∂ₖvⱼ − eⱼ∂ₖ|v|
        let y1 = (a1[i] - e1[i] * g1[i]) + (b2[i] - e2[i] * g2[i]);
        let y2 = (b1[i] - e2[i] * g1[i]) - (a2[i] - e1[i] * g2[i]);
        worst = worst.max((g - (x1 * x1 + x2 * x2 + y1 * y1 + y2 * y2)).abs());
        cross += x1 * y1 + x2 * y2;
        energy += g;
    }
    if gmax == 0.0 || energy == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(XyReport {
        pointwise_residual: worst / gmax,
        integral_residual: cross.abs() / energy,
        support_nodes: count,
    })
}
