//! Uniform tensor grids and compactly supported vector fields on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::rng::Rng;

/// Largest number of nodes a grid may have.
pub const MAX_NODES: usize = 1 << 24;

/// Uniform grid with `nodes[k]` nodes from `lo[k]` to `hi[k]` on axis k.
/// Nodes are numbered row-major, the last axis varying fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridWire", into = "GridWire")]
pub struct Grid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    nodes: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct GridWire {
    lo: Vec<f64>,
    hi: Vec<f64>,
    nodes: Vec<usize>,
}

impl TryFrom<GridWire> for Grid {
    type Error = Error;

    fn try_from(w: GridWire) -> Result<Self> {
        Grid::new(w.lo, w.hi, w.nodes)
    }
}

impl From<Grid> for GridWire {
    fn from(g: Grid) -> Self {
        GridWire {
            lo: g.lo,
            hi: g.hi,
            nodes: g.nodes,
        }
    }
}

impl Grid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, nodes: Vec<usize>) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != nodes.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: nodes.len(),
            });
        }
        if lo.is_empty() {
            return Err(Error::InvalidDomain("a grid needs at least one axis".into()));
        }
        for k in 0..lo.len() {
            if !(lo[k].is_finite() && hi[k].is_finite() && lo[k] < hi[k]) {
                return Err(Error::InvalidDomain(format!("axis {k} has invalid ends [{}, {}]", lo[k], hi[k])));
            }
            if nodes[k] < 3 {
                return Err(Error::GridTooCoarse {
                    axis: k,
                    interior: nodes[k].saturating_sub(2),
                });
            }
        }
        let total = nodes.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n));
        match total {
            Some(t) if t <= MAX_NODES => {}
            _ => {
                return Err(Error::GridTooLarge {
                    nodes: total.unwrap_or(usize::MAX),
                    suggestion: format!("use at most {MAX_NODES} nodes in total"),
                })
            }
        }
        Ok(Self { lo, hi, nodes })
    }

    /// `[0, 1]^n` with the same node count on every axis.
    pub fn unit(n: usize, nodes: usize) -> Result<Self> {
        Self::new(vec![0.0; n], vec![1.0; n], vec![nodes; n])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|k| (self.hi[k] - self.lo[k]) / (self.nodes[k] - 1) as f64)
            .collect()
    }

    /// Volume of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    /// Multi-index of node `i`.
    pub fn index(&self, mut i: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            out[k] = i % self.nodes[k];
            i /= self.nodes[k];
        }
        out
    }

    pub fn linear(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.nodes).fold(0, |acc, (i, n)| acc * n + i)
    }

    pub fn coord(&self, idx: &[usize]) -> Vec<f64> {
        let h = self.spacing();
        idx.iter().enumerate().map(|(k, &i)| self.lo[k] + i as f64 * h[k]).collect()
    }

    /// Whether node `idx` lies on the boundary of the box.
    pub fn on_boundary(&self, idx: &[usize]) -> bool {
        idx.iter().zip(&self.nodes).any(|(&i, &n)| i == 0 || i + 1 == n)
    }

    /// Errors unless every axis has at least `min` interior nodes.
    pub fn require_interior(&self, min: usize) -> Result<()> {
        for (k, &n) in self.nodes.iter().enumerate() {
            if n < min + 2 {
                return Err(Error::GridTooCoarse {
                    axis: k,
                    interior: n.saturating_sub(2),
                });
            }
        }
        Ok(())
    }
}

/// A vector field with m complex components per grid node that vanishes on
/// the boundary of the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FieldWire", into = "FieldWire")]
pub struct TestField {
    grid: Grid,
    m: usize,
    values: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct FieldWire {
    grid: Grid,
    m: usize,
    /// Interleaved real and imaginary parts, node by node.
    values: Vec<f64>,
}

impl TryFrom<FieldWire> for TestField {
    type Error = Error;

    fn try_from(w: FieldWire) -> Result<Self> {
        if !w.values.len().is_multiple_of(2) {
            return Err(Error::InvalidField("value array must hold (re, im) pairs".into()));
        }
        let values = w.values.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
        TestField::new(w.grid, w.m, values)
    }
}

impl From<TestField> for FieldWire {
    fn from(f: TestField) -> Self {
        FieldWire {
            grid: f.grid,
            m: f.m,
            values: f.values.iter().flat_map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TestField {
    /// Validates sizes, finiteness and the zero boundary layer.
    pub fn new(grid: Grid, m: usize, values: Vec<C64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidField("a test field needs at least one component".into()));
        }
        if values.len() != grid.len() * m {
            return Err(Error::DimensionMismatch {
                expected: grid.len() * m,
                got: values.len(),
            });
        }
        for i in 0..grid.len() {
            let idx = grid.index(i);
            let v = &values[i * m..(i + 1) * m];
            if v.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::NonFinite { point: grid.coord(&idx) });
            }
            if grid.on_boundary(&idx) && v.iter().any(|z| *z != C64::new(0.0, 0.0)) {
                return Err(Error::InvalidField(format!(
                    "test field must vanish on the grid boundary, node {:?} does not",
                    grid.coord(&idx)
                )));
            }
        }
        Ok(Self { grid, m, values })
    }

    /// Samples `f` at every node; boundary nodes are set to zero.
    pub fn from_fn<F>(grid: Grid, m: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Vec<C64>,
    {
        let mut values = Vec::with_capacity(grid.len() * m);
        for i in 0..grid.len() {
            let idx = grid.index(i);
            if grid.on_boundary(&idx) {
                values.extend(std::iter::repeat_n(C64::new(0.0, 0.0), m));
                continue;
            }
            let v = f(&grid.coord(&idx));
            if v.len() != m {
                return Err(Error::DimensionMismatch { expected: m, got: v.len() });
            }
            values.extend(v);
        }
        Self::new(grid, m, values)
    }

    pub fn zeros(grid: Grid, m: usize) -> Self {
        let n = grid.len() * m;
        Self {
            grid,
            m,
            values: vec![C64::new(0.0, 0.0); n],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Value at node `i`.
    pub fn at(&self, i: usize) -> &[C64] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    pub fn max_norm(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| self.at(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|z| z.im == 0.0)
    }

    /// Nodes where |v| exceeds `rel` times its maximum.
    pub fn support_mask(&self, rel: f64) -> Vec<bool> {
        let eps = rel * self.max_norm();
        (0..self.grid.len())
            .map(|i| self.at(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() > eps)
            .collect()
    }
}

/// C¹ bump (1 − t²)² on |t| < 1.
pub(crate) fn quartic_bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - t * t).powi(2)
    }
}

/// A random sum of one to four quartic bumps with random amplitudes inside
/// the grid, optionally modulated by plane waves. With `real`, all values
/// are real.
pub fn random_testfield(grid: &Grid, m: usize, real: bool, rng: &mut Rng) -> Result<TestField> {
    let n = grid.dim();
    let h = grid.spacing();
    let bumps = 1 + (rng.next_u64() % 4) as usize;
    struct Bump {
        centre: Vec<f64>,
        width: Vec<f64>,
        amp: Vec<C64>,
        wave: Vec<f64>,
        phase: f64,
    }
    let mut list = Vec::with_capacity(bumps);
    for _ in 0..bumps {
        let mut centre = Vec::with_capacity(n);
        let mut width = Vec::with_capacity(n);
        for k in 0..n {
            let extent = grid.hi()[k] - grid.lo()[k];
            let w = rng.uniform_in(0.15, 0.45) * extent;
            let slack = (extent / 2.0 - w - h[k]).max(0.0);
            let mid = 0.5 * (grid.lo()[k] + grid.hi()[k]);
            centre.push(mid + rng.uniform_in(-slack, slack));
            width.push(w.min(extent / 2.0 - h[k]));
        }
        let amp = (0..m)
            .map(|_| {
                let re = rng.normal();
                let im = if real { 0.0 } else { rng.normal() };
                C64::new(re, im)
            })
            .collect();
        let oscillate = rng.uniform() < 0.5;
        let wave = (0..n)
            .map(|k| {
                let extent = grid.hi()[k] - grid.lo()[k];
                if oscillate {
                    rng.normal() * 12.0 / extent
                } else {
                    0.0
                }
            })
            .collect();
        let phase = rng.uniform_in(0.0, std::f64::consts::TAU);
        list.push(Bump {
            centre,
            width,
            amp,
            wave,
            phase,
        });
    }
    TestField::from_fn(grid.clone(), m, |x| {
        let mut v = vec![C64::new(0.0, 0.0); m];
        for b in &list {
            let env: f64 = (0..n).map(|k| quartic_bump((x[k] - b.centre[k]) / b.width[k])).product();
            if env == 0.0 {
                continue;
            }
            let arg: f64 = b.phase + (0..n).map(|k| b.wave[k] * x[k]).sum::<f64>();
            let factor = if real { C64::new(arg.cos(), 0.0) } else { C64::from_polar(1.0, arg) };
            for (vj, aj) in v.iter_mut().zip(&b.amp) {
                *vj += aj * factor * env;
            }
        }
        v
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let g = Grid::new(vec![0.0, -1.0], vec![1.0, 1.0], vec![4, 5]).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.linear(&g.index(i)), i);
        }
        assert_eq!(g.coord(&[3, 0]), vec![1.0, -1.0]);
        assert_eq!(g.index(1), vec![0, 1]);
    }

    #[test]
    fn boundary_values_are_rejected() {
        let g = Grid::unit(1, 5).unwrap();
        let mut values = vec![C64::new(0.0, 0.0); 5];
        values[0] = C64::new(1.0, 0.0);
        assert!(TestField::new(g, 1, values).is_err());
    }

    #[test]
    fn json_uses_interleaved_values() {
        let g = Grid::unit(1, 3).unwrap();
        let f = TestField::new(g, 1, vec![C64::new(0.0, 0.0), C64::new(1.5, -2.0), C64::new(0.0, 0.0)]).unwrap();
        let text = serde_json::to_string(&f).unwrap();
        assert!(text.contains("\"values\":[0.0,0.0,1.5,-2.0,0.0,0.0]"), "{text}");
        assert_eq!(serde_json::from_str::<TestField>(&text).unwrap(), f);
    }

    #[test]
    fn random_fields_are_reproducible_and_supported() {
        let g = Grid::unit(2, 33).unwrap();
        let a = random_testfield(&g, 2, true, &mut Rng::new(4)).unwrap();
        let b = random_testfield(&g, 2, true, &mut Rng::new(4)).unwrap();
        assert_eq!(a, b);
        assert!(a.is_real());
        assert!(a.max_norm() > 0.0);
    }

    #[test]
    fn oversized_grids_are_rejected() {
        assert!(matches!(Grid::unit(3, 1000), Err(Error::GridTooLarge { .. })));
    }
}
