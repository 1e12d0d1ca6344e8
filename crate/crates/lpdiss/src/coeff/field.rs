//! Coefficient fields x ↦ A(x) over box domains.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::coeff::expr::{parse_expr, Expr};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

/// Axis-aligned box, possibly with infinite ends.
///
/// Infinite ends are cut off at `±truncation` whenever a finite region is
/// needed (sampling, refinement). Serialized ends use `null` for infinity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainWire", into = "DomainWire")]
pub struct DomainBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
    truncation: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct DomainWire {
    lo: Vec<Option<f64>>,
    hi: Vec<Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    truncation: Option<f64>,
}

impl TryFrom<DomainWire> for DomainBox {
    type Error = Error;

    fn try_from(w: DomainWire) -> Result<Self> {
        let lo = w.lo.iter().map(|x| x.unwrap_or(f64::NEG_INFINITY)).collect();
        let hi = w.hi.iter().map(|x| x.unwrap_or(f64::INFINITY)).collect();
        DomainBox::new(lo, hi, w.truncation)
    }
}

impl From<DomainBox> for DomainWire {
    fn from(d: DomainBox) -> Self {
        let finite = |x: &f64| x.is_finite().then_some(*x);
        DomainWire {
            lo: d.lo.iter().map(finite).collect(),
            hi: d.hi.iter().map(finite).collect(),
            truncation: d.truncation,
        }
    }
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, truncation: Option<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(Error::InvalidDomain("a domain needs at least one axis".into()));
        }
        for (k, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if a.is_nan() || b.is_nan() || *a == f64::INFINITY || *b == f64::NEG_INFINITY {
                return Err(Error::InvalidDomain(format!("axis {k} has invalid ends [{a}, {b}]")));
            }
            if a >= b {
                return Err(Error::InvalidDomain(format!("axis {k}: lo {a} must be below hi {b}")));
            }
        }
        let unbounded = lo.iter().chain(&hi).any(|x| !x.is_finite());
        match truncation {
            Some(r) if !(r.is_finite() && r > 0.0) => {
                return Err(Error::InvalidDomain(format!("truncation radius {r} must be positive and finite")));
            }
            None if unbounded => {
                return Err(Error::InvalidDomain("unbounded axes need a truncation radius".into()));
            }
            _ => {}
        }
        let d = Self { lo, hi, truncation };
        let (elo, ehi) = d.effective_bounds();
        if elo.iter().zip(&ehi).any(|(a, b)| a >= b) {
            return Err(Error::InvalidDomain("truncation radius leaves an empty box".into()));
        }
        Ok(d)
    }

    /// Bounded box `[lo, hi]`.
    pub fn bounded(lo: &[f64], hi: &[f64]) -> Result<Self> {
        Self::new(lo.to_vec(), hi.to_vec(), None)
    }

    /// Unit cube `[0, 1]^n`.
    pub fn unit(n: usize) -> Self {
        Self {
            lo: vec![0.0; n],
            hi: vec![1.0; n],
            truncation: None,
        }
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

    pub fn truncation(&self) -> Option<f64> {
        self.truncation
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.iter().chain(&self.hi).all(|x| x.is_finite())
    }

    /// Same box with a different truncation radius.
    pub fn with_truncation(&self, radius: f64) -> Result<Self> {
        Self::new(self.lo.clone(), self.hi.clone(), Some(radius))
    }

    /// Finite box used for sampling: infinite ends replaced by `±truncation`.
    pub fn effective_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let r = self.truncation.unwrap_or(f64::INFINITY);
        let lo = self.lo.iter().map(|&a| if a.is_finite() { a } else { -r }).collect();
        let hi = self.hi.iter().map(|&b| if b.is_finite() { b } else { r }).collect();
        (lo, hi)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| a <= v && v <= b)
    }

    /// Intersection of two boxes; the smaller truncation radius wins.
    pub fn intersect(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let lo = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        let truncation = match (self.truncation, other.truncation) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        Self::new(lo, hi, truncation)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FieldKind {
    Constant(ComplexMatrix),
    Expression {
        entries: Vec<Expr>,
        params: BTreeMap<String, f64>,
        domain: DomainBox,
    },
    Grid {
        points: Vec<Vec<f64>>,
        values: Vec<ComplexMatrix>,
        domain: DomainBox,
    },
}

/// A matrix-valued coefficient x ↦ A(x) with A(x) of size m×m on an
/// n-dimensional domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FieldWire", into = "FieldWire")]
pub struct CoefficientField {
    m: usize,
    n: usize,
    kind: FieldKind,
}

impl CoefficientField {
    pub fn constant(a: ComplexMatrix, n: usize) -> Self {
        Self {
            m: a.dim(),
            n,
            kind: FieldKind::Constant(a),
        }
    }

    /// Parses an m×m array of entry expressions in the variables `x1 … xn`.
    pub fn expression<S: AsRef<str>>(
        rows: &[Vec<S>],
        params: BTreeMap<String, f64>,
        domain: DomainBox,
    ) -> Result<Self> {
        let m = rows.len();
        let n = domain.dim();
        if m == 0 {
            return Err(Error::InvalidField("expression field needs at least one row".into()));
        }
        let names: Vec<&str> = params.keys().map(String::as_str).collect();
        let mut entries = Vec::with_capacity(m * m);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidField(format!("row {i} has {} entries, expected {m}", row.len())));
            }
            for text in row {
                entries.push(parse_expr(text.as_ref(), n, &names)?);
            }
        }
        for (name, v) in &params {
            if !v.is_finite() {
                return Err(Error::InvalidField(format!("parameter '{name}' is not finite")));
            }
        }
        Ok(Self {
            m,
            n,
            kind: FieldKind::Expression { entries, params, domain },
        })
    }

    /// Field given by samples, evaluated by nearest neighbour.
    pub fn grid(points: Vec<Vec<f64>>, values: Vec<ComplexMatrix>, domain: DomainBox) -> Result<Self> {
        let n = domain.dim();
        if points.is_empty() || points.len() != values.len() {
            return Err(Error::InvalidField(format!(
                "grid field needs matching nonempty point and value lists ({} points, {} values)",
                points.len(),
                values.len()
            )));
        }
        let m = values[0].dim();
        for (idx, (pt, val)) in points.iter().zip(&values).enumerate() {
            if pt.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: pt.len(),
                });
            }
            if val.dim() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: val.dim(),
                });
            }
            if !domain.contains(pt) {
                return Err(Error::OutsideDomain { point: pt.clone() });
            }
            if points[..idx].contains(pt) {
                return Err(Error::InvalidField(format!("grid point {pt:?} appears twice")));
            }
        }
        Ok(Self {
            m,
            n,
            kind: FieldKind::Grid { points, values, domain },
        })
    }

    pub fn matrix_dim(&self) -> usize {
        self.m
    }

    pub fn space_dim(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, FieldKind::Constant(_))
    }

    pub fn domain(&self) -> Option<&DomainBox> {
        match &self.kind {
            FieldKind::Constant(_) => None,
            FieldKind::Expression { domain, .. } | FieldKind::Grid { domain, .. } => Some(domain),
        }
    }

    /// Same field with the truncation radius of its domain replaced.
    pub fn with_truncation(&self, radius: f64) -> Result<Self> {
        let mut out = self.clone();
        match &mut out.kind {
            FieldKind::Constant(_) => {}
            FieldKind::Expression { domain, .. } | FieldKind::Grid { domain, .. } => {
                *domain = domain.with_truncation(radius)?;
            }
        }
        Ok(out)
    }

    /// Value of the field at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<ComplexMatrix> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        match &self.kind {
            FieldKind::Constant(a) => Ok(a.clone()),
            FieldKind::Expression { entries, params, domain } => {
                if !domain.contains(x) {
                    return Err(Error::OutsideDomain { point: x.to_vec() });
                }
                let data = entries.iter().map(|e| e.eval(x, params)).collect::<Result<Vec<C64>>>()?;
                if data.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                    return Err(Error::NonFinite { point: x.to_vec() });
                }
                ComplexMatrix::new(self.m, data)
            }
            FieldKind::Grid { points, values, domain } => {
                if !domain.contains(x) {
                    return Err(Error::OutsideDomain { point: x.to_vec() });
                }
                let dist = |p: &Vec<f64>| p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                let mut best = 0;
                let mut best_d = dist(&points[0]);
                for (i, p) in points.iter().enumerate().skip(1) {
                    let d = dist(p);
                    if d < best_d {
                        best = i;
                        best_d = d;
                    }
                }
                Ok(values[best].clone())
            }
        }
    }

    /// The field multiplied by the complex constant `z`.
    pub fn scaled(&self, z: C64) -> Self {
        let kind = match &self.kind {
            FieldKind::Constant(a) => FieldKind::Constant(a.scale(z)),
            FieldKind::Expression { entries, params, domain } => FieldKind::Expression {
                entries: entries.iter().map(|e| e.scaled(z)).collect(),
                params: params.clone(),
                domain: domain.clone(),
            },
            FieldKind::Grid { points, values, domain } => FieldKind::Grid {
                points: points.clone(),
                values: values.iter().map(|a| a.scale(z)).collect(),
                domain: domain.clone(),
            },
        };
        Self { kind, ..*self }
    }

    /// The field multiplied by e^{iθ}.
    pub fn rotated(&self, theta: f64) -> Self {
        self.scaled(C64::from_polar(1.0, theta))
    }
}

#[derive(Serialize, Deserialize)]
struct FieldWire {
    m: usize,
    n: usize,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<ComplexMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    entries: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<DomainBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<ComplexMatrix>>,
}

impl TryFrom<FieldWire> for CoefficientField {
    type Error = Error;

    fn try_from(w: FieldWire) -> Result<Self> {
        let missing = |what: &str| Error::InvalidField(format!("{} field is missing '{what}'", w.kind));
        let field = match w.kind.as_str() {
            "constant" => {
                let a = w.matrix.clone().ok_or_else(|| missing("matrix"))?;
                CoefficientField::constant(a, w.n)
            }
            "expression" => {
                let rows = w.entries.as_ref().ok_or_else(|| missing("entries"))?;
                let domain = w.domain.clone().ok_or_else(|| missing("domain"))?;
                CoefficientField::expression(rows, w.params.clone(), domain)?
            }
            "grid" => {
                let points = w.points.clone().ok_or_else(|| missing("points"))?;
                let values = w.values.clone().ok_or_else(|| missing("values"))?;
                let domain = w.domain.clone().ok_or_else(|| missing("domain"))?;
                CoefficientField::grid(points, values, domain)?
            }
            other => return Err(Error::InvalidField(format!("unknown field kind '{other}'"))),
        };
        if field.m != w.m || field.n != w.n {
            return Err(Error::InvalidField(format!(
                "declared size m={}, n={} does not match contents m={}, n={}",
                w.m, w.n, field.m, field.n
            )));
        }
        Ok(field)
    }
}

impl From<CoefficientField> for FieldWire {
    fn from(f: CoefficientField) -> Self {
        let mut w = FieldWire {
            m: f.m,
            n: f.n,
            kind: String::new(),
            matrix: None,
            entries: None,
            params: BTreeMap::new(),
            domain: None,
            points: None,
            values: None,
        };
        match f.kind {
            FieldKind::Constant(a) => {
                w.kind = "constant".into();
                w.matrix = Some(a);
            }
            FieldKind::Expression { entries, params, domain } => {
                w.kind = "expression".into();
                w.entries = Some(entries.chunks(f.m).map(|row| row.iter().map(Expr::to_string).collect()).collect());
                w.params = params;
                w.domain = Some(domain);
            }
            FieldKind::Grid { points, values, domain } => {
                w.kind = "grid".into();
                w.points = Some(points);
                w.values = Some(values);
                w.domain = Some(domain);
            }
        }
        w
    }
}

impl TryFrom<serde_json::Value> for CoefficientField {
    type Error = Error;

    fn try_from(v: serde_json::Value) -> Result<Self> {
        Ok(serde_json::from_value(v)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn constant_field_ignores_position() {
        let f = CoefficientField::constant(ComplexMatrix::identity(2), 3);
        assert_eq!(f.eval(&[1.0, -5.0, 9.0]).unwrap(), ComplexMatrix::identity(2));
    }

    #[test]
    fn expression_field_example() {
        let rows = vec![vec!["x1", "0"], vec!["0", "1"]];
        let f = CoefficientField::expression(&rows, BTreeMap::new(), DomainBox::bounded(&[0.0], &[3.0]).unwrap()).unwrap();
        assert_eq!(f.eval(&[2.0]).unwrap(), ComplexMatrix::diag_real(&[2.0, 1.0]));
        assert!(matches!(f.eval(&[4.0]), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn non_finite_entry_is_an_error() {
        let rows = vec![vec!["1/x1"]];
        let f = CoefficientField::expression(&rows, BTreeMap::new(), DomainBox::bounded(&[0.0], &[1.0]).unwrap()).unwrap();
        assert!(matches!(f.eval(&[0.0]), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn grid_field_uses_nearest_sample() {
        let a0 = ComplexMatrix::diag_real(&[1.0]);
        let a1 = ComplexMatrix::diag_real(&[5.0]);
        let f = CoefficientField::grid(vec![vec![0.0], vec![1.0]], vec![a0.clone(), a1.clone()], DomainBox::unit(1)).unwrap();
        assert_eq!(f.eval(&[0.4]).unwrap(), a0);
        assert_eq!(f.eval(&[0.5]).unwrap(), a0);
        assert_eq!(f.eval(&[0.6]).unwrap(), a1);
    }

    #[test]
    fn grid_rejects_duplicates_and_outside_points() {
        let a = ComplexMatrix::identity(1);
        let dup = CoefficientField::grid(vec![vec![0.5], vec![0.5]], vec![a.clone(), a.clone()], DomainBox::unit(1));
        assert!(dup.is_err());
        let outside = CoefficientField::grid(vec![vec![2.0]], vec![a], DomainBox::unit(1));
        assert!(matches!(outside, Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn unbounded_domain_requires_truncation() {
        assert!(DomainBox::new(vec![1.0], vec![f64::INFINITY], None).is_err());
        let d = DomainBox::new(vec![1.0], vec![f64::INFINITY], Some(100.0)).unwrap();
        assert_eq!(d.effective_bounds(), (vec![1.0], vec![100.0]));
        assert!(d.contains(&[1e9]));
        assert!(d.with_truncation(0.5).is_err());
    }

    #[test]
    fn scaling_is_homogeneous() {
        let rows = vec![vec!["x1", "i"], vec!["-2", "x1^2"]];
        let f = CoefficientField::expression(&rows, BTreeMap::new(), DomainBox::unit(1)).unwrap();
        let g = f.scaled(c(-2.5));
        let x = [0.7];
        assert_eq!(g.eval(&x).unwrap(), f.eval(&x).unwrap().scale(c(-2.5)));
    }

    #[test]
    fn json_round_trip_for_every_kind() {
        let fields = vec![
            CoefficientField::constant(ComplexMatrix::diag_real(&[1.0, 9.0]), 1),
            CoefficientField::expression(
                &[vec!["x1 + nu", "0"], vec!["0", "1/x1"]],
                BTreeMap::from([("nu".to_string(), 0.3)]),
                DomainBox::new(vec![1.0], vec![f64::INFINITY], Some(10.0)).unwrap(),
            )
            .unwrap(),
            CoefficientField::grid(vec![vec![0.25]], vec![ComplexMatrix::identity(1)], DomainBox::unit(1)).unwrap(),
        ];
        for f in fields {
            let text = serde_json::to_string(&f).unwrap();
            let back: CoefficientField = serde_json::from_str(&text).unwrap();
            assert_eq!(back, f, "{text}");
        }
    }

    #[test]
    fn json_size_mismatch_is_rejected() {
        let text = r#"{"m": 3, "n": 1, "kind": "constant", "matrix": [[[1.0, 0.0]]]}"#;
        assert!(serde_json::from_str::<CoefficientField>(text).is_err());
    }
}
