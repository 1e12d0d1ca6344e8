//! Decision outputs shared by the criterion modules.

use serde::{Deserialize, Serialize};

use crate::linalg::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Holds,
    Fails,
    Undetermined,
}

/// What a verdict actually certifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// Closed-form evaluation, no sampling involved.
    Exact,
    /// Constant coefficients: only the direction search is sampled.
    SampledDirections,
    /// Variable coefficients: holds on the sampled set of points.
    SampledPoints,
    /// A necessary condition only; passing it proves nothing.
    NecessaryOnly,
}

/// Point of the search space achieving the worst margin.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Index of the coefficient block (0-based), when several are examined.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub h: Option<usize>,
    pub x: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub xi: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<Vec<C64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub omega: Option<Vec<C64>>,
    #[serde(with = "ext_real")]
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    #[serde(with = "ext_real")]
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Witness>,
    /// The margin sits inside the numerical tolerance band around zero.
    pub boundary: bool,
    pub scope: Scope,
    /// Number of objective evaluations behind the verdict.
    pub samples: usize,
    /// Truncation radius applied to unbounded domain ends.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub truncation: Option<f64>,
    /// Per-block margins for operators with several coefficient blocks.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub components: Vec<Verdict>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl Verdict {
    /// Classifies a margin: nonnegative holds; within `band` of zero holds
    /// with the boundary flag; below that fails.
    pub fn from_margin(margin: f64, band: f64, scope: Scope) -> Self {
        let (status, boundary) = if margin >= 0.0 {
            (Status::Holds, margin <= band)
        } else if margin >= -band {
            (Status::Holds, true)
        } else {
            (Status::Fails, false)
        };
        Self {
            status,
            margin,
            witness: None,
            boundary,
            scope,
            samples: 0,
            truncation: None,
            components: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn holds(&self) -> bool {
        self.status == Status::Holds
    }

    pub fn fails(&self) -> bool {
        self.status == Status::Fails
    }

    pub fn with_witness(mut self, witness: Witness) -> Self {
        self.witness = Some(witness);
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }
}

/// Serde adapter writing infinities as the strings `"inf"` and `"-inf"`.
pub mod ext_real {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            Err(serde::ser::Error::custom("NaN is not a valid extended real"))
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Err(D::Error::custom(format!("expected a number, \"inf\" or \"-inf\", got {t:?}"))),
            },
        }
    }
}

/// Optional extended real; `None` is written as `null`.
pub mod ext_real_opt {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "super::ext_real")] f64);

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        x.map(Wrap).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margin_classification() {
        assert_eq!(Verdict::from_margin(0.5, 1e-9, Scope::Exact).status, Status::Holds);
        let edge = Verdict::from_margin(-1e-12, 1e-9, Scope::Exact);
        assert!(edge.holds() && edge.boundary);
        assert!(Verdict::from_margin(-1e-6, 1e-9, Scope::Exact).fails());
        assert!(Verdict::from_margin(f64::NEG_INFINITY, 1e-9, Scope::Exact).fails());
    }

    #[test]
    fn infinite_margins_round_trip_through_json() {
        let v = Verdict::from_margin(f64::NEG_INFINITY, 0.0, Scope::Exact);
        let text = serde_json::to_string(&v).unwrap();
        assert!(text.contains("\"-inf\""), "{text}");
        let back: Verdict = serde_json::from_str(&text).unwrap();
        assert_eq!(back, v);
    }
}
