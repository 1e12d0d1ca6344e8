use thiserror::Error;

/// Errors produced by the criterion engine and the numerical oracles.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    NotConverged { sweeps: usize, residual: f64 },

    #[error("NaN is not a valid extended real")]
    NotANumber,

    #[error("inverted bounds: inf {inf} exceeds sup {sup}")]
    InvertedBounds { inf: f64, sup: f64 },

    #[error("exponent p = {0} must satisfy 1 < p < infinity")]
    InvalidExponent(f64),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("point {point:?} lies outside the domain box")]
    OutsideDomain { point: Vec<f64> },

    #[error("non-finite coefficient value at {point:?}")]
    NonFinite { point: Vec<f64> },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid sampling plan: {0}")]
    InvalidPlan(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("operator is not dissipative; worst margin {margin:e}")]
    NotDissipative {
        margin: f64,
        witness: Option<Box<crate::verdict::Witness>>,
    },

    #[error("vector of norm {norm} is not a unit vector")]
    NotUnit { norm: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate denominator: {0}")]
    DegenerateDenominator(String),

    #[error("grid too coarse: axis {axis} has {interior} interior nodes, at least 4 required")]
    GridTooCoarse { axis: usize, interior: usize },

    #[error("grid too large: {nodes} nodes requested; {suggestion}")]
    GridTooLarge { nodes: usize, suggestion: String },

    #[error("cutoff radius {radius} does not fit the grid; {suggestion}")]
    CutoffTooLarge { radius: f64, suggestion: String },

    #[error("test field vanishes identically")]
    ZeroField,

    #[error("time step {dt:e} violates the stability bound {bound:e}")]
    Cfl { dt: f64, bound: f64 },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("unsupported operator: {0}")]
    Unsupported(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("json error: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
