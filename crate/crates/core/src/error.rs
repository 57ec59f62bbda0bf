use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} outside domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("invalid spline: {0}")]
    InvalidCurve(String),

    #[error("derivative order {order} not supported by a degree-{degree} curve")]
    InvalidOrder { order: usize, degree: usize },

    #[error("least-squares fit failed: {reason}{}", condition.map(|c| format!(" (condition number {c:.3e})")).unwrap_or_default())]
    Fit { reason: String, condition: Option<f64> },

    #[error("index {index} out of range for {len} entries")]
    Index { index: usize, len: usize },

    #[error("invalid airfoil: {0}")]
    InvalidAirfoil(String),

    #[error("cannot scale camber to {target}: section has no camber")]
    CannotScale { target: f64 },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("parameter {index} = {value} outside [-1, 1]")]
    Bounds { index: usize, value: f64 },

    #[error("sampling failed: {accepted} of {draws} draws passed the smoothness filter (bounds inconsistent with smoothness)")]
    Sampling { draws: u64, accepted: u64 },

    #[error("induction iteration did not converge at station {station} (r = {radius:.6} m)")]
    Convergence { station: usize, radius: f64 },

    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("degenerate covariance: {0}")]
    DegenerateCovariance(String),

    #[error("no feasible grid point; binding constraints: {}", binding.join(", "))]
    Infeasible { binding: Vec<String> },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse { line: Some(line), message: message.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
