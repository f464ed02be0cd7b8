use thiserror::Error;

#[derive(Debug, Error)]
pub enum GgeError {
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unsupported topology: {0}")]
    Topology(String),
    #[error("eigensolver failed, residual {residual:.3e}")]
    Eigen { residual: f64 },
    #[error("no convergence after {iterations} iterations, last residual {residual:.3e}")]
    Convergence { iterations: usize, residual: f64 },
    #[error("state left the unit polydisk at t = {time} (max |alpha| = {max_modulus}); use a smaller dt")]
    Stability { time: f64, max_modulus: f64 },
    #[error("{0}")]
    Diagnostic(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GgeError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(GgeError::Domain(msg.into()))
}
