use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input violates a mathematical hypothesis the method relies on
    /// (nonnegativity, norm bound, positivity at z = 1, ...).
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("interpolation produced imaginary residue {residue:e} above bound {bound:e}")]
    ImaginaryResidue { residue: f64, bound: f64 },

    #[error("{method}: no convergence after {iterations} iterations (last residual {residual:e})")]
    NoConvergence {
        method: String,
        iterations: usize,
        residual: f64,
    },

    /// A Neumann series precondition failed or a dense factor was singular.
    #[error("breakdown: {0}")]
    Breakdown(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
