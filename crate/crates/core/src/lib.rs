//! Square roots of semi-infinite quasi-Toeplitz M-matrices.

pub mod dense;
pub mod error;
pub mod instances;
pub mod pipeline;
pub mod qt;
pub mod solvers;
pub mod symbol;
pub mod symbolsqrt;
pub mod truncated;

pub use error::{Error, Result};
pub use qt::{CorrectionBlock, CorrectionStats, QtMatrix};
pub use symbol::LaurentSymbol;
