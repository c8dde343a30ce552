//! Solvers for the correction part of the square root.
//!
//! With `A = I - A1` and `I - B` the square root of `A`, `B = T(b) + E_B`,
//! each solver takes the Toeplitz part `Tb` as given and computes `E_B`
//! (the binomial iteration computes all of `B`).

mod binomial;
mod fpi;
mod sda;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qt::{CorrectionStats, QtMatrix};

pub use binomial::binomial_sqrt;
pub use fpi::{fpi_correction, fpi_correction_observed};
pub use sda::{sda_correction, sda_refine, substochastic_completion};

/// Default stopping tolerance on the relative residual.
pub const DEFAULT_TOL: f64 = 1e-13;
/// Default iteration cap.
pub const DEFAULT_MAX_ITER: usize = 500;
/// Relative tolerance used for the reported numerical rank.
pub const RANK_TOL: f64 = 1e-12;

/// Tail tolerance of the Neumann series used for inner inverses.
pub(crate) const NEUMANN_TOL: f64 = 1e-17;
pub(crate) const NEUMANN_MAX_TERMS: usize = 1 << 24;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: String,
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub final_residual: f64,
    pub wall_time_s: f64,
    pub stats: CorrectionStats,
}

/// `||(I - Tb - X)^2 - A||_inf / ||A||_inf`.
pub fn residual(a: &QtMatrix, tb: &QtMatrix, x: &QtMatrix) -> f64 {
    let y = QtMatrix::identity(a.threshold).sub(tb).sub(x);
    let na = a.norm_inf();
    let r = y.mul(&y).sub(a).norm_inf();
    if na == 0.0 {
        r
    } else {
        r / na
    }
}

/// Rejects `A1` unless it is entrywise nonnegative with `||A1||_inf < 1`.
pub(crate) fn check_a1(a1: &QtMatrix) -> Result<()> {
    if !a1.is_nonnegative(1e-14) {
        return Err(Error::Hypothesis("A1 has negative entries".into()));
    }
    let n = a1.norm_inf();
    if n >= 1.0 {
        return Err(Error::Hypothesis(format!("||A1||_inf = {n} is not below 1")));
    }
    Ok(())
}

/// Iteration bookkeeping shared by the solvers.
pub(crate) struct Tracker {
    method: &'static str,
    start: Instant,
    residuals: Vec<f64>,
}

impl Tracker {
    pub(crate) fn new(method: &'static str) -> Self {
        Tracker {
            method,
            start: Instant::now(),
            residuals: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, r: f64) {
        log::debug!("{}: iteration {}, residual {r:e}", self.method, self.residuals.len());
        self.residuals.push(r);
    }

    pub(crate) fn iterations(&self) -> usize {
        self.residuals.len().saturating_sub(1)
    }

    pub(crate) fn last(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(f64::NAN)
    }

    pub(crate) fn fail(&self) -> Error {
        Error::NoConvergence {
            method: self.method.into(),
            iterations: self.iterations(),
            residual: self.last(),
        }
    }

    /// Report for a result whose full root part is `b = Tb + X`.
    pub(crate) fn finish(self, b: &QtMatrix) -> SolveReport {
        SolveReport {
            method: self.method.into(),
            iterations: self.iterations(),
            final_residual: self.last(),
            wall_time_s: self.start.elapsed().as_secs_f64(),
            stats: b.correction_stats(RANK_TOL),
            residuals: self.residuals,
        }
    }
}
