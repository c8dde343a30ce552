use crate::error::{Error, Result};
use crate::qt::{neumann_inverse_shifted, QtMatrix};

use super::{check_a1, residual, SolveReport, Tracker, NEUMANN_MAX_TERMS, NEUMANN_TOL};

/// Fixed-point iteration `X_{k+1} = (2I - Tb - X_k)^{-1} (Q + X_k Tb)`,
/// `Q = A1 + Tb^2 - 2 Tb`, from `X_0 = 0`.
///
/// The symbol of `Q` is left as computed, so `X` may pick up a small
/// Toeplitz part compensating for the error in `Tb`.
pub fn fpi_correction(
    a1: &QtMatrix,
    tb: &QtMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<(QtMatrix, SolveReport)> {
    fpi_correction_observed(a1, tb, tol, max_iter, |_, _| {})
}

/// As [`fpi_correction`], calling `observe(k, X_k)` for every iterate.
pub fn fpi_correction_observed(
    a1: &QtMatrix,
    tb: &QtMatrix,
    tol: f64,
    max_iter: usize,
    mut observe: impl FnMut(usize, &QtMatrix),
) -> Result<(QtMatrix, SolveReport)> {
    check_a1(a1)?;
    let th = a1.threshold.max(tb.threshold);
    let a = QtMatrix::identity(th).sub(a1);
    let q = a1.add(&tb.mul(tb)).sub(&tb.scale(2.0));
    let mut x = QtMatrix::zero(th);
    let mut track = Tracker::new("fpi");
    observe(0, &x);
    track.push(residual(&a, tb, &x));
    while track.last() > tol {
        if track.iterations() >= max_iter {
            return Err(track.fail());
        }
        let c = tb.add(&x);
        let nc = c.norm_inf();
        if nc >= 1.0 + 1e-8 {
            return Err(Error::Hypothesis(format!(
                "fpi: ||Tb + X_k||_inf = {nc} is not below 1 at iteration {}",
                track.iterations()
            )));
        }
        let s = neumann_inverse_shifted(&c, NEUMANN_TOL, NEUMANN_MAX_TERMS)?;
        x = s.mul(&q.add(&x.mul(tb)));
        observe(track.iterations() + 1, &x);
        track.push(residual(&a, tb, &x));
    }
    let report = track.finish(&tb.add(&x));
    Ok((x, report))
}
