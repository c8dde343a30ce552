use crate::error::Result;
use crate::qt::QtMatrix;

use super::{check_a1, residual, SolveReport, Tracker};

/// Binomial iteration `Y_{k+1} = (A1 + Y_k^2) / 2`, `Y_0 = 0`, for the full
/// `B` with `(I - B)^2 = I - A1`.
///
/// Since `(I - Y_k)^2 - (I - A1) = 2 (Y_{k+1} - Y_k)`, the residual of `Y_k`
/// comes for free with the next iterate. Rounding and compression make the
/// identity inexact near the stopping level, so the direct residual is
/// confirmed before stopping.
pub fn binomial_sqrt(a1: &QtMatrix, tol: f64, max_iter: usize) -> Result<(QtMatrix, SolveReport)> {
    check_a1(a1)?;
    let th = a1.threshold;
    let a = QtMatrix::identity(th).sub(a1);
    let na = a.norm_inf();
    let zero = QtMatrix::zero(th);
    let mut track = Tracker::new("binomial");
    let mut y = QtMatrix::zero(th);
    loop {
        let next = a1.add(&y.mul(&y)).scale(0.5);
        let mut r = 2.0 * next.sub(&y).norm_inf() / na;
        if r <= tol {
            r = r.max(residual(&a, &zero, &y));
        }
        track.push(r);
        if r <= tol {
            break;
        }
        if track.iterations() >= max_iter {
            return Err(track.fail());
        }
        y = next;
    }
    let report = track.finish(&y);
    Ok((y, report))
}
