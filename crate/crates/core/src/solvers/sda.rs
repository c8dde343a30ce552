use faer::Mat;

use crate::error::{Error, Result};
use crate::qt::{neumann_inverse, neumann_inverse_shifted, QtMatrix};
use crate::symbol::LaurentSymbol;

use super::{check_a1, residual, SolveReport, Tracker, NEUMANN_MAX_TERMS, NEUMANN_TOL};

/// Doubling iteration for the correction `E_B`, started from the pencil
/// `M = [[S A1, 0], [-S R, I]]`, `N = [[I, -S], [0, S]]` with
/// `S = (2I - Tb)^{-1}` and `R = Tb^2 - 2 Tb + A1`, i.e.
/// `E_0 = S A1`, `P_0 = S R`, `Q_0 = F_0 = S`. `P_k` converges to `E_B`.
pub fn sda_correction(
    a1: &QtMatrix,
    tb: &QtMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<(QtMatrix, SolveReport)> {
    check_a1(a1)?;
    let th = a1.threshold.max(tb.threshold);
    let zero = QtMatrix::zero(th);
    let mut track = Tracker::new("sda");
    let d = doubling(a1, tb, &zero, tol, max_iter, &mut track)?;
    let report = track.finish(&tb.add(&d));
    Ok((d, report))
}

/// Refines an approximation `Einit` of `E_B`: the doubling iteration is run
/// on the pencil built from `Tb + Einit`, and its limit `D` gives
/// `E_B = Einit + D`.
pub fn sda_refine(
    a1: &QtMatrix,
    tb: &QtMatrix,
    einit: &QtMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<(QtMatrix, SolveReport)> {
    check_a1(a1)?;
    let mut track = Tracker::new("sda-refine");
    let d = doubling(a1, tb, einit, tol, max_iter, &mut track)?;
    let e = einit.add(&d);
    let report = track.finish(&tb.add(&e));
    Ok((e, report))
}

/// `(b(1) 1 - T(b) 1) e_1^T`: the first column makes every row of
/// `T(b) + E` sum to `b(1)`.
pub fn substochastic_completion(b: &LaurentSymbol, threshold: f64) -> QtMatrix {
    let q = b.neg_degree();
    // row i of T(b) misses b_m for m < -i
    let mut col = Mat::zeros(q, 1);
    let mut acc = 0.0;
    for i in (0..q).rev() {
        acc += b.coeff(-(i as isize) - 1);
        col[(i, 0)] = acc;
    }
    QtMatrix::from_correction(col, threshold)
}

fn doubling(
    a1: &QtMatrix,
    tb: &QtMatrix,
    einit: &QtMatrix,
    tol: f64,
    max_iter: usize,
    track: &mut Tracker,
) -> Result<QtMatrix> {
    let th = a1.threshold.max(tb.threshold);
    let id = QtMatrix::identity(th);
    let a = id.sub(a1);
    let t = tb.add(einit);
    let nt = t.norm_inf();
    if nt >= 1.0 + 1e-8 {
        return Err(Error::Hypothesis(format!(
            "||Tb + Einit||_inf = {nt} is not below 1"
        )));
    }
    let s = neumann_inverse_shifted(&t, NEUMANN_TOL, NEUMANN_MAX_TERMS)?;
    let r = t.mul(&t).sub(&t.scale(2.0)).add(a1);
    let mut e = s.mul(a1);
    let mut p = s.mul(&r);
    let mut q = s.clone();
    let mut f = s;

    let root = |p: &QtMatrix| residual(&a, tb, &einit.add(p));
    track.push(root(&p));
    while track.last() > tol {
        if track.iterations() >= max_iter {
            return Err(track.fail());
        }
        // (I - QP)^{-1}; (I - PQ)^{-1} = I + P (I - QP)^{-1} Q
        let w = neumann_inverse(&q.mul(&p), NEUMANN_TOL, NEUMANN_MAX_TERMS).map_err(|err| {
            Error::Breakdown(format!("sda iteration {}: {err}", track.iterations()))
        })?;
        let we = w.mul(&e);
        let wq = w.mul(&q);
        let fp = f.mul(&p);
        let fpwq = fp.mul(&wq);
        let e_next = e.mul(&we);
        let p_next = p.add(&fp.mul(&we));
        let f_next = f.mul(&f).add(&fpwq.mul(&f));
        let q_next = q.add(&e.mul(&wq.mul(&f)));
        e = e_next;
        p = p_next;
        f = f_next;
        q = q_next;
        track.push(root(&p));
    }
    Ok(p)
}
