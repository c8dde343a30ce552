//! Finite dense matrices: helpers on top of `faer`, CSV I/O and the
//! Denman–Beavers square root used as an independent reference.

use std::io::{BufRead, Write};

use faer::linalg::solvers::DenseSolveCore;
use faer::{Accum, Mat, MatMut, MatRef, Par};

use crate::error::{Error, Result};
use crate::symbol::LaurentSymbol;

pub type DenseMatrix = Mat<f64>;

/// Maximum absolute row sum.
pub fn norm_inf(m: MatRef<'_, f64>) -> f64 {
    let mut rows = vec![0.0; m.nrows()];
    for j in 0..m.ncols() {
        for (i, r) in rows.iter_mut().enumerate() {
            *r += m[(i, j)].abs();
        }
    }
    rows.into_iter().fold(0.0, f64::max)
}

/// `dst += alpha * lhs * rhs`.
pub fn gemm_add(dst: MatMut<'_, f64>, lhs: MatRef<'_, f64>, rhs: MatRef<'_, f64>, alpha: f64) {
    if lhs.ncols() == 0 || dst.nrows() == 0 || dst.ncols() == 0 {
        return;
    }
    faer::linalg::matmul::matmul(dst, Accum::Add, lhs, rhs, alpha, Par::Seq);
}

pub fn matmul(lhs: MatRef<'_, f64>, rhs: MatRef<'_, f64>) -> DenseMatrix {
    let mut out = Mat::zeros(lhs.nrows(), rhs.ncols());
    gemm_add(out.as_mut(), lhs, rhs, 1.0);
    out
}

/// Block of `T(a)` with rows `row0..row0+nrows` and columns
/// `col0..col0+ncols` (zero-based), entry `(i, j) = a_{j-i}`.
pub fn toeplitz_block(
    a: &LaurentSymbol,
    row0: usize,
    col0: usize,
    nrows: usize,
    ncols: usize,
) -> DenseMatrix {
    let mut out = Mat::zeros(nrows, ncols);
    if a.is_zero() {
        return out;
    }
    let (lo, hi) = (a.lo(), a.hi());
    for j in 0..ncols {
        let gj = (col0 + j) as isize;
        // rows with lo <= gj - gi <= hi
        let first = (gj - hi - row0 as isize).max(0) as usize;
        let last = (gj - lo - row0 as isize).min(nrows as isize - 1);
        if last < first as isize {
            continue;
        }
        for i in first..=last as usize {
            out[(i, j)] = a.coeff(gj - (row0 + i) as isize);
        }
    }
    out
}

/// Inverse through a partially pivoted LU factorization.
pub fn inverse(m: MatRef<'_, f64>) -> Result<DenseMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidArgument(format!(
            "inverse of non-square {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let inv = m.partial_piv_lu().inverse();
    let finite = (0..inv.ncols()).all(|j| (0..inv.nrows()).all(|i| inv[(i, j)].is_finite()));
    if !finite {
        return Err(Error::Breakdown("matrix is singular to working precision".into()));
    }
    Ok(inv)
}

/// Solves `m x = rhs`.
pub fn solve(m: MatRef<'_, f64>, rhs: MatRef<'_, f64>) -> Result<DenseMatrix> {
    use faer::linalg::solvers::Solve;
    let x = m.partial_piv_lu().solve(rhs);
    let finite = (0..x.ncols()).all(|j| (0..x.nrows()).all(|i| x[(i, j)].is_finite()));
    if !finite {
        return Err(Error::Breakdown("matrix is singular to working precision".into()));
    }
    Ok(x)
}

/// Number of singular values above `abs_tol`.
pub fn numerical_rank(m: MatRef<'_, f64>, abs_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    match m.singular_values() {
        Ok(s) => s.iter().filter(|&&s| s > abs_tol).count(),
        // fall back to column-pivoted QR when the SVD does not converge
        Err(_) => {
            let qr = m.col_piv_qr();
            let r = qr.R();
            (0..r.nrows().min(r.ncols()))
                .filter(|&k| r[(k, k)].abs() > abs_tol)
                .count()
        }
    }
}

/// Principal square root of a nonsingular M-matrix by the Denman–Beavers
/// iteration `Y <- (Y + Z^-1)/2`, `Z <- (Z + Y^-1)/2`, `Y_0 = M`, `Z_0 = I`.
pub fn dense_sqrt_oracle(m: MatRef<'_, f64>, tol: f64) -> Result<DenseMatrix> {
    const MAX_ITER: usize = 100;
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidArgument("square root of a non-square matrix".into()));
    }
    let mut y = m.to_owned();
    let mut z = Mat::<f64>::identity(n, n);
    for _ in 0..MAX_ITER {
        let yi = inverse(y.as_ref())?;
        let zi = inverse(z.as_ref())?;
        let y_next = Mat::from_fn(n, n, |i, j| 0.5 * (y[(i, j)] + zi[(i, j)]));
        let z_next = Mat::from_fn(n, n, |i, j| 0.5 * (z[(i, j)] + yi[(i, j)]));
        let step = norm_inf((&y_next - &y).as_ref());
        let scale = norm_inf(y.as_ref());
        y = y_next;
        z = z_next;
        if step <= tol * scale {
            return Ok(y);
        }
    }
    Err(Error::NoConvergence {
        method: "denman-beavers".into(),
        iterations: MAX_ITER,
        residual: f64::NAN,
    })
}

pub fn write_csv<W: Write>(m: MatRef<'_, f64>, mut w: W) -> Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:e}", m[(i, j)])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<DenseMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse(format!(
                    "line {}: expected {} columns, found {}",
                    lineno + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(Mat::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}
