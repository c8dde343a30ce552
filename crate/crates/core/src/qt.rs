//! Semi-infinite quasi-Toeplitz matrices `T(a) + E`.
//!
//! The Toeplitz part is stored through its symbol, the correction as a dense
//! block anchored at the top-left corner of an otherwise zero matrix. All
//! arithmetic is exact in the sense that no truncation of the semi-infinite
//! operands takes place; results are compressed afterwards with the
//! matrix threshold.

use faer::Mat;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dense::{self, DenseMatrix};
use crate::error::{Error, Result};
use crate::symbol::LaurentSymbol;

/// Default compression threshold for iterates.
pub const DEFAULT_THRESHOLD: f64 = 1e-15;

/// Finite top-left block of an infinite correction.
#[derive(Clone, Debug)]
pub struct CorrectionBlock {
    data: DenseMatrix,
}

impl CorrectionBlock {
    pub fn empty() -> Self {
        CorrectionBlock {
            data: Mat::zeros(0, 0),
        }
    }

    pub fn from_dense(data: DenseMatrix) -> Self {
        CorrectionBlock { data }
    }

    /// Builds a block from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "correction data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(CorrectionBlock {
            data: Mat::from_fn(rows, cols, |i, j| data[i * cols + j]),
        })
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.rows() == 0 || self.cols() == 0
    }

    pub fn dense(&self) -> &DenseMatrix {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i < self.rows() && j < self.cols() {
            self.data[(i, j)]
        } else {
            0.0
        }
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let (r, c) = (self.rows(), self.cols());
        let mut v = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                v.push(self.data[(i, j)]);
            }
        }
        v
    }

    pub fn norm_inf(&self) -> f64 {
        dense::norm_inf(self.data.as_ref())
    }

    fn padded(&self, rows: usize, cols: usize) -> DenseMatrix {
        let mut out = Mat::zeros(rows, cols);
        out.as_mut()
            .submatrix_mut(0, 0, self.rows(), self.cols())
            .copy_from(self.data.as_ref());
        out
    }

    /// Drops trailing rows, then trailing columns, while every row loses at
    /// most `threshold` in absolute sum.
    pub fn compress(&self, threshold: f64) -> Self {
        let (r, c) = (self.rows(), self.cols());
        let mut row_sums = vec![0.0; r];
        for j in 0..c {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s += self.data[(i, j)].abs();
            }
        }
        let mut keep_r = r;
        while keep_r > 0 && row_sums[keep_r - 1] <= threshold {
            keep_r -= 1;
        }
        let mut dropped = vec![0.0; keep_r];
        let mut keep_c = c;
        'cols: while keep_c > 0 {
            let j = keep_c - 1;
            for (i, d) in dropped.iter().enumerate() {
                if d + self.data[(i, j)].abs() > threshold {
                    break 'cols;
                }
            }
            for (i, d) in dropped.iter_mut().enumerate() {
                *d += self.data[(i, j)].abs();
            }
            keep_c -= 1;
        }
        if keep_r == 0 || keep_c == 0 {
            return Self::empty();
        }
        if keep_r == r && keep_c == c {
            return self.clone();
        }
        CorrectionBlock {
            data: self.data.as_ref().submatrix(0, 0, keep_r, keep_c).to_owned(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawCorrection {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Serialize for CorrectionBlock {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawCorrection {
            rows: self.rows(),
            cols: self.cols(),
            data: self.to_row_major(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CorrectionBlock {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawCorrection::deserialize(d)?;
        CorrectionBlock::from_row_major(raw.rows, raw.cols, &raw.data)
            .map_err(serde::de::Error::custom)
    }
}

/// Summary of the structure of a quasi-Toeplitz matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionStats {
    pub band: usize,
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
}

/// `T(symbol) + correction`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QtMatrix {
    pub symbol: LaurentSymbol,
    pub correction: CorrectionBlock,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

impl QtMatrix {
    pub fn new(symbol: LaurentSymbol, correction: CorrectionBlock, threshold: f64) -> Self {
        QtMatrix {
            symbol,
            correction,
            threshold,
        }
    }

    pub fn zero(threshold: f64) -> Self {
        Self::new(LaurentSymbol::zero(), CorrectionBlock::empty(), threshold)
    }

    pub fn identity(threshold: f64) -> Self {
        Self::scalar(1.0, threshold)
    }

    pub fn scalar(c: f64, threshold: f64) -> Self {
        Self::new(LaurentSymbol::constant(c), CorrectionBlock::empty(), threshold)
    }

    pub fn toeplitz(symbol: LaurentSymbol, threshold: f64) -> Self {
        Self::new(symbol, CorrectionBlock::empty(), threshold)
    }

    pub fn from_correction(block: DenseMatrix, threshold: f64) -> Self {
        Self::new(LaurentSymbol::zero(), CorrectionBlock::from_dense(block), threshold)
    }

    /// Entry `(i, j)`, zero-based.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.symbol.coeff(j as isize - i as isize) + self.correction.get(i, j)
    }

    fn combine(&self, other: &Self, s: f64) -> Self {
        let symbol = if s == 1.0 {
            self.symbol.add(&other.symbol)
        } else {
            self.symbol.add(&other.symbol.scale(s))
        };
        let rows = self.correction.rows().max(other.correction.rows());
        let cols = self.correction.cols().max(other.correction.cols());
        let mut block = self.correction.padded(rows, cols);
        let o = &other.correction;
        for j in 0..o.cols() {
            for i in 0..o.rows() {
                block[(i, j)] += s * o.data[(i, j)];
            }
        }
        Self::new(
            symbol,
            CorrectionBlock::from_dense(block),
            self.threshold.max(other.threshold),
        )
        .compressed()
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, -1.0)
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &Self) -> Self {
        self.combine(other, c)
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut block = self.correction.data.clone();
        for j in 0..block.ncols() {
            for i in 0..block.nrows() {
                block[(i, j)] *= c;
            }
        }
        Self::new(self.symbol.scale(c), CorrectionBlock::from_dense(block), self.threshold)
            .compressed()
    }

    /// `c I - self`.
    pub fn shifted_neg(&self, c: f64) -> Self {
        Self::scalar(c, self.threshold).sub(self)
    }

    /// Product `(T(a) + E_A)(T(b) + E_B)`.
    ///
    /// Assembled as `T(ab) - H(a-)H(b+) + T(a)E_B + E_A T(b) + E_A E_B`, where
    /// `H(a-)_{ij} = a_{-i-j+1}` and `H(b+)_{ij} = b_{i+j-1}` (one-based), and
    /// compressed once at the end.
    pub fn mul(&self, other: &Self) -> Self {
        let a = &self.symbol;
        let b = &other.symbol;
        let ea = &self.correction;
        let eb = &other.correction;
        let qa = a.neg_degree();
        let pb = b.pos_degree();

        let mut rows = 0;
        let mut cols = 0;
        let hankel = qa > 0 && pb > 0;
        if hankel {
            rows = qa;
            cols = pb;
        }
        let ta_eb = !eb.is_empty() && !a.is_zero();
        if ta_eb {
            rows = rows.max(eb.rows() + qa);
            cols = cols.max(eb.cols());
        }
        let ea_tb = !ea.is_empty() && !b.is_zero();
        if ea_tb {
            rows = rows.max(ea.rows());
            cols = cols.max(ea.cols() + pb);
        }
        let inner = ea.cols().min(eb.rows());
        let ea_eb = !ea.is_empty() && !eb.is_empty() && inner > 0;
        if ea_eb {
            rows = rows.max(ea.rows());
            cols = cols.max(eb.cols());
        }

        let mut out = Mat::<f64>::zeros(rows, cols);
        if hankel {
            let k = qa.min(pb);
            let ha = Mat::from_fn(qa, k, |i, t| a.coeff(-((i + t + 1) as isize)));
            let hb = Mat::from_fn(k, pb, |t, j| b.coeff((t + j + 1) as isize));
            dense::gemm_add(out.as_mut().submatrix_mut(0, 0, qa, pb), ha.as_ref(), hb.as_ref(), -1.0);
        }
        if ta_eb {
            toeplitz_times_block(a, eb.data.as_ref(), &mut out);
        }
        if ea_tb {
            block_times_toeplitz(ea.data.as_ref(), b, &mut out);
        }
        if ea_eb {
            dense::gemm_add(
                out.as_mut().submatrix_mut(0, 0, ea.rows(), eb.cols()),
                ea.data.as_ref().submatrix(0, 0, ea.rows(), inner),
                eb.data.as_ref().submatrix(0, 0, inner, eb.cols()),
                1.0,
            );
        }
        Self::new(
            a.mul(b),
            CorrectionBlock::from_dense(out),
            self.threshold.max(other.threshold),
        )
        .compressed()
    }

    /// Row absolute sums of the first `nrows` rows.
    fn row_sums(&self, nrows: usize) -> Vec<f64> {
        let a = &self.symbol;
        let e = &self.correction;
        let c = e.cols();
        // suffix[k] = sum_{m >= lo + k} |a_m|
        let (lo, coeffs) = a.to_contiguous();
        let mut suffix = vec![0.0; coeffs.len() + 1];
        for k in (0..coeffs.len()).rev() {
            suffix[k] = suffix[k + 1] + coeffs[k].abs();
        }
        let tail_from = |m0: isize| -> f64 {
            let k = m0 - lo;
            if k <= 0 {
                suffix[0]
            } else if k as usize >= coeffs.len() {
                0.0
            } else {
                suffix[k as usize]
            }
        };
        let mut sums: Vec<f64> = (0..nrows).map(|i| tail_from(c as isize - i as isize)).collect();
        for j in 0..c {
            for (i, s) in sums.iter_mut().enumerate() {
                *s += (a.coeff(j as isize - i as isize) + e.get(i, j)).abs();
            }
        }
        sums
    }

    /// Exact infinity norm `sup_i sum_j |a_{j-i} + e_{ij}|`.
    pub fn norm_inf(&self) -> f64 {
        let nrows = self.correction.rows().max(self.symbol.neg_degree());
        self.row_sums(nrows)
            .into_iter()
            .fold(self.symbol.wiener_norm(), f64::max)
    }

    /// Trims the symbol and the correction so that the result differs from
    /// `self` by at most `2 * threshold` in the infinity norm.
    pub fn compress(&self, threshold: f64) -> Self {
        Self::new(
            self.symbol.trim(threshold),
            self.correction.compress(threshold),
            self.threshold,
        )
    }

    fn compressed(self) -> Self {
        let t = self.threshold;
        self.compress(t)
    }

    /// Leading `n x n` principal block.
    pub fn truncate_dense(&self, n: usize) -> DenseMatrix {
        let mut out = dense::toeplitz_block(&self.symbol, 0, 0, n, n);
        let (r, c) = (self.correction.rows().min(n), self.correction.cols().min(n));
        for j in 0..c {
            for i in 0..r {
                out[(i, j)] += self.correction.data[(i, j)];
            }
        }
        out
    }

    /// Rectangular block with rows `row0..row0+nrows`, columns `col0..col0+ncols`.
    pub fn block(&self, row0: usize, col0: usize, nrows: usize, ncols: usize) -> DenseMatrix {
        let mut out = dense::toeplitz_block(&self.symbol, row0, col0, nrows, ncols);
        let e = &self.correction;
        let r_end = e.rows().min(row0 + nrows);
        let c_end = e.cols().min(col0 + ncols);
        for j in col0..c_end {
            for i in row0..r_end {
                out[(i - row0, j - col0)] += e.data[(i, j)];
            }
        }
        out
    }

    /// True when every entry is `>= -tol`.
    pub fn is_nonnegative(&self, tol: f64) -> bool {
        if !self.symbol.is_nonnegative(tol) {
            return false;
        }
        let e = &self.correction;
        (0..e.cols()).all(|j| (0..e.rows()).all(|i| self.entry(i, j) >= -tol))
    }

    /// Band of the symbol, size of the compressed correction, and numerical
    /// rank of the correction at absolute tolerance `tol * ||E||_inf`.
    pub fn correction_stats(&self, tol: f64) -> CorrectionStats {
        let e = self.correction.compress(self.threshold);
        let rank = if e.is_empty() {
            0
        } else {
            dense::numerical_rank(e.data.as_ref(), tol * e.norm_inf())
        };
        CorrectionStats {
            band: self.symbol.band(),
            rows: e.rows(),
            cols: e.cols(),
            rank,
        }
    }
}

/// `out[.., ..] += T(a) * block`, rows of the product beyond `block.rows() + q`
/// being zero.
fn toeplitz_times_block(a: &LaurentSymbol, block: faer::MatRef<'_, f64>, out: &mut DenseMatrix) {
    let (r, c) = (block.nrows(), block.ncols());
    let rows = r + a.neg_degree();
    if use_banded(a.band(), r) {
        // (T(a) B)_{ij} = sum_d a_d B_{i+d, j}
        for j in 0..c {
            let src = block.col(j);
            for (d, ad) in a.iter() {
                if ad == 0.0 {
                    continue;
                }
                // i + d in [0, r)
                let i0 = (-d).max(0) as usize;
                let i1 = ((r as isize - d).min(rows as isize)).max(0) as usize;
                for i in i0..i1 {
                    out[(i, j)] += ad * src[(i as isize + d) as usize];
                }
            }
        }
    } else {
        let t = dense::toeplitz_block(a, 0, 0, rows, r);
        dense::gemm_add(out.as_mut().submatrix_mut(0, 0, rows, c), t.as_ref(), block, 1.0);
    }
}

/// `out[.., ..] += block * T(b)`.
fn block_times_toeplitz(block: faer::MatRef<'_, f64>, b: &LaurentSymbol, out: &mut DenseMatrix) {
    let (r, c) = (block.nrows(), block.ncols());
    let cols = c + b.pos_degree();
    if use_banded(b.band(), c) {
        // (B T(b))_{i, l+d} += B_{il} b_d
        for (d, bd) in b.iter() {
            if bd == 0.0 {
                continue;
            }
            for l in 0..c {
                let jj = l as isize + d;
                if jj < 0 || jj as usize >= cols {
                    continue;
                }
                let src = block.col(l);
                let mut dst = out.as_mut().col_mut(jj as usize);
                for i in 0..r {
                    dst[i] += bd * src[i];
                }
            }
        }
    } else {
        let t = dense::toeplitz_block(b, 0, 0, c, cols);
        dense::gemm_add(out.as_mut().submatrix_mut(0, 0, r, cols), block, t.as_ref(), 1.0);
    }
}

fn use_banded(band: usize, inner: usize) -> bool {
    band * 8 < inner
}

/// `(I - M)^{-1}` as the Neumann partial sum `sum_{i < N} M^i`, where `N` is
/// the smallest power of two meeting the tail bound
/// `||M||^N / (1 - ||M||) <= tol`. The partial sum is formed as the product
/// `(I + M)(I + M^2)(I + M^4)...`.
pub fn neumann_inverse(m: &QtMatrix, tol: f64, max_terms: usize) -> Result<QtMatrix> {
    const MARGIN: f64 = 1e-8;
    let rho = m.norm_inf();
    if rho >= 1.0 - MARGIN {
        return Err(Error::Breakdown(format!(
            "Neumann series needs ||M||_inf < 1, got {rho}"
        )));
    }
    let terms = neumann_terms(rho, tol);
    if terms > max_terms {
        return Err(Error::Breakdown(format!(
            "Neumann series needs {terms} terms (max {max_terms}) for ||M||_inf = {rho}"
        )));
    }
    let id = QtMatrix::identity(m.threshold);
    let mut sum = id.clone();
    let mut power = m.clone();
    let mut covered = 1usize;
    while covered < terms {
        if covered > 1 {
            power = power.mul(&power);
        }
        sum = sum.add(&sum.mul(&power));
        covered *= 2;
    }
    Ok(sum)
}

/// Smallest `N` with `rho^N / (1 - rho) <= tol`.
fn neumann_terms(rho: f64, tol: f64) -> usize {
    if rho == 0.0 {
        return 1;
    }
    let n = ((tol * (1.0 - rho)).ln() / rho.ln()).ceil();
    (n.max(1.0)) as usize
}

/// `(2I - C)^{-1} = (1/2) sum_i (C/2)^i`, valid for `||C||_inf < 2`.
pub fn neumann_inverse_shifted(c: &QtMatrix, tol: f64, max_terms: usize) -> Result<QtMatrix> {
    let norm = c.norm_inf();
    if norm >= 2.0 - 1e-8 {
        return Err(Error::Breakdown(format!(
            "shifted Neumann series needs ||C||_inf < 2, got {norm}"
        )));
    }
    // tail of (1/2) sum (C/2)^i is (||C||/2)^N / (2 - ||C||), i.e. half the
    // unshifted tail
    Ok(neumann_inverse(&c.scale(0.5), 2.0 * tol, max_terms)?.scale(0.5))
}
