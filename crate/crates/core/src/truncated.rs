//! Finite truncation of the correction equation.
//!
//! With `T11`, `A11`, `W11` the leading `k x k` blocks of `T(b)`, `A1` and
//! `W = 2T(b) - A1 - T(b)^2`, the correction is approximated by the solution
//! `G` of `(I - T11 - G)^2 = I - A11 - T12 T21`, equivalently
//! `G^2 - (I - T11) G - G (I - T11) = W11`, extended by zeros.

use std::fs;
use std::path::Path;
use std::time::Instant;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::dense::{self, DenseMatrix};
use crate::error::{Error, Result};
use crate::qt::QtMatrix;
use crate::solvers::{residual, SolveReport, RANK_TOL};
use crate::symbol::LaurentSymbol;

/// Constant multiplying `eps` in the extension checks.
pub const EXTENSION_CONSTANT: f64 = 10.0;

#[derive(Clone, Debug)]
pub struct FiniteEquation {
    pub k: usize,
    pub t11: DenseMatrix,
    pub a11: DenseMatrix,
    /// `T12 T21`.
    pub tt: DenseMatrix,
    pub w11: DenseMatrix,
}

/// `3 max{p, q, n1, n2}`.
pub fn choose_k(p: usize, q: usize, n1: usize, n2: usize) -> Result<usize> {
    let m = p.max(q).max(n1).max(n2);
    if m == 0 {
        return Err(Error::InvalidArgument("choose_k needs a positive argument".into()));
    }
    Ok(3 * m)
}

/// `W = 2T(b) - A1 - T(b)^2` in QT arithmetic.
pub fn w_matrix(a1: &QtMatrix, tb: &QtMatrix) -> QtMatrix {
    tb.scale(2.0).sub(a1).sub(&tb.mul(tb))
}

/// `(T12 T21)_{ij} = sum_{m >= k} b_{m-i} b_{j-m}` (zero-based).
fn toeplitz_tail_product(b: &LaurentSymbol, k: usize) -> DenseMatrix {
    let (p, q) = (b.pos_degree() as isize, b.neg_degree() as isize);
    let ki = k as isize;
    let mut tt = Mat::zeros(k, k);
    if b.is_zero() {
        return tt;
    }
    // nonzero only for i >= k - p and j >= k - q
    let i0 = (ki - p).max(0) as usize;
    let j0 = (ki - q).max(0) as usize;
    for j in j0..k {
        for i in i0..k {
            let (ii, jj) = (i as isize, j as isize);
            let hi = (ii + p).min(jj + q);
            let mut s = 0.0;
            for m in ki..=hi {
                s += b.coeff(m - ii) * b.coeff(jj - m);
            }
            tt[(i, j)] = s;
        }
    }
    tt
}

pub fn build_finite_equation(a1: &QtMatrix, b: &LaurentSymbol, k: usize) -> Result<FiniteEquation> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let need = b
        .pos_degree()
        .max(b.neg_degree())
        .max(a1.correction.rows())
        .max(a1.correction.cols());
    if k <= need {
        log::warn!("k = {k} does not exceed max(p, q, n1, n2) = {need}");
    }
    let tb = QtMatrix::toeplitz(b.clone(), a1.threshold);
    Ok(FiniteEquation {
        k,
        t11: dense::toeplitz_block(b, 0, 0, k, k),
        a11: a1.truncate_dense(k),
        tt: toeplitz_tail_product(b, k),
        w11: w_matrix(a1, &tb).truncate_dense(k),
    })
}

impl FiniteEquation {
    /// `I - A11 - TT`.
    pub fn target(&self) -> DenseMatrix {
        Mat::<f64>::identity(self.k, self.k) - &self.a11 - &self.tt
    }

    /// `||(I - T11 - G)^2 - (I - A11 - TT)||_inf`.
    pub fn residual(&self, g: &DenseMatrix) -> f64 {
        let y = Mat::<f64>::identity(self.k, self.k) - &self.t11 - g;
        dense::norm_inf((&y * &y - self.target()).as_ref())
    }

    fn check(&self) -> Result<()> {
        let n = dense::norm_inf((&self.a11 + &self.tt).as_ref());
        if n >= 1.0 {
            return Err(Error::Hypothesis(format!("||A11 + T12 T21||_inf = {n} is not below 1")));
        }
        Ok(())
    }

    /// Writes `t11.csv`, `a11.csv`, `tt.csv`, `w11.csv` and `manifest.json`
    /// into `dir`.
    pub fn dump(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (name, m) in [("t11", &self.t11), ("a11", &self.a11), ("tt", &self.tt), ("w11", &self.w11)] {
            let f = fs::File::create(dir.join(format!("{name}.csv")))?;
            dense::write_csv(m.as_ref(), std::io::BufWriter::new(f))?;
        }
        let manifest = Manifest {
            k: self.k,
            files: ["t11.csv", "a11.csv", "tt.csv", "w11.csv"].map(String::from).to_vec(),
        };
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        let read = |name: &str| -> Result<DenseMatrix> {
            let f = fs::File::open(dir.join(name))?;
            let m = dense::read_csv(std::io::BufReader::new(f))?;
            if m.nrows() != manifest.k || m.ncols() != manifest.k {
                return Err(Error::Parse(format!("{name}: expected {0}x{0} block", manifest.k)));
            }
            Ok(m)
        };
        if manifest.files.len() != 4 {
            return Err(Error::Parse("manifest must list four blocks".into()));
        }
        Ok(FiniteEquation {
            k: manifest.k,
            t11: read(&manifest.files[0])?,
            a11: read(&manifest.files[1])?,
            tt: read(&manifest.files[2])?,
            w11: read(&manifest.files[3])?,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    k: usize,
    files: Vec<String>,
}

fn finish(method: &str, start: Instant, residuals: Vec<f64>, g: &DenseMatrix) -> SolveReport {
    SolveReport {
        method: method.into(),
        iterations: residuals.len() - 1,
        final_residual: *residuals.last().unwrap(),
        wall_time_s: start.elapsed().as_secs_f64(),
        stats: QtMatrix::from_correction(g.clone(), 0.0).correction_stats(RANK_TOL),
        residuals,
    }
}

/// Dense fixed-point iteration `G_{j+1} = (2I - T11 - G_j)^{-1}(Q + G_j T11)`
/// with `Q = -W11`.
pub fn solve_finite_fpi(eq: &FiniteEquation, tol: f64, max_iter: usize) -> Result<(DenseMatrix, SolveReport)> {
    eq.check()?;
    let start = Instant::now();
    let k = eq.k;
    let two = Mat::<f64>::identity(k, k) * faer::Scale(2.0);
    let q = -&eq.w11;
    let mut g = Mat::<f64>::zeros(k, k);
    let mut residuals = vec![eq.residual(&g)];
    while *residuals.last().unwrap() > tol {
        if residuals.len() > max_iter {
            return Err(Error::NoConvergence {
                method: "truncated-fpi".into(),
                iterations: max_iter,
                residual: *residuals.last().unwrap(),
            });
        }
        let lhs = &two - &eq.t11 - &g;
        let rhs = &q + &g * &eq.t11;
        g = dense::solve(lhs.as_ref(), rhs.as_ref())?;
        residuals.push(eq.residual(&g));
    }
    let report = finish("truncated-fpi", start, residuals, &g);
    Ok((g, report))
}

/// Dense doubling iteration with the initialization of the infinite case
/// (`A1 -> A11 + TT`, `R = -W11`) and direct solves.
pub fn solve_finite_sda(eq: &FiniteEquation, tol: f64, max_iter: usize) -> Result<(DenseMatrix, SolveReport)> {
    eq.check()?;
    let start = Instant::now();
    let k = eq.k;
    let id = Mat::<f64>::identity(k, k);
    let two = &id * faer::Scale(2.0);
    let s = dense::inverse((&two - &eq.t11).as_ref())?;
    let a1 = &eq.a11 + &eq.tt;
    let mut e = &s * &a1;
    let mut p = &s * (-&eq.w11);
    let mut q = s.clone();
    let mut f = s;
    let mut residuals = vec![eq.residual(&p)];
    while *residuals.last().unwrap() > tol {
        if residuals.len() > max_iter {
            return Err(Error::NoConvergence {
                method: "truncated-sda".into(),
                iterations: max_iter,
                residual: *residuals.last().unwrap(),
            });
        }
        let iqp = &id - &q * &p;
        let mut rhs = Mat::<f64>::zeros(k, 2 * k);
        rhs.as_mut().submatrix_mut(0, 0, k, k).copy_from(&e);
        rhs.as_mut().submatrix_mut(0, k, k, k).copy_from(&q);
        let sol = dense::solve(iqp.as_ref(), rhs.as_ref())?;
        let we = sol.as_ref().submatrix(0, 0, k, k).to_owned();
        let wq = sol.as_ref().submatrix(0, k, k, k).to_owned();
        let fp = &f * &p;
        let e_next = &e * &we;
        let p_next = &p + &fp * &we;
        let f_next = &f * &f + &fp * &wq * &f;
        let q_next = &q + &e * &wq * &f;
        e = e_next;
        p = p_next;
        f = f_next;
        q = q_next;
        residuals.push(eq.residual(&p));
    }
    let report = finish("truncated-sda", start, residuals, &p);
    Ok((p, report))
}

/// `G` extended by zeros to a semi-infinite correction.
pub fn extend_to_infinity(g: &DenseMatrix, threshold: f64) -> QtMatrix {
    QtMatrix::from_correction(g.clone(), threshold).compress(threshold)
}

/// Quantities that should be small when the truncation captures `E_B`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtensionCheck {
    pub g_t12: f64,
    pub t21_g: f64,
    /// `max(||W12||, ||W21||, ||W22||)`.
    pub w_off: f64,
    pub bound: f64,
    /// Relative residual of `I - T(b) - E_G` as a root of `I - A1`.
    pub residual: f64,
    pub passed: bool,
}

pub fn verify_extension(a1: &QtMatrix, tb: &QtMatrix, g: &DenseMatrix, eps: f64) -> ExtensionCheck {
    let k = g.nrows();
    let b = &tb.symbol;
    let (p, q) = (b.pos_degree(), b.neg_degree());
    let t12 = dense::toeplitz_block(b, 0, k, k, p);
    let t21 = dense::toeplitz_block(b, k, 0, q, k);
    let g_t12 = dense::norm_inf((g * &t12).as_ref());
    let t21_g = dense::norm_inf((&t21 * g).as_ref());

    let w = w_matrix(a1, tb);
    let (pw, qw) = (w.symbol.pos_degree(), w.symbol.neg_degree());
    let nc = w.correction.cols().max(k + pw).saturating_sub(k);
    let nr = w.correction.rows().max(k + qw).saturating_sub(k);
    let w12 = dense::norm_inf(w.block(0, k, k, nc).as_ref());
    let w21 = dense::norm_inf(w.block(k, 0, nr, k).as_ref());
    // W22 = T(w) + (leading correction shifted by k)
    let e = w.correction.dense();
    let (er, ec) = (e.nrows().saturating_sub(k), e.ncols().saturating_sub(k));
    let e22 = if er > 0 && ec > 0 {
        e.as_ref().submatrix(k, k, er, ec).to_owned()
    } else {
        Mat::zeros(0, 0)
    };
    let w22 = QtMatrix::new(w.symbol.clone(), crate::qt::CorrectionBlock::from_dense(e22), 0.0).norm_inf();
    let w_off = w12.max(w21).max(w22);

    let a = QtMatrix::identity(a1.threshold).sub(a1);
    let res = residual(&a, tb, &extend_to_infinity(g, a1.threshold));
    let bound = EXTENSION_CONSTANT * eps;
    ExtensionCheck {
        g_t12,
        t21_g,
        w_off,
        bound,
        residual: res,
        passed: g_t12 < bound && t21_g < bound && w_off < bound,
    }
}
