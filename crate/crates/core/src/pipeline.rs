//! End-to-end square root of an instance: Toeplitz part from the symbol,
//! then the correction by the selected method.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::Instance;
use crate::qt::{QtMatrix, DEFAULT_THRESHOLD};
use crate::solvers::{self, residual, SolveReport, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::symbolsqrt::{scaled_eps, sqrt_symbol, SymbolSqrtResult, DEFAULT_N_MAX, DEFAULT_REL_EPS};
use crate::truncated::{self, ExtensionCheck};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Fpi,
    Sda,
    SdaRefine,
    Binomial,
    TruncatedFpi,
    TruncatedSda,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Fpi,
        Method::Sda,
        Method::SdaRefine,
        Method::Binomial,
        Method::TruncatedFpi,
        Method::TruncatedSda,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Fpi => "fpi",
            Method::Sda => "sda",
            Method::SdaRefine => "sda-refine",
            Method::Binomial => "binomial",
            Method::TruncatedFpi => "truncated-fpi",
            Method::TruncatedSda => "truncated-sda",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method '{s}'")))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunOptions {
    pub tol: f64,
    pub threshold: f64,
    /// Absolute stopping threshold for the symbol; when absent it is
    /// `symbol_rel_eps * max(1, |b''(1)|)`.
    pub symbol_eps: Option<f64>,
    pub symbol_rel_eps: f64,
    pub n_max: usize,
    pub max_iter: usize,
    /// Truncation size for the truncated methods; chosen by
    /// [`truncated::choose_k`] when absent.
    pub k: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            tol: DEFAULT_TOL,
            threshold: DEFAULT_THRESHOLD,
            symbol_eps: None,
            symbol_rel_eps: DEFAULT_REL_EPS,
            n_max: DEFAULT_N_MAX,
            max_iter: DEFAULT_MAX_ITER,
            k: None,
        }
    }
}

/// Toeplitz part of the root, shared by all correction methods.
#[derive(Clone, Debug)]
pub struct ToeplitzPart {
    pub symbol: SymbolSqrtResult,
    pub eps: f64,
    pub tb: QtMatrix,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunOutput {
    pub method: Method,
    /// `B` with `(I - B)^2 = A / gamma`.
    pub root: QtMatrix,
    /// `E_B`, i.e. `B - T(bhat)`; for the binomial iteration the difference
    /// between its `B` and `T(bhat)`.
    pub correction: QtMatrix,
    pub report: SolveReport,
    /// `||(I - B)^2 - A/gamma||_inf / ||A/gamma||_inf`.
    pub residual: f64,
    pub k: Option<usize>,
    pub extension: Option<ExtensionCheck>,
}

impl RunOutput {
    /// Exit criterion: the method's own stopping residual reached `tol`.
    pub fn converged(&self, tol: f64) -> bool {
        self.report.final_residual <= tol
    }
}

pub fn toeplitz_part(inst: &Instance, opts: &RunOptions) -> Result<ToeplitzPart> {
    let eps = match opts.symbol_eps {
        Some(e) => e,
        None => scaled_eps(&inst.a.symbol, inst.gamma, opts.symbol_rel_eps)?,
    };
    let symbol = sqrt_symbol(&inst.a.symbol, inst.gamma, eps, opts.n_max)?;
    let tb = QtMatrix::toeplitz(symbol.bhat.trim(opts.threshold), opts.threshold);
    Ok(ToeplitzPart { symbol, eps, tb })
}

fn a1_with_threshold(inst: &Instance, threshold: f64) -> QtMatrix {
    let mut a1 = inst.a1();
    a1.threshold = threshold;
    a1
}

/// Computes the root with one method.
pub fn run(inst: &Instance, method: Method, opts: &RunOptions) -> Result<RunOutput> {
    inst.check_hypotheses()?;
    let part = toeplitz_part(inst, opts)?;
    run_with(inst, &part, method, opts)
}

/// As [`run`], reusing a precomputed Toeplitz part.
pub fn run_with(inst: &Instance, part: &ToeplitzPart, method: Method, opts: &RunOptions) -> Result<RunOutput> {
    let a1 = a1_with_threshold(inst, opts.threshold);
    let a = QtMatrix::identity(opts.threshold).sub(&a1);
    let tb = &part.tb;
    let (tol, it) = (opts.tol, opts.max_iter);
    let mut k = None;
    let mut extension = None;
    let mut full = None;
    let (correction, report) = match method {
        Method::Fpi => solvers::fpi_correction(&a1, tb, tol, it)?,
        Method::Sda => solvers::sda_correction(&a1, tb, tol, it)?,
        Method::SdaRefine => {
            let init = solvers::substochastic_completion(&tb.symbol, opts.threshold);
            solvers::sda_refine(&a1, tb, &init, tol, it)?
        }
        Method::Binomial => {
            let (b, rep) = solvers::binomial_sqrt(&a1, tol, it)?;
            let corr = b.sub(tb);
            full = Some(b);
            (corr, rep)
        }
        Method::TruncatedFpi | Method::TruncatedSda => {
            let b = &tb.symbol;
            let kk = match opts.k {
                Some(kk) => kk,
                None => {
                    let w = truncated::w_matrix(&a1, tb);
                    truncated::choose_k(
                        b.pos_degree(),
                        b.neg_degree(),
                        w.correction.rows(),
                        w.correction.cols(),
                    )?
                }
            };
            let eq = truncated::build_finite_equation(&a1, b, kk)?;
            let (g, rep) = if method == Method::TruncatedFpi {
                truncated::solve_finite_fpi(&eq, tol, it)?
            } else {
                truncated::solve_finite_sda(&eq, tol, it)?
            };
            k = Some(kk);
            extension = Some(truncated::verify_extension(&a1, tb, &g, part.eps.max(tol)));
            (truncated::extend_to_infinity(&g, opts.threshold), rep)
        }
    };
    let root = full.unwrap_or_else(|| tb.add(&correction));
    let zero = QtMatrix::zero(opts.threshold);
    let res = residual(&a, &zero, &root);
    Ok(RunOutput {
        method,
        root,
        correction,
        report,
        residual: res,
        k,
        extension,
    })
}

/// Paths written by [`emit_figure_data`].
#[derive(Clone, Debug)]
pub struct FigurePaths {
    pub symbol_neg: PathBuf,
    pub symbol_pos: PathBuf,
    pub correction: PathBuf,
}

/// Writes `{prefix}_symbol_neg.csv` and `{prefix}_symbol_pos.csv` with rows
/// `index,log10|b_i|` for `i <= 0` and `i >= 0`, and
/// `{prefix}_correction.csv` with rows `i,j,log10|e_ij|` (one-based) for the
/// nonzero entries of the compressed correction.
pub fn emit_figure_data(root: &QtMatrix, prefix: &Path) -> Result<FigurePaths> {
    let with_suffix = |s: &str| {
        let mut name = prefix.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(s);
        prefix.with_file_name(name)
    };
    if let Some(dir) = prefix.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let paths = FigurePaths {
        symbol_neg: with_suffix("_symbol_neg.csv"),
        symbol_pos: with_suffix("_symbol_pos.csv"),
        correction: with_suffix("_correction.csv"),
    };
    let sym = &root.symbol;
    let mut neg = BufWriter::new(fs::File::create(&paths.symbol_neg)?);
    let mut pos = BufWriter::new(fs::File::create(&paths.symbol_pos)?);
    writeln!(neg, "index,log10_abs")?;
    writeln!(pos, "index,log10_abs")?;
    for (j, c) in sym.iter() {
        if c == 0.0 {
            continue;
        }
        if j <= 0 {
            writeln!(neg, "{j},{}", c.abs().log10())?;
        }
        if j >= 0 {
            writeln!(pos, "{j},{}", c.abs().log10())?;
        }
    }
    let mut heat = BufWriter::new(fs::File::create(&paths.correction)?);
    writeln!(heat, "i,j,log10_abs")?;
    let e = root.correction.compress(root.threshold);
    let d = e.dense();
    for i in 0..e.rows() {
        for j in 0..e.cols() {
            let v = d[(i, j)];
            if v != 0.0 {
                writeln!(heat, "{},{},{}", i + 1, j + 1, v.abs().log10())?;
            }
        }
    }
    neg.flush()?;
    pos.flush()?;
    heat.flush()?;
    Ok(paths)
}
