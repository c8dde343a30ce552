//! `bench --suite tables`: reruns the numerical experiments and writes one
//! CSV per table plus figure data.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use serde::Serialize;

use qtsqrt::instances::{Instance, InstanceSpec};
use qtsqrt::pipeline::{self, Method, RunOptions};
use qtsqrt::dense::DenseMatrix;
use qtsqrt::solvers::SolveReport;
use qtsqrt::truncated;

use crate::RunRow;

type Solver = fn(&truncated::FiniteEquation, f64, usize) -> qtsqrt::Result<(DenseMatrix, SolveReport)>;

#[derive(clap::Args)]
pub(crate) struct BenchArgs {
    #[arg(long, default_value = "tables")]
    suite: String,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Use the full problem sizes: example-1 bands 32/30 with a 1000 x 1000
    /// correction in the second test, and all four (p, q) pairs for the
    /// truncated comparison. The default uses bands 16/15 and a 100 x 100
    /// correction, since the full first test alone takes about an hour.
    #[arg(long)]
    full: bool,
}

#[derive(Serialize)]
struct Features {
    test: usize,
    band: usize,
    rows: usize,
    cols: usize,
    rank: usize,
}

#[derive(Serialize)]
struct Params {
    test: usize,
    s0: f64,
    m: usize,
    n: usize,
    p: usize,
    q: usize,
}

#[derive(Serialize)]
struct TruncatedRow {
    p: usize,
    q: usize,
    k: usize,
    method: &'static str,
    iterations: usize,
    final_residual: f64,
    time_s: f64,
    qt_iterations: usize,
    qt_time_s: f64,
    extension_passed: bool,
}

fn writer(dir: &Path, name: &str) -> Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_path(dir.join(name))?)
}

fn generate(spec: InstanceSpec) -> Result<Instance> {
    let inst = spec.generate()?;
    inst.check_hypotheses()?;
    Ok(inst)
}

pub(crate) fn run(a: BenchArgs) -> Result<()> {
    if a.suite != "tables" {
        bail!("unknown suite '{}' (available: tables)", a.suite);
    }
    fs::create_dir_all(&a.out_dir)?;
    let opts = RunOptions::default();
    example1_tables(&a, &opts)?;
    example2_tables(&a, &opts)?;
    example3_table(&a, &opts)?;
    Ok(())
}

fn example1_tables(a: &BenchArgs, opts: &RunOptions) -> Result<()> {
    let mut t1 = writer(&a.out_dir, "table1.csv")?;
    let mut t2 = writer(&a.out_dir, "table2.csv")?;
    let (band_neg, band_pos, corr2) = if a.full { (32, 30, 1000) } else { (16, 15, 100) };
    for (test, corr_dim) in [(1, 0), (2, corr2)] {
        let inst = generate(InstanceSpec::Example1 { seed: a.seed, band_neg, band_pos, corr_dim })?;
        let name = format!("test{test}");
        let part = pipeline::toeplitz_part(&inst, opts)?;
        for m in [Method::Fpi, Method::Sda, Method::SdaRefine] {
            let out = pipeline::run_with(&inst, &part, m, opts)?;
            eprintln!("table1 {name} {m}: {} iterations, {:.2}s", out.report.iterations, out.report.wall_time_s);
            t1.serialize(RunRow::new(&name, &part, &out, opts.tol))?;
            if m == Method::Fpi {
                let s = &out.report.stats;
                t2.serialize(Features { test, band: s.band, rows: s.rows, cols: s.cols, rank: s.rank })?;
                if test == 1 {
                    pipeline::emit_figure_data(&out.root, &a.out_dir.join("fig"))?;
                }
            }
        }
        t1.flush()?;
        t2.flush()?;
    }
    Ok(())
}

fn example2_tables(a: &BenchArgs, opts: &RunOptions) -> Result<()> {
    let mut t3 = writer(&a.out_dir, "table3.csv")?;
    let mut t4 = writer(&a.out_dir, "table4.csv")?;
    let tests = [(0.1, 100, 1000, 1, 100), (0.5, 100, 1500, 2, 100), (0.9, 100, 2000, 2, 100)];
    for (i, (s0, m, n, p, q)) in tests.into_iter().enumerate() {
        let test = i + 1;
        t3.serialize(Params { test, s0, m, n, p, q })?;
        let inst = generate(InstanceSpec::Example2 { seed: a.seed, s0, m, n, p, q })?;
        let part = pipeline::toeplitz_part(&inst, opts)?;
        let name = format!("test{test}");
        for meth in [Method::Fpi, Method::Sda, Method::Binomial] {
            let out = pipeline::run_with(&inst, &part, meth, opts)?;
            eprintln!("table4 {name} {meth}: {} iterations, {:.2}s", out.report.iterations, out.report.wall_time_s);
            t4.serialize(RunRow::new(&name, &part, &out, opts.tol))?;
            t4.flush()?;
        }
    }
    t3.flush()?;
    Ok(())
}

fn example3_table(a: &BenchArgs, opts: &RunOptions) -> Result<()> {
    let mut t5 = writer(&a.out_dir, "table5.csv")?;
    let mut pairs = vec![(4, 2), (12, 10)];
    if a.full {
        pairs.extend([(20, 2), (20, 20)]);
    }
    for (p, q) in pairs {
        let inst = generate(InstanceSpec::Example3 { seed: a.seed, p, q })?;
        let part = pipeline::toeplitz_part(&inst, opts)?;
        let a1 = inst.a1();
        let tb = &part.tb;
        let b = &tb.symbol;
        let w = truncated::w_matrix(&a1, tb);
        let k = truncated::choose_k(b.pos_degree(), b.neg_degree(), w.correction.rows(), w.correction.cols())?;
        let eq = truncated::build_finite_equation(&a1, b, k)?;
        let rows: [(&'static str, Method, Solver); 2] = [
            ("fpi", Method::Fpi, truncated::solve_finite_fpi),
            ("sda", Method::Sda, truncated::solve_finite_sda),
        ];
        for (name, qt_method, solve) in rows {
            let (g, rep) = solve(&eq, opts.tol, opts.max_iter)?;
            let check = truncated::verify_extension(&a1, tb, &g, part.eps.max(opts.tol));
            let qt = pipeline::run_with(&inst, &part, qt_method, opts)?;
            eprintln!(
                "table5 ({p},{q}) k={k} {name}: {:.2}s truncated, {:.2}s quasi-Toeplitz",
                rep.wall_time_s, qt.report.wall_time_s
            );
            t5.serialize(TruncatedRow {
                p,
                q,
                k,
                method: name,
                iterations: rep.iterations,
                final_residual: rep.final_residual,
                time_s: rep.wall_time_s,
                qt_iterations: qt.report.iterations,
                qt_time_s: qt.report.wall_time_s,
                extension_passed: check.passed,
            })?;
            t5.flush()?;
        }
    }
    Ok(())
}
