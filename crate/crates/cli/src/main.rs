use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qtsqrt::instances::{Instance, InstanceSpec};
use qtsqrt::pipeline::{self, Method, RunOptions, RunOutput, ToeplitzPart};
use qtsqrt::qt::{QtMatrix, DEFAULT_THRESHOLD};
use qtsqrt::solvers::{SolveReport, DEFAULT_MAX_ITER, DEFAULT_TOL};
use qtsqrt::truncated::ExtensionCheck;

mod bench;

/// Exit status of `sqrt` when the solver finished but missed the tolerance.
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "qtsqrt", version, about = "Square roots of quasi-Toeplitz M-matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random test instance and write it as JSON.
    Gen(GenArgs),
    /// Compute the square root of an instance.
    Sqrt(SqrtArgs),
    /// Run the benchmark tables and write CSV files.
    Bench(bench::BenchArgs),
    /// Write CSV data for plotting a computed root.
    Figdata(FigdataArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Example1,
    Example2,
    Example3,
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// example1: number of coefficients with index <= 0
    #[arg(long, default_value_t = 32)]
    band_neg: usize,
    /// example1: number of coefficients with index >= 0
    #[arg(long, default_value_t = 30)]
    band_pos: usize,
    /// example1: size of the square random correction
    #[arg(long, default_value_t = 0)]
    corr_dim: usize,
    #[arg(long, default_value_t = 0.5)]
    s0: f64,
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long, default_value_t = 1500)]
    n: usize,
    /// example2: rows of U; example3: coefficients with index >= 0
    #[arg(long)]
    p: Option<usize>,
    /// example2: columns of U; example3: coefficients with index <= 0
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct SqrtArgs {
    /// Instance JSON written by `gen`, or a generator spec with a `family` field.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "sda")]
    method: Method,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Absolute stopping threshold for the symbol (default: relative to |b''(1)|).
    #[arg(long)]
    symbol_eps: Option<f64>,
    /// Truncation size for the truncated methods.
    #[arg(long)]
    k: Option<usize>,
    /// Root `B` as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    /// CSV file to append a summary row to.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(clap::Args)]
struct FigdataArgs {
    /// Root JSON written by `sqrt --out`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out_prefix: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Gen(a) => gen(a).map(|_| ExitCode::SUCCESS),
        Command::Sqrt(a) => sqrt(a),
        Command::Bench(a) => bench::run(a).map(|_| ExitCode::SUCCESS),
        Command::Figdata(a) => figdata(a).map(|_| ExitCode::SUCCESS),
    };
    res.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}

fn gen(a: GenArgs) -> Result<()> {
    let spec = match a.family {
        Family::Example1 => InstanceSpec::Example1 {
            seed: a.seed,
            band_neg: a.band_neg,
            band_pos: a.band_pos,
            corr_dim: a.corr_dim,
        },
        Family::Example2 => InstanceSpec::Example2 {
            seed: a.seed,
            s0: a.s0,
            m: a.m,
            n: a.n,
            p: a.p.unwrap_or(2),
            q: a.q.unwrap_or(100),
        },
        Family::Example3 => InstanceSpec::Example3 {
            seed: a.seed,
            p: a.p.unwrap_or(4),
            q: a.q.unwrap_or(2),
        },
    };
    let inst = spec.generate()?;
    inst.check_hypotheses()?;
    write_json(&a.out, &inst)?;
    let e = &inst.a.correction;
    eprintln!(
        "wrote {}: symbol band {}, correction {}x{}, gamma {}",
        a.out.display(),
        inst.a.symbol.band(),
        e.rows(),
        e.cols(),
        inst.gamma
    );
    Ok(())
}

pub(crate) fn load_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if value.get("family").is_some() {
        let spec: InstanceSpec = serde_json::from_value(value)
            .with_context(|| format!("parsing instance spec in {}", path.display()))?;
        Ok(spec.generate()?)
    } else {
        serde_json::from_value(value).with_context(|| format!("parsing instance in {}", path.display()))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let text = serde_json::to_string(value)?;
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[derive(Serialize)]
struct SymbolSummary {
    n_final: usize,
    eps: f64,
    delta_m: f64,
    band: usize,
}

#[derive(Serialize)]
struct SqrtReport<'a> {
    instance: &'a str,
    gamma: f64,
    method: Method,
    tol: f64,
    threshold: f64,
    converged: bool,
    /// `||(I - B)^2 - A/gamma||_inf / ||A/gamma||_inf` of the returned root.
    residual: f64,
    symbol: SymbolSummary,
    solve: &'a SolveReport,
    k: Option<usize>,
    extension: Option<&'a ExtensionCheck>,
}

/// One summary row per run, shared by `sqrt --csv` and `bench`.
#[derive(Serialize)]
pub(crate) struct RunRow {
    pub instance: String,
    pub method: String,
    pub iterations: usize,
    pub final_residual: f64,
    pub residual: f64,
    pub time_s: f64,
    pub symbol_n: usize,
    pub band: usize,
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub converged: bool,
}

impl RunRow {
    pub(crate) fn new(instance: &str, part: &ToeplitzPart, out: &RunOutput, tol: f64) -> Self {
        let s = &out.report.stats;
        RunRow {
            instance: instance.to_string(),
            method: out.method.to_string(),
            iterations: out.report.iterations,
            final_residual: out.report.final_residual,
            residual: out.residual,
            time_s: out.report.wall_time_s,
            symbol_n: part.symbol.n_final,
            band: s.band,
            rows: s.rows,
            cols: s.cols,
            rank: s.rank,
            converged: out.converged(tol),
        }
    }
}

fn sqrt(a: SqrtArgs) -> Result<ExitCode> {
    let inst = load_instance(&a.input)?;
    inst.check_hypotheses()?;
    if !(a.tol > 0.0) {
        bail!("--tol must be positive");
    }
    let opts = RunOptions {
        tol: a.tol,
        threshold: a.threshold,
        symbol_eps: a.symbol_eps,
        max_iter: a.max_iter,
        k: a.k,
        ..RunOptions::default()
    };
    let part = pipeline::toeplitz_part(&inst, &opts)?;
    let out = pipeline::run_with(&inst, &part, a.method, &opts)?;
    let converged = out.converged(a.tol);

    if let Some(path) = &a.out {
        write_json(path, &out.root)?;
    }
    if let Some(path) = &a.report {
        let report = SqrtReport {
            instance: &inst.description,
            gamma: inst.gamma,
            method: out.method,
            tol: a.tol,
            threshold: a.threshold,
            converged,
            residual: out.residual,
            symbol: SymbolSummary {
                n_final: part.symbol.n_final,
                eps: part.eps,
                delta_m: part.symbol.delta_m,
                band: part.tb.symbol.band(),
            },
            solve: &out.report,
            k: out.k,
            extension: out.extension.as_ref(),
        };
        write_json(path, &report)?;
    }
    if let Some(path) = &a.csv {
        let fresh = !path.exists() || fs::metadata(path)?.len() == 0;
        let file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .with_context(|| format!("opening {}", path.display()))?;
        let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
        w.serialize(RunRow::new(&inst.description, &part, &out, a.tol))?;
        w.flush()?;
    }
    println!(
        "{}: iterations {}, residual {:.3e}, time {:.3}s, symbol n {}, {}",
        out.method,
        out.report.iterations,
        out.report.final_residual,
        out.report.wall_time_s,
        part.symbol.n_final,
        if converged { "converged" } else { "NOT converged" }
    );
    if converged {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("residual {:e} above tolerance {:e}", out.report.final_residual, a.tol);
        Ok(ExitCode::from(EXIT_NOT_CONVERGED))
    }
}

fn figdata(a: FigdataArgs) -> Result<()> {
    let text = fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let root: QtMatrix =
        serde_json::from_str(&text).with_context(|| format!("parsing root in {}", a.input.display()))?;
    let paths = pipeline::emit_figure_data(&root, &a.out_prefix)?;
    for p in [&paths.symbol_neg, &paths.symbol_pos, &paths.correction] {
        println!("{}", p.display());
    }
    Ok(())
}
