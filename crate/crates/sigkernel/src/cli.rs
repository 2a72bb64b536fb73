//! Argument parsing and subcommand dispatch for the `sigkernel` binary.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sigkernel_core::datagen::{GenKind, GenSpec, DEFAULT_SEED};
use sigkernel_core::wavefront::propagate_with_policy;
use sigkernel_core::{gram_matrix_with, propagate_grid, Execution, TimeSeries, TruncationPolicy};

use crate::bench::{parse_length, run_bench, write_bench_csv, BenchConfig};
use crate::error::{exit, CliError, Result};
use crate::io::{self, GramMeta, KernelMeta, SCHEMA_VERSION};
use crate::validate::{run_suite, Suite, ValidateOptions};

const SUBCOMMANDS: [&str; 5] = ["kernel", "gram", "validate", "bench", "gen"];

#[derive(Debug, Parser)]
#[command(name = "sigkernel", version, about = "Signature kernels of piecewise-linear time series")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Worker threads for diagonals and Gram entries (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,

    /// JSON file of default flags; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kernel value of two series.
    Kernel(KernelArgs),
    /// Gram matrix of a family of series.
    Gram(GramArgs),
    /// Compare the engine with independent oracles.
    Validate(ValidateArgs),
    /// Time the engine across lengths and dimensions.
    Bench(BenchArgs),
    /// Write a synthetic series as CSV.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PolicyArgs {
    /// Fixed truncation order (default 7).
    #[arg(long, conflicts_with = "tol")]
    pub order: Option<usize>,
    /// Choose the order per entry for this tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
}

impl PolicyArgs {
    pub fn policy(&self) -> Result<TruncationPolicy> {
        Ok(match (self.order, self.tol) {
            (_, Some(tol)) => TruncationPolicy::adaptive(tol)?,
            (Some(n), None) => TruncationPolicy::fixed(n)?,
            (None, None) => TruncationPolicy::default(),
        })
    }
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    pub x: PathBuf,
    pub y: PathBuf,
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// Also write the kernel at every knot pair to this CSV.
    #[arg(long, value_name = "FILE")]
    pub grid: Option<PathBuf>,
    /// Print a JSON metadata line after the value.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct GramArgs {
    /// A directory of CSV files (sorted by name) or a list of CSV files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Metadata path (default: `--out` with a `.json` extension).
    #[arg(long, value_name = "FILE")]
    pub meta: Option<PathBuf>,
    /// Record the a-priori error bound in the metadata.
    #[arg(long)]
    pub bound: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Suites to run (default: all).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub suite: Vec<Suite>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub cases: usize,
    /// Replace every check's tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Series lengths, e.g. `2^7+1,2^8+1` or `129,257`.
    #[arg(long, value_delimiter = ',', default_value = "2^5+1,2^6+1,2^7+1,2^8+1")]
    pub lengths: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = 7)]
    pub order: usize,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output CSV (default: stdout).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GenKindArg {
    Brownian,
    Fbm,
    NearPeriodic,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub kind: GenKindArg,
    #[arg(long)]
    pub len: usize,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Hurst index for `fbm`.
    #[arg(long, default_value_t = 0.5)]
    pub hurst: f64,
    /// Period (in units of the time horizon) for `near-periodic`.
    #[arg(long, default_value_t = 0.25)]
    pub period: f64,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

impl GenArgs {
    pub fn spec(&self) -> GenSpec {
        let kind = match self.kind {
            GenKindArg::Brownian => GenKind::Brownian,
            GenKindArg::Fbm => GenKind::Fbm { hurst: self.hurst },
            GenKindArg::NearPeriodic => GenKind::NearPeriodic {
                period: self.period,
                amplitude: self.amplitude,
                noise: self.noise,
            },
        };
        GenSpec { kind, len: self.len, dim: self.dim, seed: self.seed }
    }
}

/// Removes `--config FILE` from `args` and splices the file's flags in
/// right after the subcommand, so later command-line flags override them.
/// A config `order` is dropped when the command line sets `tol`, and the
/// other way round.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut out = Vec::with_capacity(args.len());
    let mut config = None;
    let mut iter = args.into_iter();
    while let Some(a) = iter.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            let path = iter.next().ok_or_else(|| CliError::Usage("--config needs a file".into()))?;
            config = Some(PathBuf::from(path));
        } else if let Some(p) = s.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
        } else {
            out.push(a);
        }
    }
    let Some(path) = config else { return Ok(out) };
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Format {
        path: path.clone(),
        message: e.to_string(),
    })?;
    let serde_json::Value::Object(map) = doc else {
        return Err(CliError::Format { path, message: "expected a JSON object of flags".into() });
    };
    let given = |flag: &str| {
        out.iter().any(|a| {
            let s = a.to_string_lossy();
            s == flag || s.starts_with(&format!("{flag}="))
        })
    };
    let user_has_tol = given("--tol");
    let user_has_order = given("--order");
    let mut extra: Vec<OsString> = Vec::new();
    for (key, value) in map {
        let key = key.replace('_', "-");
        if key == "config" || (key == "order" && user_has_tol) || (key == "tol" && user_has_order) {
            continue;
        }
        let flag = format!("--{key}");
        let scalar = |v: &serde_json::Value| -> Result<String> {
            match v {
                serde_json::Value::String(s) => Ok(s.clone()),
                serde_json::Value::Number(n) => Ok(n.to_string()),
                _ => Err(CliError::Format {
                    path: path.clone(),
                    message: format!("unsupported value for {key}"),
                }),
            }
        };
        match &value {
            serde_json::Value::Bool(true) => extra.push(flag.into()),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::Array(items) => {
                let parts = items.iter().map(scalar).collect::<Result<Vec<_>>>()?;
                extra.push(flag.into());
                extra.push(parts.join(",").into());
            }
            v => {
                extra.push(flag.into());
                extra.push(scalar(v)?.into());
            }
        }
    }
    let at = out
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
        .map_or(out.len(), |i| i + 1);
    out.splice(at..at, extra);
    Ok(out)
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args = match expand_config(args.into_iter().map(Into::into).collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::INPUT } else { exit::OK };
        }
    };
    let stdout = std::io::stdout();
    match execute(&cli, &mut stdout.lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command, writing its report to `out`.
pub fn execute(cli: &Cli, out: &mut impl Write) -> Result<i32> {
    let execution = match cli.threads {
        Some(1) => Execution::Sequential,
        _ => Execution::Parallel,
    };
    match cli.threads {
        Some(n) if n > 1 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n as usize)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?;
            let mut buf = Vec::new();
            let result = pool.install(|| dispatch(&cli.command, execution, &mut buf));
            out.write_all(&buf).map_err(stdout_err)?;
            result
        }
        _ => dispatch(&cli.command, execution, out),
    }
}

fn dispatch(cmd: &Command, execution: Execution, out: &mut impl Write) -> Result<i32> {
    match cmd {
        Command::Kernel(a) => cmd_kernel(a, execution, out),
        Command::Gram(a) => cmd_gram(a, execution, out),
        Command::Validate(a) => cmd_validate(a, out),
        Command::Bench(a) => cmd_bench(a, execution, out),
        Command::Gen(a) => cmd_gen(a, out),
    }
}

fn stdout_err(e: std::io::Error) -> CliError {
    CliError::io("<stdout>", e)
}

fn cmd_kernel(a: &KernelArgs, execution: Execution, out: &mut impl Write) -> Result<i32> {
    let x = io::load_csv(&a.x)?;
    let y = io::load_csv(&a.y)?;
    let policy = a.policy.policy()?;
    let r = match (&a.grid, policy) {
        (Some(_), TruncationPolicy::Fixed(n)) => propagate_grid(&x, &y, n)?,
        (Some(_), TruncationPolicy::Adaptive { .. }) => {
            return Err(CliError::Usage("--grid needs a fixed --order".into()));
        }
        (None, p) => propagate_with_policy(&x, &y, p, execution)?,
    };
    if let (Some(path), Some(grid)) = (&a.grid, &r.grid) {
        io::save_grid_csv(grid, path)?;
    }
    writeln!(out, "K={:?}", r.value).map_err(stdout_err)?;
    if a.json {
        let meta = KernelMeta {
            schema: SCHEMA_VERSION,
            command: "kernel",
            value: r.value,
            order: r.order,
            order_converged: r.order_converged,
            len_x: x.len(),
            len_y: y.len(),
            dim: x.dim(),
            tiles: r.tiles_processed,
            peak_live_series: r.peak_live_series,
        };
        let line = serde_json::to_string(&meta).map_err(|e| CliError::Usage(e.to_string()))?;
        writeln!(out, "{line}").map_err(stdout_err)?;
    }
    Ok(exit::OK)
}

/// Expands a single directory argument into its `.csv` files sorted by name.
pub fn gram_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    if let [dir] = inputs {
        if dir.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(dir)
                .map_err(|e| CliError::io(dir, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
                .collect();
            files.sort();
            if files.is_empty() {
                return Err(CliError::Format { path: dir.clone(), message: "no .csv files".into() });
            }
            return Ok(files);
        }
    }
    Ok(inputs.to_vec())
}

fn cmd_gram(a: &GramArgs, execution: Execution, out: &mut impl Write) -> Result<i32> {
    let files = gram_inputs(&a.inputs)?;
    let family: Vec<TimeSeries> = files.iter().map(io::load_csv).collect::<Result<_>>()?;
    let start = Instant::now();
    let g = gram_matrix_with(&family, a.policy.policy()?, execution)?;
    let wall_seconds = start.elapsed().as_secs_f64();
    io::save_gram_csv(&g, &a.out)?;
    let m = g.size();
    let meta = GramMeta {
        schema: SCHEMA_VERSION,
        command: "gram",
        size: m,
        len: g.len,
        dim: family[0].dim(),
        orders: (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| g.order(i, j)).collect(),
        orders_converged: g.orders_converged,
        max_abs_rho: g.max_abs_rho,
        bound: a.bound.then_some(g.bound),
        peak_live_series: g.peak_live_series,
        wall_seconds,
        values: (0..m).map(|i| (0..m).map(|j| g.get(i, j)).collect()).collect(),
        inputs: files.iter().map(|p| p.display().to_string()).collect(),
    };
    let meta_path = a.meta.clone().unwrap_or_else(|| a.out.with_extension("json"));
    io::save_json(&meta, &meta_path)?;
    writeln!(out, "wrote {}x{} Gram matrix to {}", m, m, a.out.display()).map_err(stdout_err)?;
    Ok(exit::OK)
}

fn cmd_validate(a: &ValidateArgs, out: &mut impl Write) -> Result<i32> {
    let suites = if a.suite.is_empty() {
        vec![Suite::ClosedForm, Suite::OracleTriangle, Suite::Bound, Suite::Invariance]
    } else {
        a.suite.clone()
    };
    if let Some(t) = a.tol {
        if !(t >= 0.0) {
            return Err(CliError::Usage("--tol must be non-negative".into()));
        }
    }
    let opts = ValidateOptions { seed: a.seed, cases: a.cases, tol: a.tol, inject_fault: a.inject_fault };
    let mut failed = Vec::new();
    for suite in suites {
        let report = run_suite(suite, &opts)?;
        writeln!(out, "suite {suite}").map_err(stdout_err)?;
        for check in &report.checks {
            writeln!(out, "  {check}").map_err(stdout_err)?;
        }
        if !report.passed() {
            failed.push(suite.to_string());
        }
    }
    if failed.is_empty() {
        writeln!(out, "all suites passed").map_err(stdout_err)?;
        Ok(exit::OK)
    } else {
        writeln!(out, "failed suites: {}", failed.join(", ")).map_err(stdout_err)?;
        Ok(exit::VALIDATION)
    }
}

fn cmd_bench(a: &BenchArgs, execution: Execution, out: &mut impl Write) -> Result<i32> {
    let lengths = a
        .lengths
        .iter()
        .map(|t| parse_length(t).ok_or_else(|| CliError::Usage(format!("bad length {t:?}"))))
        .collect::<Result<Vec<_>>>()?;
    let cfg = BenchConfig {
        lengths,
        dims: a.dims.clone(),
        order: a.order,
        repeats: a.repeats,
        seed: a.seed,
        execution,
    };
    let rows = run_bench(&cfg)?;
    match &a.out {
        Some(path) => {
            let mut f = std::io::BufWriter::new(fs::File::create(path).map_err(|e| CliError::io(path, e))?);
            write_bench_csv(&rows, &mut f)
                .and_then(|_| f.flush())
                .map_err(|e| CliError::io(path, e))?;
        }
        None => write_bench_csv(&rows, out).map_err(stdout_err)?,
    }
    Ok(exit::OK)
}

fn cmd_gen(a: &GenArgs, out: &mut impl Write) -> Result<i32> {
    let ts = a.spec().generate()?;
    io::save_csv(&ts, &a.out)?;
    writeln!(out, "wrote {} points of dimension {} to {}", ts.len(), ts.dim(), display(&a.out))
        .map_err(stdout_err)?;
    Ok(exit::OK)
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
