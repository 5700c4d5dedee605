//! The `manybody` command-line tool.
//!
//! Exit codes: 0 on success, 1 on usage, parse or IO errors, 2 when a
//! solver did not converge (outputs are still written).

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::completion::{lbtc, CompletionOptions, CompletionResult, InitStrategy};
use crate::factors::extract_factors;
use crate::interactions::{parse_spec, InteractionSet};
use crate::io::{read_masked, read_raw, read_tensor, write_factor_dir, write_tensor};
use crate::oracle::{ipf_project, OracleOptions};
use crate::projection::{project, SolverOptions};
use crate::tensor::{kl_divergence, normalize, random_ring_tensor, recovery_fit, relative_error, DenseTensor};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "manybody", version, about = "Many-body approximation and completion of non-negative tensors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Project a tensor onto an interaction model.
    Approximate(ApproximateArgs),
    /// Fill in the `nan` entries of a tensor.
    Complete(CompleteArgs),
    /// Generate synthetic tensors.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Show the closed interaction set and its parameter count.
    Info(InfoArgs),
    /// Compare a tensor against a reference.
    Metrics(MetricsArgs),
    /// Reference projection by iterative proportional fitting.
    #[command(hide = true)]
    Ipf(IpfArgs),
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// Stop when the moment residual drops below this.
    #[arg(long, default_value_t = 1e-5)]
    tolerance: f64,
    /// Newton iteration cap.
    #[arg(long = "max-iter", default_value_t = 100)]
    max_iter: usize,
}

impl SolverArgs {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            tolerance: self.tolerance,
            max_iterations: self.max_iter,
            ..Default::default()
        }
    }
}

#[derive(Args, Debug)]
struct ApproximateArgs {
    #[arg(long)]
    input: PathBuf,
    /// e.g. `body=2`, `cyclic`, `(1,2)(2,3)`.
    #[arg(long)]
    interactions: String,
    #[arg(long)]
    output: PathBuf,
    /// Write the factors and a manifest into this directory.
    #[arg(long)]
    factors: Option<PathBuf>,
    /// Write stats JSON here instead of stdout.
    #[arg(long)]
    stats: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug)]
struct CompleteArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    interactions: String,
    #[arg(long)]
    output: PathBuf,
    /// Number of seeded runs (gaussian init only); the lowest final residual wins.
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `observed-mean`, `gaussian:MEAN,STD` or `const:C`.
    #[arg(long, default_value = "observed-mean")]
    init: String,
    /// Stop when successive residuals differ by less than this.
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,
    /// Iteration cap of the completion loop.
    #[arg(long = "max-outer", default_value_t = 500)]
    max_outer: usize,
    /// Fully observed reference; adds `recovery_fit` on the missing entries to the stats.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    stats: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Subcommand, Debug)]
enum SynthCommand {
    /// Contraction of random tensor-ring cores with uniform (0, 1) entries.
    Ring(RingArgs),
}

#[derive(Args, Debug)]
struct RingArgs {
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    dims: Vec<usize>,
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    ranks: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct InfoArgs {
    #[arg(long)]
    interactions: String,
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    dims: Vec<usize>,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    approx: PathBuf,
    /// Entries to score for `recovery_fit`: its `nan` positions, or its nonzero positions if it has no `nan`.
    #[arg(long)]
    mask: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct IpfArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    interactions: String,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
    #[arg(long = "max-sweeps", default_value_t = 10_000)]
    max_sweeps: usize,
}

#[derive(Serialize)]
struct Stats {
    kl: f64,
    relative_error: f64,
    iterations: usize,
    converged: bool,
    parameter_count: usize,
    interaction_spec: String,
    elapsed_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct CompleteStats {
    #[serde(flatten)]
    base: Stats,
    residual_trace_len: usize,
    final_residual: f64,
    residual_trace: Vec<f64>,
    restarts: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    recovery_fit: Option<f64>,
}

#[derive(Serialize)]
struct InfoReport {
    subsets: Vec<Vec<usize>>,
    parameter_count: usize,
    basis_size: usize,
}

#[derive(Serialize)]
struct MetricsReport {
    relative_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    recovery_fit: Option<f64>,
    /// `null` when the approximation is zero where the truth is not.
    kl: Option<f64>,
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type CmdResult = Result<i32, Failure>;

/// Runs the tool on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Approximate(a) => approximate(a),
        Command::Complete(a) => complete(a),
        Command::Synth(SynthCommand::Ring(a)) => synth_ring(a),
        Command::Info(a) => info(a),
        Command::Metrics(a) => metrics(a),
        Command::Ipf(a) => ipf(a),
    };
    match result {
        Ok(code) => code,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
    }
}

fn emit_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), Failure> {
    let json = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => std::fs::write(p, json + "\n").map_err(|e| Failure(format!("{}: {e}", p.display()))),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn resolve(spec: &str, order: usize) -> Result<InteractionSet, Failure> {
    parse_spec(spec, order).map_err(|e| Failure(format!("--interactions {spec:?}: {e}")))
}

fn approximate(a: ApproximateArgs) -> CmdResult {
    let start = Instant::now();
    let p = read_tensor(&a.input)?;
    let s = resolve(&a.interactions, p.order())?;
    let r = project(&p, &s, &a.solver.options())?;
    write_tensor(&a.output, &r.tensor)?;
    if let Some(dir) = &a.factors {
        if r.converged {
            write_factor_dir(dir, &extract_factors(&r, &s)?)?;
        } else {
            eprintln!("warning: projection did not converge; factors not written");
        }
    }
    if !r.converged {
        eprintln!(
            "warning: projection did not converge after {} iterations (residual {:.3e})",
            r.iterations, r.residual
        );
    }
    let stats = Stats {
        kl: r.kl,
        relative_error: relative_error(&p, &r.tensor)?,
        iterations: r.iterations,
        converged: r.converged,
        parameter_count: s.count_parameters(p.dims())?,
        interaction_spec: a.interactions.clone(),
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        seed: None,
    };
    emit_json(&stats, a.stats.as_deref())?;
    Ok(if r.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn parse_init(text: &str, seed: u64) -> Result<InitStrategy, Failure> {
    let bad = || Failure(format!("--init {text:?}: expected observed-mean, gaussian:MEAN,STD or const:C"));
    if text == "observed-mean" {
        return Ok(InitStrategy::ObservedMean);
    }
    if let Some(rest) = text.strip_prefix("gaussian:") {
        let (m, s) = rest.split_once(',').ok_or_else(bad)?;
        let mean = m.trim().parse().map_err(|_| bad())?;
        let std = s.trim().parse().map_err(|_| bad())?;
        return Ok(InitStrategy::Gaussian { mean, std, seed });
    }
    if let Some(rest) = text.strip_prefix("const:") {
        return Ok(InitStrategy::Constant(rest.trim().parse().map_err(|_| bad())?));
    }
    Err(bad())
}

fn complete(a: CompleteArgs) -> CmdResult {
    let start = Instant::now();
    let raw = read_raw(&a.input)?;
    let missing = raw.missing_count();
    if missing == raw.values.len() {
        return Err(Failure(format!("{}: every entry is nan", a.input.display())));
    }
    if missing == 0 {
        eprintln!("warning: input has no missing entries; writing it unchanged");
        let t = DenseTensor::new(raw.dims, raw.values)?;
        write_tensor(&a.output, &t)?;
        return Ok(EXIT_OK);
    }
    let m = read_masked(&a.input)?;
    let s = resolve(&a.interactions, m.dims().len())?;
    let popts = a.solver.options();
    let base_init = parse_init(&a.init, a.seed)?;
    if a.restarts == 0 {
        return Err(Failure("--restarts must be >= 1".into()));
    }
    let seeded = matches!(base_init, InitStrategy::Gaussian { .. });
    let runs = if seeded { a.restarts } else { 1 };
    if a.restarts > 1 && !seeded {
        eprintln!("warning: --restarts only varies gaussian initializations; running once");
    }

    let mut best: Option<(CompletionResult, u64)> = None;
    for k in 0..runs {
        let seed = a.seed.wrapping_add(k as u64);
        let init = match base_init {
            InitStrategy::Gaussian { mean, std, .. } => InitStrategy::Gaussian { mean, std, seed },
            ref other => other.clone(),
        };
        let copts = CompletionOptions {
            epsilon: a.epsilon,
            max_iterations: a.max_outer,
            init,
        };
        let r = lbtc(&m, &s, &popts, &copts)?;
        if best.as_ref().is_none_or(|(b, _)| r.final_residual() < b.final_residual()) {
            best = Some((r, seed));
        }
    }
    let (r, seed) = best.expect("at least one run");
    write_tensor(&a.output, &r.tensor)?;
    if !r.converged {
        eprintln!("warning: completion did not converge after {} iterations", r.iterations);
    }

    let recovery = match &a.truth {
        Some(path) => {
            let truth = read_tensor(path)?;
            Some(recovery_fit(&truth, &r.tensor, &m.missing())?)
        }
        None => None,
    };
    let stats = CompleteStats {
        base: Stats {
            kl: kl_divergence(&r.tensor, &r.model)?,
            relative_error: relative_error(&r.tensor, &r.model)?,
            iterations: r.iterations,
            converged: r.converged,
            parameter_count: s.count_parameters(m.dims())?,
            interaction_spec: a.interactions.clone(),
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
            seed: seeded.then_some(seed),
        },
        residual_trace_len: r.residual_trace.len(),
        final_residual: r.final_residual(),
        residual_trace: r.residual_trace.clone(),
        restarts: runs,
        recovery_fit: recovery,
    };
    emit_json(&stats, a.stats.as_deref())?;
    Ok(if r.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn synth_ring(a: RingArgs) -> CmdResult {
    let t = random_ring_tensor(&a.dims, &a.ranks, a.seed)?;
    write_tensor(&a.output, &t)?;
    Ok(EXIT_OK)
}

fn info(a: InfoArgs) -> CmdResult {
    let s = resolve(&a.interactions, a.dims.len())?;
    let parameter_count = s.count_parameters(&a.dims)?;
    let report = InfoReport {
        subsets: s.to_one_based(),
        parameter_count,
        basis_size: parameter_count - 1,
    };
    emit_json(&report, None)?;
    Ok(EXIT_OK)
}

fn metrics(a: MetricsArgs) -> CmdResult {
    let truth = read_tensor(&a.truth)?;
    let approx = read_tensor(&a.approx)?;
    let relative = relative_error(&truth, &approx)?;
    let recovery = match &a.mask {
        Some(path) => {
            let raw = read_raw(path)?;
            if raw.dims != truth.dims() {
                return Err(Failure(format!(
                    "mask dims {:?} differ from tensor dims {:?}",
                    raw.dims,
                    truth.dims()
                )));
            }
            let has_nan = raw.missing_count() > 0;
            let mask: Vec<bool> = raw
                .values
                .iter()
                .map(|v| if has_nan { v.is_nan() } else { *v != 0.0 })
                .collect();
            Some(recovery_fit(&truth, &approx, &mask)?)
        }
        None => None,
    };
    let kl = match kl_divergence(&truth, &approx) {
        Ok(v) => Some(v),
        Err(crate::error::Error::SupportViolation(i)) => {
            eprintln!("warning: kl undefined (approximation is zero at flat index {i})");
            None
        }
        Err(e) => return Err(e.into()),
    };
    emit_json(
        &MetricsReport {
            relative_error: relative,
            recovery_fit: recovery,
            kl,
        },
        None,
    )?;
    Ok(EXIT_OK)
}

fn ipf(a: IpfArgs) -> CmdResult {
    let p = read_tensor(&a.input)?;
    let s = resolve(&a.interactions, p.order())?;
    let (p_hat, scale) = normalize(&p)?;
    let opts = OracleOptions {
        tolerance: a.tolerance,
        max_sweeps: a.max_sweeps,
    };
    let q = ipf_project(&p_hat, &s, &opts)?;
    write_tensor(&a.output, &q.scaled(scale)?)?;
    Ok(EXIT_OK)
}
