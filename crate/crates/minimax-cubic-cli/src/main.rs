//! Command-line front end: configure a problem and a solver, run it, verify
//! candidate points, and sweep suites into CSV.
//!
//! Exit codes follow one contract everywhere: `0` success (for `run` and
//! `verify`, the point passed both stationarity checks), `2` the command ran
//! but the check failed, `1` configuration or runtime error.

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use minimax_cubic::batch::{map_indexed, run_with_thread_cap, thread_cap_from_env, ExecMode};
use minimax_cubic::drivers::{imcn_run, mcn_run, Algorithm, RunResult, SolverConfig};
use minimax_cubic::problem::{ClosedForms, CounterSnapshot, MinimaxProblem};
use minimax_cubic::verify::{check_stationarity, StationarityReport};
use nalgebra::DVector;
use serde::Serialize;

use config::{
    build_problem, build_solver_config, load_config, load_suite, resolve_relative,
    second_order_delta, ExperimentConfig, Verbosity,
};

#[derive(Parser)]
#[command(
    name = "minimax-cubic",
    version,
    about = "Cubic-regularized Newton solvers for nonconvex-strongly-concave minimax problems"
)]
struct Cli {
    /// Suppress progress messages on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured solver; write a JSON-lines trace and a JSON summary.
    Run {
        /// Experiment config (schema v1 JSON).
        config: PathBuf,
        /// Override the RNG seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the trace destination from the config.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Check first- and second-order stationarity of a point for a config's
    /// problem; print the report as JSON.
    Verify {
        /// Experiment config (schema v1 JSON).
        config: PathBuf,
        /// Text file with the whitespace- or comma-separated coordinates of x.
        point: PathBuf,
    },
    /// Run every config in a suite; print a CSV row per run.
    Bench {
        /// Suite file (schema v1 JSON listing configs with optional
        /// eps/seed overrides).
        suite: PathBuf,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            config,
            seed,
            trace,
        } => cmd_run(config, *seed, trace.as_deref(), cli.quiet),
        Command::Verify { config, point } => cmd_verify(config, point, cli.quiet),
        Command::Bench { suite, output } => cmd_bench(suite, output.as_deref(), cli.quiet),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn config_dir(config_path: &Path) -> PathBuf {
    config_path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn starting_point(cfg: &ExperimentConfig, p: &MinimaxProblem) -> Result<DVector<f64>> {
    match &cfg.solver.x0 {
        Some(v) => {
            if v.len() != p.dim_x() {
                bail!(
                    "solver.x0 has {} entries, problem has dim_x = {}",
                    v.len(),
                    p.dim_x()
                );
            }
            Ok(DVector::from_row_slice(v))
        }
        None => Ok(DVector::zeros(p.dim_x())),
    }
}

fn drive(
    p: &MinimaxProblem,
    x0: &DVector<f64>,
    algorithm: Algorithm,
    solver: &SolverConfig,
    forms: &ClosedForms,
) -> minimax_cubic::Result<RunResult> {
    match algorithm {
        Algorithm::Mcn => mcn_run(p, x0, solver, Some(forms)),
        Algorithm::Imcn => imcn_run(p, x0, solver, Some(forms)),
    }
}

/// Summary of one run: terminal state, oracle tallies, and the stationarity
/// report at the configured `eps` and `delta_2nd = sqrt(M eps)`.
#[derive(Serialize)]
struct RunSummary {
    algorithm: Algorithm,
    reason: minimax_cubic::drivers::TerminationReason,
    iterations: usize,
    eps: f64,
    delta_second_order: f64,
    /// Second-order level the method's own guarantee certifies.
    second_order_target: f64,
    outer_bound: Option<usize>,
    final_step_norm: Option<f64>,
    final_refine_iterations: Option<u64>,
    x_hat: Vec<f64>,
    y_last: Vec<f64>,
    counters: CounterSnapshot,
    stationarity: StationarityReport,
    wall_time_seconds: f64,
}

fn cmd_run(
    config_path: &Path,
    seed_override: Option<u64>,
    trace_override: Option<&Path>,
    quiet: bool,
) -> Result<u8> {
    let cfg = load_config(config_path)?;
    let quiet = quiet || cfg.output.verbosity == Some(Verbosity::Quiet);
    let base_dir = config_dir(config_path);
    let (p, forms) = build_problem(&cfg.problem, &base_dir)?;
    let solver = build_solver_config(&cfg.solver, seed_override);
    let x0 = starting_point(&cfg, &p)?;

    let started = Instant::now();
    let res = drive(&p, &x0, cfg.solver.algorithm, &solver, &forms)?;
    let wall = started.elapsed().as_secs_f64();

    // The --trace override is taken as given; a config-relative path
    // resolves against the config's directory.
    let trace_path = match trace_override {
        Some(p) => Some(p.to_path_buf()),
        None => cfg
            .output
            .trace
            .as_ref()
            .map(|p| resolve_relative(&base_dir, p)),
    };
    if let Some(path) = &trace_path {
        write_trace(path, &res).with_context(|| format!("writing trace {}", path.display()))?;
    }

    let delta2 = second_order_delta(&p, solver.eps);
    let report = check_stationarity(&p, &res.x_hat, solver.eps, delta2)?;
    let pass = report.ssp_pass;
    if !quiet {
        eprintln!(
            "run: {} finished in {} iterations ({:?}); ||grad P|| = {:.3e}, min eig = {:.3e}, {}",
            match cfg.solver.algorithm {
                Algorithm::Mcn => "mcn",
                Algorithm::Imcn => "imcn",
            },
            res.iterations,
            res.reason,
            report.grad_p_norm,
            report.min_eig_hess_p,
            if pass { "SSP pass" } else { "SSP FAIL" }
        );
    }

    let summary = RunSummary {
        algorithm: res.algorithm,
        reason: res.reason,
        iterations: res.iterations,
        eps: res.eps,
        delta_second_order: delta2,
        second_order_target: res.second_order_target,
        outer_bound: res.outer_bound,
        final_step_norm: res.final_step_norm,
        final_refine_iterations: res.final_refine_iterations,
        x_hat: res.x_hat.iter().copied().collect(),
        y_last: res.y_last.iter().copied().collect(),
        counters: res.counters,
        stationarity: report,
        wall_time_seconds: wall,
    };
    let text = serde_json::to_string_pretty(&summary)?;
    match &cfg.output.summary {
        Some(path) => {
            let full = resolve_relative(&base_dir, path);
            std::fs::write(&full, text + "\n")
                .with_context(|| format!("writing summary {}", full.display()))?;
        }
        None => println!("{text}"),
    }
    Ok(if pass { 0 } else { 2 })
}

/// One JSON object per line, one line per outer iteration.
fn write_trace(path: &Path, res: &RunResult) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    for record in &res.records {
        serde_json::to_writer(&mut w, record)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn parse_point_file(path: &Path) -> Result<DVector<f64>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading point file {}", path.display()))?;
    let values: Vec<f64> = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|tok| !tok.is_empty())
        .map(|tok| {
            tok.parse::<f64>()
                .with_context(|| format!("point file {}: bad number {tok:?}", path.display()))
        })
        .collect::<Result<_>>()?;
    if values.is_empty() {
        bail!("point file {} contains no numbers", path.display());
    }
    Ok(DVector::from_row_slice(&values))
}

fn cmd_verify(config_path: &Path, point_path: &Path, quiet: bool) -> Result<u8> {
    let cfg = load_config(config_path)?;
    let quiet = quiet || cfg.output.verbosity == Some(Verbosity::Quiet);
    let base_dir = config_dir(config_path);
    let (p, _forms) = build_problem(&cfg.problem, &base_dir)?;
    let x = parse_point_file(point_path)?;
    if x.len() != p.dim_x() {
        bail!(
            "point has {} entries, problem has dim_x = {}",
            x.len(),
            p.dim_x()
        );
    }
    let delta2 = second_order_delta(&p, cfg.solver.eps);
    let report = check_stationarity(&p, &x, cfg.solver.eps, delta2)?;
    if !quiet {
        eprintln!(
            "verify: ||grad P|| = {:.3e} (eps {:.3e}), min eig = {:.3e} (floor {:.3e})",
            report.grad_p_norm, cfg.solver.eps, report.min_eig_hess_p, -delta2
        );
    }
    let pass = report.ssp_pass;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if pass { 0 } else { 2 })
}

/// Outcome of one suite member, already flattened for CSV.
struct BenchRow {
    config: String,
    algorithm: Option<Algorithm>,
    eps: Option<f64>,
    seed: u64,
    outcome: std::result::Result<BenchOutcome, String>,
}

struct BenchOutcome {
    iterations: usize,
    counters: CounterSnapshot,
    fsp_pass: bool,
    ssp_pass: bool,
    /// `iterations / outer_bound` when the theory bound was computable.
    bound_ratio: Option<f64>,
}

/// 17 significant digits; round-trips through `str::parse::<f64>`.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn run_suite_member(suite_dir: &Path, entry: &config::BenchEntry) -> BenchRow {
    let config_path = resolve_relative(suite_dir, &entry.config);
    let shown = entry.config.display().to_string();
    let attempt = || -> Result<(Algorithm, f64, u64, BenchOutcome)> {
        let mut cfg = load_config(&config_path)?;
        if let Some(eps) = entry.eps {
            cfg.solver.eps = eps;
        }
        if let Some(seed) = entry.seed {
            cfg.solver.seed = Some(seed);
        }
        let base_dir = config_dir(&config_path);
        let (p, forms) = build_problem(&cfg.problem, &base_dir)?;
        let solver = build_solver_config(&cfg.solver, None);
        let x0 = starting_point(&cfg, &p)?;
        let res = drive(&p, &x0, cfg.solver.algorithm, &solver, &forms)?;
        let report = check_stationarity(
            &p,
            &res.x_hat,
            solver.eps,
            second_order_delta(&p, solver.eps),
        )?;
        let outcome = BenchOutcome {
            iterations: res.iterations,
            counters: res.counters,
            fsp_pass: report.fsp_pass,
            ssp_pass: report.ssp_pass,
            bound_ratio: res
                .outer_bound
                .filter(|&b| b > 0)
                .map(|b| res.iterations as f64 / b as f64),
        };
        Ok((cfg.solver.algorithm, solver.eps, solver.rng_seed, outcome))
    };
    match attempt() {
        Ok((algorithm, eps, seed, outcome)) => BenchRow {
            config: shown,
            algorithm: Some(algorithm),
            eps: Some(eps),
            seed,
            outcome: Ok(outcome),
        },
        Err(e) => BenchRow {
            config: shown,
            algorithm: None,
            eps: entry.eps,
            seed: entry.seed.unwrap_or(0),
            outcome: Err(format!("{e:#}")),
        },
    }
}

fn cmd_bench(suite_path: &Path, output: Option<&Path>, quiet: bool) -> Result<u8> {
    let suite = load_suite(suite_path)?;
    if suite.runs.is_empty() {
        bail!("suite {} lists no runs", suite_path.display());
    }
    let suite_dir = config_dir(suite_path);

    // Suite members are independent; MINIMAX_CUBIC_THREADS caps the pool.
    let rows: Vec<BenchRow> = run_with_thread_cap(thread_cap_from_env(), || {
        map_indexed(ExecMode::Parallel, suite.runs.len(), |i| {
            run_suite_member(&suite_dir, &suite.runs[i])
        })
    });

    let mut writer: csv::Writer<Box<dyn Write>> = csv::Writer::from_writer(match output {
        Some(path) => Box::new(
            std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
        ),
        None => Box::new(std::io::stdout().lock()),
    });
    writer.write_record([
        "config",
        "algorithm",
        "eps",
        "seed",
        "status",
        "iterations",
        "n_grad",
        "n_hvp",
        "n_hess",
        "fsp_pass",
        "ssp_pass",
        "bound_ratio",
        "message",
    ])?;
    let mut errors = 0usize;
    for row in &rows {
        let algorithm = match row.algorithm {
            Some(Algorithm::Mcn) => "mcn",
            Some(Algorithm::Imcn) => "imcn",
            None => "",
        };
        let eps = row.eps.map(fmt_f64).unwrap_or_default();
        let seed = row.seed.to_string();
        match &row.outcome {
            Ok(o) => writer.write_record([
                row.config.as_str(),
                algorithm,
                &eps,
                &seed,
                "ok",
                &o.iterations.to_string(),
                &o.counters.n_grad.to_string(),
                &o.counters.n_hvp.to_string(),
                &o.counters.n_hess.to_string(),
                if o.fsp_pass { "true" } else { "false" },
                if o.ssp_pass { "true" } else { "false" },
                &o.bound_ratio.map(fmt_f64).unwrap_or_default(),
                "",
            ])?,
            Err(msg) => {
                errors += 1;
                writer.write_record([
                    row.config.as_str(),
                    algorithm,
                    &eps,
                    &seed,
                    "error",
                    "",
                    "",
                    "",
                    "",
                    "",
                    "",
                    "",
                    msg.as_str(),
                ])?;
            }
        }
    }
    writer.flush()?;
    drop(writer);
    if !quiet {
        eprintln!(
            "bench: {}/{} runs succeeded",
            rows.len() - errors,
            rows.len()
        );
    }
    Ok(if errors > 0 { 1 } else { 0 })
}
