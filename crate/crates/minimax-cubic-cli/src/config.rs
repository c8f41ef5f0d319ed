//! Experiment configuration: a schema-versioned JSON file naming a built-in
//! problem, a solver, and output destinations.
//!
//! Unknown keys are rejected everywhere so a typo cannot silently fall back
//! to a default. Matrices are inline nested arrays (row major) or
//! `{"csv": "path"}` pointing at a header-free comma-separated file; relative
//! paths resolve against the config file's directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use minimax_cubic::drivers::{Algorithm, SolverConfig};
use minimax_cubic::problem::{
    derive_constants, make_quadratic_problem, make_saddle_problem, ClosedForms, MinimaxProblem,
};
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

/// Schema version this binary understands.
pub const SCHEMA_VERSION: &str = "v1";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must equal [`SCHEMA_VERSION`].
    pub version: String,
    pub problem: ProblemSpec,
    pub solver: SolverSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// One of the built-in problem families.
#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProblemSpec {
    /// `f(x,y) = 1/2 x'Ax + x'By - 1/2 y'Cy + a'x + b'y` with `C` positive
    /// definite; the primal is convex quadratic with closed forms.
    Quadratic {
        a: MatrixSource,
        b: MatrixSource,
        c: MatrixSource,
        a_vec: Vec<f64>,
        b_vec: Vec<f64>,
        rho: f64,
        #[serde(default)]
        constants: Option<StatedConstants>,
    },
    /// Separable double-well in `x`, bilinear coupling, `-mu/2 ||y||^2`;
    /// the primal has a strict saddle at the origin.
    Saddle {
        dim_x: usize,
        dim_y: usize,
        #[serde(default)]
        coupling: Option<MatrixSource>,
        mu: f64,
        box_radius: f64,
        #[serde(default)]
        constants: Option<StatedConstants>,
    },
}

/// Optional constants stated in the config for documentation and drift
/// detection. Stated values must be internally consistent (`mu <= ell`) and
/// must match what the builder derives.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatedConstants {
    #[serde(default)]
    pub ell: Option<f64>,
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub rho: Option<f64>,
}

/// A dense matrix, inline or in a CSV file.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum MatrixSource {
    Inline(Vec<Vec<f64>>),
    Csv { csv: PathBuf },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub algorithm: Algorithm,
    pub eps: f64,
    /// Starting point; the origin when absent.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub c_g: Option<f64>,
    #[serde(default)]
    pub c_h: Option<f64>,
    #[serde(default)]
    pub c_sigma: Option<f64>,
    #[serde(default)]
    pub t_max: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub p_star: Option<f64>,
    #[serde(default)]
    pub y0_radius_estimate: Option<f64>,
    #[serde(default)]
    pub subsolver_iter_cap: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// JSON-lines trace destination (one record per outer iteration).
    #[serde(default)]
    pub trace: Option<PathBuf>,
    /// Summary JSON destination; stdout when absent.
    #[serde(default)]
    pub summary: Option<PathBuf>,
    #[serde(default)]
    pub verbosity: Option<Verbosity>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Verbosity {
    Quiet,
    Normal,
}

/// A bench suite: a list of runs, each a config file plus optional `eps`
/// and `seed` overrides.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSuite {
    pub version: String,
    pub runs: Vec<BenchEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchEntry {
    /// Config path, relative to the suite file.
    pub config: PathBuf,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let cfg: ExperimentConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))?;
    if cfg.version != SCHEMA_VERSION {
        bail!(
            "config {}: unsupported schema version {:?} (expected {:?})",
            path.display(),
            cfg.version,
            SCHEMA_VERSION
        );
    }
    Ok(cfg)
}

pub fn load_suite(path: &Path) -> Result<BenchSuite> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading suite {}", path.display()))?;
    let suite: BenchSuite =
        serde_json::from_str(&text).with_context(|| format!("parsing suite {}", path.display()))?;
    if suite.version != SCHEMA_VERSION {
        bail!(
            "suite {}: unsupported schema version {:?} (expected {:?})",
            path.display(),
            suite.version,
            SCHEMA_VERSION
        );
    }
    Ok(suite)
}

/// Resolves `path` against `base_dir` unless it is already absolute.
pub fn resolve_relative(base_dir: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base_dir.join(path)
    }
}

fn load_matrix(src: &MatrixSource, base_dir: &Path, name: &str) -> Result<DMatrix<f64>> {
    match src {
        MatrixSource::Inline(rows) => {
            if rows.is_empty() {
                bail!("matrix {name}: no rows");
            }
            let ncols = rows[0].len();
            if ncols == 0 {
                bail!("matrix {name}: empty first row");
            }
            for (i, row) in rows.iter().enumerate() {
                if row.len() != ncols {
                    bail!(
                        "matrix {name}: row {i} has {} entries, expected {ncols}",
                        row.len()
                    );
                }
            }
            Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
        }
        MatrixSource::Csv { csv } => {
            let full = resolve_relative(base_dir, csv);
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(false)
                .trim(csv::Trim::All)
                .from_path(&full)
                .with_context(|| format!("matrix {name}: opening {}", full.display()))?;
            let mut rows: Vec<Vec<f64>> = Vec::new();
            for (i, record) in reader.records().enumerate() {
                let record = record.with_context(|| format!("matrix {name}: reading row {i}"))?;
                let row: Vec<f64> = record
                    .iter()
                    .map(|field| {
                        field.parse::<f64>().with_context(|| {
                            format!("matrix {name}: row {i}: bad number {field:?}")
                        })
                    })
                    .collect::<Result<_>>()?;
                rows.push(row);
            }
            load_matrix(&MatrixSource::Inline(rows), base_dir, name)
        }
    }
}

fn check_stated_constants(stated: &Option<StatedConstants>, p: &MinimaxProblem) -> Result<()> {
    let Some(s) = stated else { return Ok(()) };
    if let (Some(mu), Some(ell)) = (s.mu, s.ell) {
        if mu > ell {
            bail!("invariant violated: constants.mu ({mu}) > constants.ell ({ell})");
        }
    }
    let close = |stated: f64, derived: f64| (stated - derived).abs() <= 1e-9 * derived.abs();
    if let Some(ell) = s.ell {
        if !close(ell, p.ell()) {
            bail!(
                "constants.ell ({ell}) disagrees with the derived value ({})",
                p.ell()
            );
        }
    }
    if let Some(mu) = s.mu {
        if !close(mu, p.mu()) {
            bail!(
                "constants.mu ({mu}) disagrees with the derived value ({})",
                p.mu()
            );
        }
    }
    if let Some(rho) = s.rho {
        if !close(rho, p.rho()) {
            bail!(
                "constants.rho ({rho}) disagrees with the derived value ({})",
                p.rho()
            );
        }
    }
    Ok(())
}

/// Instantiates the configured problem. `base_dir` anchors CSV paths.
pub fn build_problem(spec: &ProblemSpec, base_dir: &Path) -> Result<(MinimaxProblem, ClosedForms)> {
    let (pair, constants) = match spec {
        ProblemSpec::Quadratic {
            a,
            b,
            c,
            a_vec,
            b_vec,
            rho,
            constants,
        } => {
            let a = load_matrix(a, base_dir, "a")?;
            let b = load_matrix(b, base_dir, "b")?;
            let c = load_matrix(c, base_dir, "c")?;
            let pair = make_quadratic_problem(
                &a,
                &b,
                &c,
                &DVector::from_row_slice(a_vec),
                &DVector::from_row_slice(b_vec),
                *rho,
            )?;
            (pair, constants)
        }
        ProblemSpec::Saddle {
            dim_x,
            dim_y,
            coupling,
            mu,
            box_radius,
            constants,
        } => {
            let coupling = coupling
                .as_ref()
                .map(|src| load_matrix(src, base_dir, "coupling"))
                .transpose()?;
            let pair = make_saddle_problem(*dim_x, *dim_y, coupling.as_ref(), *mu, *box_radius)?;
            (pair, constants)
        }
    };
    check_stated_constants(constants, &pair.0)?;
    Ok(pair)
}

/// Translates the solver section into a [`SolverConfig`], applying the
/// `--seed` override when given.
pub fn build_solver_config(spec: &SolverSpec, seed_override: Option<u64>) -> SolverConfig {
    let mut cfg = SolverConfig::new(spec.eps);
    if let Some(d) = spec.delta {
        cfg.delta = d;
    }
    cfg.c_g = spec.c_g;
    cfg.c_h = spec.c_h;
    if let Some(cs) = spec.c_sigma {
        cfg.c_sigma = cs;
    }
    if let Some(t) = spec.t_max {
        cfg.t_max = t;
    }
    cfg.rng_seed = seed_override.or(spec.seed).unwrap_or(0);
    cfg.p_star = spec.p_star;
    cfg.y0_radius_estimate = spec.y0_radius_estimate;
    cfg.subsolver_iter_cap = spec.subsolver_iter_cap;
    cfg
}

/// Second-order threshold the run contract reports against:
/// `delta_2nd = sqrt(M eps)`.
pub fn second_order_delta(p: &MinimaxProblem, eps: f64) -> f64 {
    (derive_constants(p).hess_lip * eps).sqrt()
}
