//! Outer loops: the exact cubic-Newton method and its matrix-free inexact
//! variant, plus the shared inner-iteration schedules and the local-minimax
//! refinement step.
//!
//! Both drivers minimize the primal `P(x) = max_y f(x, y)` by alternating an
//! accelerated inner maximization (warm-started across iterations) with a
//! cubic-regularized step in `x`:
//!
//! * [`mcn_run`] builds the dense Schur-complement Hessian each iteration
//!   and solves the cubic model exactly. Terminates when the step is short
//!   (`||s_t|| <= 1/2 sqrt(eps'/M)` with `eps' = 2^{-2.5} eps`), which
//!   certifies an `(eps, sqrt(M eps))` approximate second-order stationary
//!   point of `P`.
//! * [`imcn_run`] never forms or factors a Hessian: Hessian-vector products
//!   of `P` are approximated through a Chebyshev polynomial (see
//!   [`crate::chebyshev`]) and the cubic model is minimized by perturbed
//!   gradient descent. Terminates when the model decrease stalls
//!   (`m(s_t) > -(1/128) sqrt(eps^3/M)`), then extracts the output with a
//!   terminal model solve; with probability `1 - delta` the result is an
//!   `(eps, 2 kappa^{3/2} sqrt(rho eps))` second-order stationary point.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::agd::{agd_minimize, AgdParams};
use crate::chebyshev::{hvp_primal, ChebyshevPlan};
use crate::cubic::{
    cauchy_point, cubic_solver_gd, final_cubic_solver, iteration_budget, sigma_value,
    solve_cubic_exact, CubicModel, Hessian,
};
use crate::error::{Error, Result};
use crate::problem::{
    derive_constants, schur_complement, ClosedForms, CounterSnapshot, MinimaxProblem,
};
use crate::verify::eval_primal;

/// Descent-lemma constant of the exact method: `C_g = 1/192`.
pub const MCN_C_G: f64 = 1.0 / 192.0;
/// Hessian-accuracy constant of the exact method: `C_H = 1/48`.
pub const MCN_C_H: f64 = 1.0 / 48.0;
/// Descent-lemma constant of the inexact method: `C_g = 1/240`.
pub const IMCN_C_G: f64 = 1.0 / 240.0;
/// Hessian-accuracy constant of the inexact method: `C_H = 1/200`.
pub const IMCN_C_H: f64 = 1.0 / 200.0;
/// Perturbation-scale constant of the inexact subsolver: `C_sigma = 1/4`.
pub const IMCN_C_SIGMA: f64 = 0.25;
/// Absolute Hessian-error allowance of the inexact method: `eps_H = 3/25`.
pub const IMCN_EPS_H: f64 = 0.12;

/// Residual tolerance handed to the exact cubic solver by [`mcn_run`].
const EXACT_SOLVE_TOL: f64 = 1e-10;

/// Which outer loop produced a result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Mcn,
    Imcn,
}

/// Which subsolver produced an iteration's step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsolverKind {
    Exact,
    GradientDescent,
    Cauchy,
}

/// Why a run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    /// Exact method: `||s_t||` fell below its threshold.
    SmallStep,
    /// Inexact method: the model decrease stalled and the terminal solve ran.
    SmallModelDecrease,
    /// The outer-iteration cap was reached without a certificate.
    IterationCap,
}

/// Tunable solver parameters. `SolverConfig::new(eps)` fills the defaults;
/// `c_g`/`c_h` default per algorithm when left `None`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    /// First-order stationarity target for `P`.
    pub eps: f64,
    /// Total failure probability budget of the inexact method.
    pub delta: f64,
    /// Override of the descent constant (defaults: 1/192 exact, 1/240 inexact).
    pub c_g: Option<f64>,
    /// Override of the Hessian-accuracy constant (defaults: 1/48, 1/200).
    pub c_h: Option<f64>,
    /// Perturbation-scale constant of the inexact subsolver.
    pub c_sigma: f64,
    /// Hard cap on outer iterations (also clamps the theoretical bound).
    pub t_max: usize,
    /// Known optimal primal value; enables the theoretical outer bound.
    pub p_star: Option<f64>,
    /// Seed for the subsolver perturbations (per-iteration streams derive
    /// from it deterministically).
    pub rng_seed: u64,
    /// Known bound on `||y*(x_0)||`; measured with one `grad_y` call at the
    /// origin when `None`.
    pub y0_radius_estimate: Option<f64>,
    /// Cap on the inexact subsolver's per-iteration budget. The printed
    /// budget is astronomically conservative (1e8..1e9 iterations for
    /// CI-sized instances) while descent and escape complete orders of
    /// magnitude sooner, so batch experiments set an explicit cap here.
    /// `None` runs the full printed budget.
    pub subsolver_iter_cap: Option<u64>,
}

impl SolverConfig {
    pub fn new(eps: f64) -> Self {
        Self {
            eps,
            delta: 0.1,
            c_g: None,
            c_h: None,
            c_sigma: IMCN_C_SIGMA,
            t_max: 10_000,
            p_star: None,
            rng_seed: 0,
            y0_radius_estimate: None,
            subsolver_iter_cap: None,
        }
    }
}

/// One outer iteration of either driver.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Outer iteration index.
    pub t: usize,
    /// AGD steps spent warming up `y` this iteration.
    pub k_t: usize,
    /// `||s_t||` of the accepted step.
    pub step_norm: f64,
    /// `||grad_x f(x_t, y_t)||`, the estimate of `||grad P(x_t)||`.
    pub grad_norm: f64,
    /// Model value `m(s_t)` reported by the subsolver.
    pub model_value: f64,
    /// `-m(s_t)`, the guaranteed-decrease proxy.
    pub model_decrease: f64,
    /// Subsolver that produced the step.
    pub subsolver: SubsolverKind,
    /// Inner iterations the subsolver spent.
    pub inner_iterations: u64,
    /// `P(x_t)` when available (closed form, or a flagged estimate).
    pub primal_value: Option<f64>,
    /// True when `primal_value` came from an inner-solver estimate rather
    /// than a closed form.
    pub primal_is_estimate: bool,
    /// Cumulative oracle counters after this iteration.
    pub counters: CounterSnapshot,
}

/// Outcome of a driver run.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub algorithm: Algorithm,
    /// Candidate stationary point of `P`.
    pub x_hat: DVector<f64>,
    /// Final inner iterate (warm start for refinement).
    pub y_last: DVector<f64>,
    pub reason: TerminationReason,
    /// Outer iterations executed.
    pub iterations: usize,
    /// First-order target the run was configured for.
    pub eps: f64,
    /// Second-order target the method's guarantee certifies at `x_hat`.
    pub second_order_target: f64,
    /// Theoretical outer-iteration bound when `p_star` made it computable
    /// (already clamped to `t_max`).
    pub outer_bound: Option<usize>,
    /// Norm of the terminal refinement step (inexact method only).
    pub final_step_norm: Option<f64>,
    /// Inner iterations of the terminal refinement (inexact method only).
    pub final_refine_iterations: Option<u64>,
    pub records: Vec<IterationRecord>,
    /// Final oracle tallies for the whole run.
    pub counters: CounterSnapshot,
}

/// Inner-iteration schedule shared by both drivers.
///
/// ```text
/// t = 0:  ceil( 2 sqrt(kappa) ln( sqrt(kappa + 1) y0_norm_bound / eps~ ) )
/// t >= 1: ceil( 2 sqrt(kappa) ln( sqrt(kappa + 1) (eps~ + kappa ||s_{t-1}||) / eps~ ) )
/// ```
///
/// clamped at zero (a log argument at or below one means the warm start is
/// already accurate enough).
pub fn schedule_kt(
    t: usize,
    kappa: f64,
    eps_tilde: f64,
    s_prev_norm: f64,
    y0_norm_bound: f64,
) -> Result<usize> {
    if !(kappa.is_finite() && kappa >= 1.0) {
        return Err(Error::InvalidConstants(format!(
            "need kappa >= 1, got {kappa}"
        )));
    }
    if !(eps_tilde.is_finite() && eps_tilde > 0.0) {
        return Err(Error::InvalidArgument {
            arg: "eps_tilde",
            msg: format!("must be positive, got {eps_tilde}"),
        });
    }
    if !(s_prev_norm >= 0.0 && y0_norm_bound >= 0.0) {
        return Err(Error::InvalidArgument {
            arg: "s_prev_norm/y0_norm_bound",
            msg: "norms must be nonnegative".into(),
        });
    }
    let arg = if t == 0 {
        (kappa + 1.0).sqrt() * y0_norm_bound / eps_tilde
    } else {
        (kappa + 1.0).sqrt() * (eps_tilde + kappa * s_prev_norm) / eps_tilde
    };
    if !(arg > 1.0) {
        return Ok(0);
    }
    Ok((2.0 * kappa.sqrt() * arg.ln()).ceil() as usize)
}

/// Inner accuracy of the exact method at (rescaled) target `eps_prime`:
/// `min(C_g eps'/ell, C_H sqrt(M eps')/rho)`.
pub fn eps_tilde_mcn(eps_prime: f64, ell: f64, rho: f64, c_g: f64, c_h: f64, big_m: f64) -> f64 {
    (c_g * eps_prime / ell).min(c_h * (big_m * eps_prime).sqrt() / rho)
}

/// Inner accuracy of the inexact method:
/// `min(C_g eps/ell, min(C_H sqrt(M eps), eps_H L) / (6 rho kappa^2))`.
pub fn eps_tilde_imcn(
    eps: f64,
    ell: f64,
    rho: f64,
    kappa: f64,
    c_g: f64,
    c_h: f64,
    big_l: f64,
    big_m: f64,
) -> f64 {
    let hess_acc = (c_h * (big_m * eps).sqrt()).min(IMCN_EPS_H * big_l);
    (c_g * eps / ell).min(hess_acc / (6.0 * rho * kappa * kappa))
}

/// Chebyshev degree of the inexact method:
/// `ceil( (sqrt(kappa)+1)/2 * ln( kappa ell / (2 min(C_H sqrt(M eps), eps_H L)) ) )`,
/// clamped at zero.
pub fn k_prime_for(eps: f64, c_h: f64, ell: f64, mu: f64, rho: f64) -> Result<usize> {
    if !(mu > 0.0 && ell >= mu && rho > 0.0 && eps > 0.0 && c_h > 0.0) {
        return Err(Error::InvalidArgument {
            arg: "k_prime_for",
            msg: "need 0 < mu <= ell, rho > 0, eps > 0, c_h > 0".into(),
        });
    }
    let kappa = ell / mu;
    let big_l = 2.0 * kappa * ell;
    let big_m = 4.0 * std::f64::consts::SQRT_2 * kappa.powi(3) * rho;
    let hess_acc = (c_h * (big_m * eps).sqrt()).min(IMCN_EPS_H * big_l);
    let arg = kappa * ell / (2.0 * hess_acc);
    if !(arg > 1.0) {
        return Ok(0);
    }
    Ok(((kappa.sqrt() + 1.0) / 2.0 * arg.ln()).ceil() as usize)
}

fn validate_run_inputs(p: &MinimaxProblem, x0: &DVector<f64>, cfg: &SolverConfig) -> Result<()> {
    if x0.len() != p.dim_x() {
        return Err(Error::DimMismatch {
            arg: "x0",
            expected: p.dim_x(),
            got: x0.len(),
        });
    }
    if !(cfg.eps.is_finite() && cfg.eps > 0.0) {
        return Err(Error::InvalidArgument {
            arg: "eps",
            msg: format!("must be positive and finite, got {}", cfg.eps),
        });
    }
    if let Some(c) = cfg.c_g {
        if !(c > 0.0) {
            return Err(Error::InvalidArgument {
                arg: "c_g",
                msg: format!("must be positive, got {c}"),
            });
        }
    }
    if let Some(c) = cfg.c_h {
        if !(c > 0.0) {
            return Err(Error::InvalidArgument {
                arg: "c_h",
                msg: format!("must be positive, got {c}"),
            });
        }
    }
    Ok(())
}

/// Primal-value logging: closed form when available, otherwise a flagged
/// estimate from an inner solve on a counter-forked handle (instrumentation
/// must not distort the run's own oracle tally).
struct PrimalLogger {
    shadow: Option<MinimaxProblem>,
    inner_tol: f64,
}

impl PrimalLogger {
    fn new(p: &MinimaxProblem, forms: Option<&ClosedForms>, value_accuracy: f64) -> Self {
        let has_closed =
            forms.map(|f| f.primal(&DVector::zeros(p.dim_x())).is_some()) == Some(true);
        if has_closed {
            Self {
                shadow: None,
                inner_tol: 0.0,
            }
        } else {
            // ||y - y*|| <= d gives |f(x, y) - P(x)| <= (ell/2) d^2; solve
            // for d at the requested value accuracy.
            let d = (2.0 * value_accuracy / p.ell()).sqrt();
            Self {
                shadow: Some(p.fork_counters()),
                inner_tol: d,
            }
        }
    }

    fn log(&self, forms: Option<&ClosedForms>, x: &DVector<f64>) -> (Option<f64>, bool) {
        if let Some(f) = forms {
            if let Some(v) = f.primal(x) {
                return (Some(v), false);
            }
        }
        if let Some(shadow) = &self.shadow {
            if let Ok((v, _)) = eval_primal(shadow, x, self.inner_tol) {
                return (Some(v), true);
            }
        }
        (None, false)
    }
}

/// `P(x0)` for the outer bound: closed form if present, else the objective
/// at the warmed-up inner iterate (one `value` oracle call).
fn primal_at_start(
    p: &MinimaxProblem,
    forms: Option<&ClosedForms>,
    x0: &DVector<f64>,
    y_warm: &DVector<f64>,
) -> f64 {
    forms
        .and_then(|f| f.primal(x0))
        .unwrap_or_else(|| p.value(x0, y_warm))
}

fn clamp_bound(v: f64, t_max: usize) -> usize {
    if !v.is_finite() || v < 0.0 {
        return 0;
    }
    let b = if v > usize::MAX as f64 {
        usize::MAX
    } else {
        v as usize
    };
    b.min(t_max)
}

/// Exact minimax cubic-Newton. One Schur-complement Hessian assembly and one
/// exact cubic solve per outer iteration; AGD warm starts carry `y` across
/// iterations. See the module docs for the termination certificate.
pub fn mcn_run(
    p: &MinimaxProblem,
    x0: &DVector<f64>,
    cfg: &SolverConfig,
    forms: Option<&ClosedForms>,
) -> Result<RunResult> {
    validate_run_inputs(p, x0, cfg)?;
    let dc = derive_constants(p);
    let (ell, mu, rho, kappa) = (p.ell(), p.mu(), p.rho(), dc.kappa);
    let big_m = dc.hess_lip;
    let c_g = cfg.c_g.unwrap_or(MCN_C_G);
    let c_h = cfg.c_h.unwrap_or(MCN_C_H);
    // Internal rescaling: the analysis runs at eps' and emerges with the
    // certificate at eps.
    let eps_prime = cfg.eps * (2.0_f64).powf(-2.5);
    let eps_tilde = eps_tilde_mcn(eps_prime, ell, rho, c_g, c_h, big_m);
    let break_norm = 0.5 * (eps_prime / big_m).sqrt();
    let agd_params = AgdParams::for_condition(ell, mu)?;
    let logger = PrimalLogger::new(p, forms, eps_tilde / 10.0);

    // Line 2: warm up y at x_0 against a bound on ||y*(x_0)||.
    let y_origin = DVector::zeros(p.dim_y());
    let y0_bound = match cfg.y0_radius_estimate {
        Some(r) => r,
        None => p.grad_y(x0, &y_origin).norm() / mu,
    };
    let k0 = schedule_kt(0, kappa, eps_tilde, 0.0, y0_bound)?;
    let mut x = x0.clone();
    let mut y = agd_minimize(|v| -p.grad_y(&x, v), &y_origin, k0, &agd_params)?;

    let outer_bound = match cfg.p_star {
        Some(p_star) => {
            let p0 = primal_at_start(p, forms, x0, &y);
            let b = (192.0 * (p0 - p_star) * big_m.sqrt() * eps_prime.powf(-1.5)).ceil() + 1.0;
            Some(clamp_bound(b, cfg.t_max))
        }
        None => None,
    };
    let t_cap = outer_bound.unwrap_or(cfg.t_max);

    let mut records = Vec::new();
    let mut reason = TerminationReason::IterationCap;
    let mut s_prev = 0.0_f64;
    for t in 0..t_cap {
        let k_t = if t == 0 {
            k0
        } else {
            let k = schedule_kt(t, kappa, eps_tilde, s_prev, 0.0)?;
            y = agd_minimize(|v| -p.grad_y(&x, v), &y, k, &agd_params)?;
            k
        };
        let g = p.grad_x(&x, &y);
        let h_t = schur_complement(&p.hess_blocks(&x, &y))?;
        let model = CubicModel::new(g.clone(), Hessian::Dense(h_t), big_m)?;
        let sol = solve_cubic_exact(&model, EXACT_SOLVE_TOL)?;
        let (primal_value, primal_is_estimate) = logger.log(forms, &x);
        let step_norm = sol.step.norm();
        records.push(IterationRecord {
            t,
            k_t,
            step_norm,
            grad_norm: g.norm(),
            model_value: sol.model_value,
            model_decrease: -sol.model_value,
            subsolver: SubsolverKind::Exact,
            inner_iterations: sol.iterations,
            primal_value,
            primal_is_estimate,
            counters: p.counters(),
        });
        x += &sol.step;
        s_prev = step_norm;
        if step_norm <= break_norm {
            reason = TerminationReason::SmallStep;
            break;
        }
    }

    Ok(RunResult {
        algorithm: Algorithm::Mcn,
        x_hat: x,
        y_last: y,
        reason,
        iterations: records.len(),
        eps: cfg.eps,
        second_order_target: (big_m * cfg.eps).sqrt(),
        outer_bound,
        final_step_norm: None,
        final_refine_iterations: None,
        records,
        counters: p.counters(),
    })
}

/// Deterministic per-iteration seed stream (splitmix increment).
fn seed_for_iteration(base: u64, t: usize) -> u64 {
    base.wrapping_add((t as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Matrix-free inexact minimax cubic-Newton.
///
/// Requires `eps <= L^2 / M`. Large-gradient iterations
/// (`||g_t|| >= L^2 / M`) take the closed-form Cauchy step; the rest run the
/// perturbed gradient-descent subsolver for the full per-iteration budget
/// (clamped by `cfg.subsolver_iter_cap`). No `hess_blocks` calls are made
/// anywhere on this path.
pub fn imcn_run(
    p: &MinimaxProblem,
    x0: &DVector<f64>,
    cfg: &SolverConfig,
    forms: Option<&ClosedForms>,
) -> Result<RunResult> {
    validate_run_inputs(p, x0, cfg)?;
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(Error::InvalidArgument {
            arg: "delta",
            msg: format!("must be in (0, 1), got {}", cfg.delta),
        });
    }
    if !(cfg.c_sigma > 0.0) {
        return Err(Error::InvalidArgument {
            arg: "c_sigma",
            msg: format!("must be positive, got {}", cfg.c_sigma),
        });
    }
    let dc = derive_constants(p);
    let (ell, mu, rho, kappa) = (p.ell(), p.mu(), p.rho(), dc.kappa);
    let (big_l, big_m) = (dc.grad_lip, dc.hess_lip);
    if cfg.eps > big_l * big_l / big_m * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument {
            arg: "eps",
            msg: format!(
                "inexact method requires eps <= L^2/M = {}, got {}",
                big_l * big_l / big_m,
                cfg.eps
            ),
        });
    }
    let c_g = cfg.c_g.unwrap_or(IMCN_C_G);
    let c_h = cfg.c_h.unwrap_or(IMCN_C_H);
    let eps = cfg.eps;
    let eps_tilde = eps_tilde_imcn(eps, ell, rho, kappa, c_g, c_h, big_l, big_m);
    let agd_params = AgdParams::for_condition(ell, mu)?;
    let k_prime = k_prime_for(eps, c_h, ell, mu, rho)?;
    let plan = ChebyshevPlan::for_problem(p, k_prime)?;
    let sigma = sigma_value(eps, big_l, big_m, cfg.c_sigma);
    let cauchy_threshold = big_l * big_l / big_m;
    let stall_threshold = -(eps.powi(3) / big_m).sqrt() / 128.0;
    let logger = PrimalLogger::new(p, forms, eps_tilde / 10.0);

    let y_origin = DVector::zeros(p.dim_y());
    let y0_bound = match cfg.y0_radius_estimate {
        Some(r) => r,
        None => p.grad_y(x0, &y_origin).norm() / mu,
    };
    let k0 = schedule_kt(0, kappa, eps_tilde, 0.0, y0_bound)?;
    let mut x = x0.clone();
    let mut y = agd_minimize(|v| -p.grad_y(&x, v), &y_origin, k0, &agd_params)?;

    let outer_bound = match cfg.p_star {
        Some(p_star) => {
            let p0 = primal_at_start(p, forms, x0, &y);
            let b = (626.0 * (p0 - p_star) * big_m.sqrt() * eps.powf(-1.5)).ceil();
            Some(clamp_bound(b, cfg.t_max))
        }
        None => None,
    };
    let t_cap = outer_bound.unwrap_or(cfg.t_max);
    let delta_prime = cfg.delta / t_cap.max(1) as f64;
    let budget = iteration_budget(eps, delta_prime, big_l, big_m, cfg.c_sigma, c_h, p.dim_x())?;
    let k_max = cfg.subsolver_iter_cap.map_or(budget, |cap| budget.min(cap));

    let mut records = Vec::new();
    let mut reason = TerminationReason::IterationCap;
    let mut s_prev = 0.0_f64;
    let mut final_step_norm = None;
    let mut final_refine_iterations = None;
    for t in 0..t_cap {
        let k_t = if t == 0 {
            k0
        } else {
            let k = schedule_kt(t, kappa, eps_tilde, s_prev, 0.0)?;
            y = agd_minimize(|v| -p.grad_y(&x, v), &y, k, &agd_params)?;
            k
        };
        let g = p.grad_x(&x, &y);
        let hess = {
            let (pc, xc, yc, plc) = (p.clone(), x.clone(), y.clone(), plan.clone());
            Hessian::Operator {
                dim: p.dim_x(),
                apply: std::sync::Arc::new(move |v| hvp_primal(&pc, &xc, &yc, &plc, v)),
            }
        };
        let model = CubicModel::new(g.clone(), hess, big_m)?;
        let (sol, kind) = if g.norm() >= cauchy_threshold {
            (cauchy_point(&model)?, SubsolverKind::Cauchy)
        } else {
            let seed = seed_for_iteration(cfg.rng_seed, t);
            (
                cubic_solver_gd(&model, big_l, sigma, k_max, seed)?,
                SubsolverKind::GradientDescent,
            )
        };
        let (primal_value, primal_is_estimate) = logger.log(forms, &x);
        let step_norm = sol.step.norm();
        records.push(IterationRecord {
            t,
            k_t,
            step_norm,
            grad_norm: g.norm(),
            model_value: sol.model_value,
            model_decrease: -sol.model_value,
            subsolver: kind,
            inner_iterations: sol.iterations,
            primal_value,
            primal_is_estimate,
            counters: p.counters(),
        });
        if sol.model_value > stall_threshold {
            // Decrease stalled: extract the output with the terminal solve
            // from the same model (x is not advanced by s_t).
            let fsol = final_cubic_solver(&model, big_l, eps)?;
            final_step_norm = Some(fsol.step.norm());
            final_refine_iterations = Some(fsol.iterations);
            x += &fsol.step;
            reason = TerminationReason::SmallModelDecrease;
            break;
        }
        x += &sol.step;
        s_prev = step_norm;
    }

    Ok(RunResult {
        algorithm: Algorithm::Imcn,
        x_hat: x,
        y_last: y,
        reason,
        iterations: records.len(),
        eps,
        second_order_target: 2.0 * kappa.powf(1.5) * (rho * eps).sqrt(),
        outer_bound,
        final_step_norm,
        final_refine_iterations,
        records,
        counters: p.counters(),
    })
}

/// Outcome of [`refine_local_minimax`].
#[derive(Clone, Debug)]
pub struct LocalMinimaxReport {
    pub x_hat: DVector<f64>,
    pub y_hat: DVector<f64>,
    /// `||grad f(x_hat, y_hat)||` over both blocks.
    pub grad_norm: f64,
    /// Smallest eigenvalue of the Schur complement at `(x_hat, y_hat)`.
    pub min_eig_schur: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Extra AGD steps spent sharpening `y`.
    pub k_hat: usize,
    pub first_order_pass: bool,
    pub second_order_pass: bool,
}

impl LocalMinimaxReport {
    pub fn pass(&self) -> bool {
        self.first_order_pass && self.second_order_pass
    }
}

/// Sharpens a returned `(x_hat, y_last)` pair into an approximate local
/// minimax point: runs `K^` extra AGD steps so that `y` is accurate enough
/// for the joint-gradient and Schur-curvature checks at `(alpha, beta)`.
///
/// Requires `cfg.eps <= min(alpha / 3, beta^2 / (8 kappa^3 rho))` (the
/// regime where a stationarity certificate at `eps` upgrades to a local
/// minimax certificate at `(alpha, beta)`). The step count is
///
/// ```text
/// K^ = ceil( 2 sqrt(kappa) ln( sqrt(kappa+1) (eps~ + kappa 2^{-2.25} sqrt(eps/M))
///                              / min(alpha / (2 ell), beta / (8 kappa^2 rho)) ) )
/// ```
///
/// clamped at zero.
pub fn refine_local_minimax(
    p: &MinimaxProblem,
    x_hat: &DVector<f64>,
    y_last: &DVector<f64>,
    alpha: f64,
    beta: f64,
    cfg: &SolverConfig,
) -> Result<LocalMinimaxReport> {
    if x_hat.len() != p.dim_x() {
        return Err(Error::DimMismatch {
            arg: "x_hat",
            expected: p.dim_x(),
            got: x_hat.len(),
        });
    }
    if y_last.len() != p.dim_y() {
        return Err(Error::DimMismatch {
            arg: "y_last",
            expected: p.dim_y(),
            got: y_last.len(),
        });
    }
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::InvalidArgument {
            arg: "alpha/beta",
            msg: "targets must be positive".into(),
        });
    }
    let dc = derive_constants(p);
    let (ell, mu, rho, kappa) = (p.ell(), p.mu(), p.rho(), dc.kappa);
    let big_m = dc.hess_lip;
    let eps_limit = (alpha / 3.0).min(beta * beta / (8.0 * kappa.powi(3) * rho));
    if cfg.eps > eps_limit {
        return Err(Error::InvalidArgument {
            arg: "eps",
            msg: format!(
                "local-minimax refinement requires eps <= min(alpha/3, beta^2/(8 kappa^3 rho)) \
                 = {eps_limit}, got {}",
                cfg.eps
            ),
        });
    }
    let c_g = cfg.c_g.unwrap_or(MCN_C_G);
    let c_h = cfg.c_h.unwrap_or(MCN_C_H);
    let eps_prime = cfg.eps * (2.0_f64).powf(-2.5);
    let eps_tilde = eps_tilde_mcn(eps_prime, ell, rho, c_g, c_h, big_m);
    let start_bound = eps_tilde + kappa * (2.0_f64).powf(-2.25) * (cfg.eps / big_m).sqrt();
    let target = (alpha / (2.0 * ell)).min(beta / (8.0 * kappa * kappa * rho));
    let arg = (kappa + 1.0).sqrt() * start_bound / target;
    let k_hat = if arg > 1.0 {
        (2.0 * kappa.sqrt() * arg.ln()).ceil() as usize
    } else {
        0
    };

    let agd_params = AgdParams::for_condition(ell, mu)?;
    let y_hat = agd_minimize(|v| -p.grad_y(x_hat, v), y_last, k_hat, &agd_params)?;

    let gx = p.grad_x(x_hat, &y_hat);
    let gy = p.grad_y(x_hat, &y_hat);
    let grad_norm = (gx.norm_squared() + gy.norm_squared()).sqrt();
    let schur = schur_complement(&p.hess_blocks(x_hat, &y_hat))?;
    let min_eig_schur = crate::problem::min_eigenvalue_sym(&schur);

    Ok(LocalMinimaxReport {
        x_hat: x_hat.clone(),
        y_hat,
        grad_norm,
        min_eig_schur,
        alpha,
        beta,
        k_hat,
        first_order_pass: grad_norm <= alpha,
        second_order_pass: min_eig_schur >= -beta,
    })
}
