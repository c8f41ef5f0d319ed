//! Cubic-regularized model solvers.
//!
//! Everything here works on the model
//!
//! ```text
//! m(s) = g^T s + 1/2 s^T H s + (M/6) ||s||^3
//! ```
//!
//! whose global minimizer `s*` is characterized (Nesterov-Polyak) by
//!
//! ```text
//! g + H s* + (M/2) ||s*|| s* = 0,    H + (M/2) ||s*|| I  >=  0,
//! ```
//!
//! and always achieves `m(s*) <= -(M/12) ||s*||^3`.
//!
//! Four solvers with different contracts:
//! * [`solve_cubic_exact`] - eigendecomposition plus a secular root-find,
//!   including the hard case; needs a dense Hessian.
//! * [`cauchy_point`] - exact minimizer along `-g`, one Hessian apply.
//! * [`cubic_solver_gd`] - fixed-step gradient descent on a perturbed model,
//!   matrix-free, exactly `k_max` steps.
//! * [`final_cubic_solver`] - gradient descent until the model gradient is
//!   small, used to extract the terminal iterate.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::problem::symmetrize;

/// Hessian access for a cubic model: either a dense matrix or a black-box
/// symmetric operator.
#[derive(Clone)]
pub enum Hessian {
    Dense(DMatrix<f64>),
    Operator {
        dim: usize,
        apply: Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>,
    },
}

impl Hessian {
    pub fn dim(&self) -> usize {
        match self {
            Hessian::Dense(m) => m.nrows(),
            Hessian::Operator { dim, .. } => *dim,
        }
    }

    /// One Hessian-vector product.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            Hessian::Dense(m) => m * v,
            Hessian::Operator { apply, .. } => apply(v),
        }
    }

    pub fn as_dense(&self) -> Option<&DMatrix<f64>> {
        match self {
            Hessian::Dense(m) => Some(m),
            Hessian::Operator { .. } => None,
        }
    }
}

impl fmt::Debug for Hessian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hessian::Dense(m) => write!(f, "Hessian::Dense({}x{})", m.nrows(), m.ncols()),
            Hessian::Operator { dim, .. } => write!(f, "Hessian::Operator(dim {dim})"),
        }
    }
}

/// The cubic model `m(s) = g^T s + 1/2 s^T H s + (weight/6) ||s||^3`.
#[derive(Clone, Debug)]
pub struct CubicModel {
    pub grad: DVector<f64>,
    pub hess: Hessian,
    /// Cubic regularization weight `M > 0`.
    pub weight: f64,
}

impl CubicModel {
    pub fn new(grad: DVector<f64>, hess: Hessian, weight: f64) -> Result<Self> {
        let m = Self { grad, hess, weight };
        m.check()?;
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    fn check(&self) -> Result<()> {
        if self.hess.dim() != self.grad.len() {
            return Err(Error::DimMismatch {
                arg: "hess",
                expected: self.grad.len(),
                got: self.hess.dim(),
            });
        }
        if !(self.weight.is_finite() && self.weight > 0.0) {
            return Err(Error::InvalidArgument {
                arg: "weight",
                msg: format!(
                    "cubic weight must be positive and finite, got {}",
                    self.weight
                ),
            });
        }
        if self.grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "model gradient",
                iter: 0,
            });
        }
        Ok(())
    }
}

/// Outcome of a cubic-model solve.
#[derive(Clone, Debug)]
pub struct CubicSolution {
    pub step: DVector<f64>,
    /// `m(step)`, always on the unperturbed model.
    pub model_value: f64,
    /// `||g + H step + (weight/2) ||step|| step||`.
    pub residual: f64,
    /// Lagrange multiplier `(weight/2) ||step||` when the solver certifies
    /// global optimality (exact solver only).
    pub multiplier: Option<f64>,
    /// Inner iterations the solver spent.
    pub iterations: u64,
}

/// Evaluates the model at `s`.
pub fn cubic_model_value(model: &CubicModel, s: &DVector<f64>) -> f64 {
    model.grad.dot(s) + 0.5 * s.dot(&model.hess.apply(s)) + model.weight / 6.0 * s.norm().powi(3)
}

/// Secular function value `sqrt(sum_i ghat_i^2 / (lam_i + lam)^2) - 2 lam / M`
/// over the index set where `include(i)`. Division by an exact zero with a
/// zero numerator contributes nothing (pseudo-inverse convention).
fn secular(
    ghat: &DVector<f64>,
    lams: &DVector<f64>,
    lam: f64,
    weight: f64,
    include: impl Fn(usize) -> bool,
) -> f64 {
    let mut w = 0.0_f64;
    for i in 0..ghat.len() {
        if !include(i) {
            continue;
        }
        let den = lams[i] + lam;
        if den == 0.0 {
            if ghat[i] != 0.0 {
                return f64::INFINITY;
            }
            continue;
        }
        let t = ghat[i] / den;
        w += t * t;
    }
    w.sqrt() - 2.0 * lam / weight
}

/// Derivative of the secular function in `lam` (negative on the root domain).
fn secular_derivative(ghat: &DVector<f64>, lams: &DVector<f64>, lam: f64, weight: f64) -> f64 {
    let mut w = 0.0_f64;
    let mut w3 = 0.0_f64;
    for i in 0..ghat.len() {
        let den = lams[i] + lam;
        if den == 0.0 {
            continue;
        }
        let t = ghat[i] / den;
        w += t * t;
        w3 += t * t / den;
    }
    let norm = w.sqrt();
    if norm > 0.0 {
        -w3 / norm - 2.0 / weight
    } else {
        -2.0 / weight
    }
}

/// Relative threshold below which the gradient is considered orthogonal to
/// the bottom eigenspace (hard-case detection).
const HARD_CASE_REL: f64 = 1e-12;
/// Relative width of the eigenvalue cluster treated as the bottom eigenspace.
const EIG_CLUSTER_REL: f64 = 1e-12;
/// Bisection/Newton iteration cap for the secular root-find. Bisection alone
/// gains one bit per iteration, so 300 is far beyond what f64 can need.
const SECULAR_MAX_ITER: usize = 300;

/// Globally minimizes the cubic model via symmetric eigendecomposition and a
/// safeguarded Newton/bisection root-find on the secular equation.
///
/// Handles the hard case (gradient orthogonal to the bottom eigenspace with
/// an interior-norm candidate): the step gains a bottom-eigenvector component
/// of the exact length, oriented so its first nonzero coordinate is positive,
/// which keeps results deterministic across eigensolver sign flips.
///
/// Post-conditions (checked): `residual <= tol * (1 + ||g||)`; the returned
/// `multiplier` equals `(weight/2) ||step||`.
pub fn solve_cubic_exact(model: &CubicModel, tol: f64) -> Result<CubicSolution> {
    model.check()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument {
            arg: "tol",
            msg: format!("must be positive, got {tol}"),
        });
    }
    let h = model
        .hess
        .as_dense()
        .ok_or(Error::DenseRequired("solve_cubic_exact"))?;
    let weight = model.weight;
    let g = &model.grad;
    let g_norm = g.norm();

    let eig = symmetrize(h).symmetric_eigen();
    let lams = eig.eigenvalues.clone();
    let q = eig.eigenvectors;
    let ghat = q.transpose() * g;

    let lam_min = lams.iter().cloned().fold(f64::INFINITY, f64::min);
    let lam_scale = lams.iter().fold(1.0_f64, |acc, &v| acc.max(v.abs()));
    let lam_lo = (-lam_min).max(0.0);
    let cluster_tol = EIG_CLUSTER_REL * lam_scale;
    let in_bottom: Vec<bool> = lams.iter().map(|&l| l <= lam_min + cluster_tol).collect();

    // Bottom eigenvector with deterministic orientation: the first
    // coordinate of nontrivial magnitude is made positive, so results do not
    // depend on eigensolver sign conventions.
    let oriented_bottom = || -> DVector<f64> {
        let idx = (0..lams.len())
            .find(|&i| in_bottom[i])
            .expect("nonempty bottom");
        let mut qm: DVector<f64> = q.column(idx).into();
        if let Some(j) = (0..qm.len()).find(|&j| qm[j].abs() > 1e-12) {
            if qm[j] < 0.0 {
                qm = -qm;
            }
        }
        qm
    };

    let finish = |step: DVector<f64>, lam: f64, iters: u64| -> Result<CubicSolution> {
        let residual_vec = g + h * &step + (weight / 2.0) * step.norm() * &step;
        let residual = residual_vec.norm();
        if residual > tol * (1.0 + g_norm) {
            return Err(Error::RootFindFailed {
                iters: iters as usize,
                lo: lam,
                hi: lam,
                residual,
            });
        }
        let model_value = cubic_model_value(model, &step);
        Ok(CubicSolution {
            step,
            model_value,
            residual,
            multiplier: Some(lam),
            iterations: iters,
        })
    };

    // Trivial interior solution: positive semidefinite H with zero gradient.
    if g_norm == 0.0 && lam_min >= 0.0 {
        return finish(DVector::zeros(g.len()), 0.0, 0);
    }

    // Hard-case candidate: negative curvature and (numerically) no gradient
    // component in the bottom eigenspace.
    if lam_min < 0.0 {
        let g_bottom: f64 = (0..g.len())
            .filter(|&i| in_bottom[i])
            .map(|i| ghat[i] * ghat[i])
            .sum::<f64>()
            .sqrt();
        if g_bottom <= HARD_CASE_REL * g_norm {
            let phi_ridge = secular(&ghat, &lams, lam_lo, weight, |i| !in_bottom[i]);
            if phi_ridge <= 0.0 {
                // Interior candidate at lam = lam_lo: fill the step on the
                // ridge and extend along the bottom eigenvector to length
                // 2 lam_lo / weight.
                let target = 2.0 * lam_lo / weight;
                let mut shat = DVector::zeros(g.len());
                for i in 0..g.len() {
                    if !in_bottom[i] {
                        shat[i] = -ghat[i] / (lams[i] + lam_lo);
                    }
                }
                let ridge_norm2 = shat.norm_squared();
                let tau = (target * target - ridge_norm2).max(0.0).sqrt();
                let mut step = &q * shat;
                step += tau * oriented_bottom();
                return finish(step, lam_lo, 0);
            }
        }
    }

    // Regular case: bracket the secular root on (lam_lo, inf) and close in
    // with safeguarded Newton.
    let h_norm = lam_scale;
    let step_ub = (h_norm + (h_norm * h_norm + 2.0 * weight * g_norm).sqrt()) / weight;
    let mut lo = lam_lo;
    let mut hi = (lam_lo + 1e-3 * lam_scale.max(1.0)).max(weight / 2.0 * step_ub);
    let mut doublings = 0;
    while secular(&ghat, &lams, hi, weight, |_| true) >= 0.0 {
        hi = lam_lo + 2.0 * (hi - lam_lo).max(1e-300);
        doublings += 1;
        if doublings > 200 {
            return Err(Error::RootFindFailed {
                iters: doublings,
                lo,
                hi,
                residual: f64::INFINITY,
            });
        }
    }

    let mut lam = 0.5 * (lo + hi);
    let mut converged = false;
    let mut used = 0usize;
    for it in 0..SECULAR_MAX_ITER {
        used = it + 1;
        let phi = secular(&ghat, &lams, lam, weight, |_| true);
        if phi.is_finite() && phi.abs() <= 1e-14 * (1.0 + 2.0 * lam / weight) {
            converged = true;
            break;
        }
        if phi > 0.0 {
            lo = lam;
        } else {
            hi = lam;
        }
        if hi - lo <= 1e-15 * hi.max(1.0) {
            lam = 0.5 * (lo + hi);
            converged = true;
            break;
        }
        // Newton step, falling back to bisection whenever it leaves the
        // bracket or the derivative is unusable.
        let mut next = f64::NAN;
        if phi.is_finite() {
            let dphi = secular_derivative(&ghat, &lams, lam, weight);
            if dphi.is_finite() && dphi < 0.0 {
                next = lam - phi / dphi;
            }
        }
        lam = if next.is_finite() && next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
    }
    if !converged {
        return Err(Error::RootFindFailed {
            iters: SECULAR_MAX_ITER,
            lo,
            hi,
            residual: secular(&ghat, &lams, lam, weight, |_| true).abs(),
        });
    }

    let build_step = |lam: f64| -> DVector<f64> {
        let mut shat = DVector::zeros(g.len());
        for i in 0..g.len() {
            let den = lams[i] + lam;
            if den != 0.0 {
                shat[i] = -ghat[i] / den;
            }
        }
        &q * shat
    };
    let residual_of = |s: &DVector<f64>| (g + h * s + (weight / 2.0) * s.norm() * s).norm();

    let mut best_step = build_step(lam);
    let mut best_lam = lam;
    let mut best_res = residual_of(&best_step);
    if lam_min < 0.0 {
        // Near-hard regime: the secular root hugs the pole at -lam_min so
        // tightly that no representable lam makes ||s(lam)|| match
        // 2 lam / weight. Rebuild the step at the negative-phi endpoint with
        // the bottom coordinates zeroed and restore the missing length along
        // the bottom eigenvector (More-Sorensen correction). Either
        // orientation preserves the norm; keep whichever residual wins.
        let lam_c = hi;
        let mut shat = DVector::zeros(g.len());
        for i in 0..g.len() {
            if !in_bottom[i] {
                shat[i] = -ghat[i] / (lams[i] + lam_c);
            }
        }
        let ridge = &q * shat;
        let target = 2.0 * lam_c / weight;
        let tau2 = target * target - ridge.norm_squared();
        if tau2 > 0.0 {
            let spoke = tau2.sqrt() * oriented_bottom();
            for cand in [&ridge + &spoke, &ridge - &spoke] {
                let res = residual_of(&cand);
                if res < best_res {
                    best_step = cand;
                    best_lam = lam_c;
                    best_res = res;
                }
            }
        }
    }
    finish(best_step, best_lam, used as u64)
}

/// Exact minimizer of the model along the steepest-descent ray `-g`:
/// `s = -R_C g / ||g||` with
///
/// ```text
/// R_C = -t + sqrt(t^2 + 2 ||g|| / M),   t = g^T H g / (M ||g||^2),
/// ```
///
/// giving the closed-form decrease `m(s) = -R_C ||g|| / 2 - M R_C^3 / 12`.
/// Costs exactly one Hessian apply.
pub fn cauchy_point(model: &CubicModel) -> Result<CubicSolution> {
    model.check()?;
    let g = &model.grad;
    let g_norm = g.norm();
    if g_norm == 0.0 {
        return Err(Error::InvalidArgument {
            arg: "grad",
            msg: "Cauchy point undefined for zero gradient".into(),
        });
    }
    let m = model.weight;
    let hg = model.hess.apply(g);
    let t = g.dot(&hg) / (m * g_norm * g_norm);
    let disc = (t * t + 2.0 * g_norm / m).sqrt();
    // Stable quadratic root: avoid cancellation when t > 0.
    let r_c = if t > 0.0 {
        2.0 * g_norm / (m * (t + disc))
    } else {
        -t + disc
    };
    let scale = -r_c / g_norm;
    let step = g * scale;
    let hs = hg * scale;
    let model_value = g.dot(&step) + 0.5 * step.dot(&hs) + m / 6.0 * r_c.powi(3);
    let residual = (g + hs + (m / 2.0) * r_c * &step).norm();
    Ok(CubicSolution {
        step,
        model_value,
        residual,
        multiplier: None,
        iterations: 1,
    })
}

/// Matrix-free subsolver: runs exactly `k_max` gradient-descent steps with
/// step size `1 / (20 big_l)` on the model whose gradient is perturbed by a
/// uniformly random direction of length `sigma` (drawn from ChaCha8 seeded
/// with `rng_seed`; no perturbation when `sigma == 0`).
///
/// No early stopping; the perturbation is what lets plain gradient descent
/// leave the saddle-shaped regions of a nonconvex model. The returned
/// `model_value` and `residual` are evaluated on the *unperturbed* model.
/// Costs exactly `k_max + 1` Hessian applies.
pub fn cubic_solver_gd(
    model: &CubicModel,
    big_l: f64,
    sigma: f64,
    k_max: u64,
    rng_seed: u64,
) -> Result<CubicSolution> {
    model.check()?;
    if !(big_l.is_finite() && big_l > 0.0) {
        return Err(Error::InvalidArgument {
            arg: "big_l",
            msg: format!("must be positive and finite, got {big_l}"),
        });
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidArgument {
            arg: "sigma",
            msg: format!("must be nonnegative and finite, got {sigma}"),
        });
    }
    let d = model.dim();
    let eta = 1.0 / (20.0 * big_l);
    let g_run = if sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let zeta = loop {
            let v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let n = v.norm();
            if n > 0.0 {
                break v / n;
            }
        };
        &model.grad + sigma * zeta
    } else {
        model.grad.clone()
    };

    let half_m = model.weight / 2.0;
    let mut s = DVector::zeros(d);
    for k in 0..k_max {
        let hs = model.hess.apply(&s);
        let r = &g_run + hs + half_m * s.norm() * &s;
        s -= eta * r;
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "subsolver iterate",
                iter: k as usize,
            });
        }
    }
    let hs = model.hess.apply(&s);
    let s_norm = s.norm();
    let model_value = model.grad.dot(&s) + 0.5 * s.dot(&hs) + model.weight / 6.0 * s_norm.powi(3);
    let residual = (&model.grad + hs + half_m * s_norm * &s).norm();
    Ok(CubicSolution {
        step: s,
        model_value,
        residual,
        multiplier: None,
        iterations: k_max,
    })
}

/// Terminal refinement: gradient descent on the model until its gradient
/// norm drops below `eps / 2`, with a hard cap of
/// `ceil(100 L^2 / (M eps) * (1 + ln(1 + ||g||)))` iterations.
///
/// Costs one Hessian apply per iteration.
pub fn final_cubic_solver(model: &CubicModel, big_l: f64, eps: f64) -> Result<CubicSolution> {
    model.check()?;
    if !(big_l.is_finite() && big_l > 0.0) || !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidArgument {
            arg: "big_l/eps",
            msg: format!("must be positive and finite, got big_l = {big_l}, eps = {eps}"),
        });
    }
    let g_norm = model.grad.norm();
    let cap_f = (100.0 * big_l * big_l / (model.weight * eps) * (1.0 + (1.0 + g_norm).ln())).ceil();
    let cap = if cap_f.is_finite() {
        cap_f as u64
    } else {
        u64::MAX
    };
    let target = eps / 2.0;
    let eta = 1.0 / (20.0 * big_l);
    let half_m = model.weight / 2.0;

    let mut s = DVector::zeros(model.dim());
    let mut g_m = model.grad.clone();
    let mut iters = 0u64;
    while g_m.norm() >= target {
        if iters >= cap {
            return Err(Error::FinalSolverCap {
                cap,
                grad_norm: g_m.norm(),
                target,
            });
        }
        s -= eta * &g_m;
        let hs = model.hess.apply(&s);
        g_m = &model.grad + hs + half_m * s.norm() * &s;
        if g_m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "final-solver model gradient",
                iter: iters as usize,
            });
        }
        iters += 1;
    }
    // H s recovered from the model gradient; no extra Hessian apply needed.
    let s_norm = s.norm();
    let hs = &g_m - &model.grad - half_m * s_norm * &s;
    let model_value = model.grad.dot(&s) + 0.5 * s.dot(&hs) + model.weight / 6.0 * s_norm.powi(3);
    Ok(CubicSolution {
        step: s,
        model_value,
        residual: g_m.norm(),
        multiplier: None,
        iterations: iters,
    })
}

/// Iteration budget for the matrix-free subsolver at target accuracy `eps`
/// and per-call failure probability `delta_prime`:
///
/// ```text
/// ceil( 19200 L / (C_sigma sqrt(M eps)) * [ 6 ln(3 + 9 sqrt(d_x)/delta')
///       + 18 ln(6 L / sqrt(M eps))
///       + 14 ln(48 (L + C_H sqrt(M eps)) / (C_sigma sqrt(M eps)) + 24 / C_sigma) ] )
/// ```
///
/// Requires `eps <= L^2 / M` (the regime where the middle log is
/// nonnegative) and `delta_prime` in `(0, 1)`.
pub fn iteration_budget(
    eps: f64,
    delta_prime: f64,
    big_l: f64,
    big_m: f64,
    c_sigma: f64,
    c_h: f64,
    dim_x: usize,
) -> Result<u64> {
    if !(eps > 0.0 && big_l > 0.0 && big_m > 0.0 && c_sigma > 0.0 && c_h > 0.0) || dim_x == 0 {
        return Err(Error::InvalidArgument {
            arg: "iteration_budget",
            msg: "eps, big_l, big_m, c_sigma, c_h must be positive and dim_x >= 1".into(),
        });
    }
    if !(delta_prime > 0.0 && delta_prime < 1.0) {
        return Err(Error::InvalidArgument {
            arg: "delta_prime",
            msg: format!("must be in (0, 1), got {delta_prime}"),
        });
    }
    if eps > big_l * big_l / big_m * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument {
            arg: "eps",
            msg: format!("must satisfy eps <= L^2/M = {}", big_l * big_l / big_m),
        });
    }
    let sme = (big_m * eps).sqrt();
    let t1 = 6.0 * (3.0 + 9.0 * (dim_x as f64).sqrt() / delta_prime).ln();
    let t2 = 18.0 * (6.0 * big_l / sme).ln();
    let t3 = 14.0 * (48.0 * (big_l + c_h * sme) / (c_sigma * sme) + 24.0 / c_sigma).ln();
    let v = 19200.0 * big_l / (c_sigma * sme) * (t1 + t2 + t3);
    if !v.is_finite() || v < 0.0 {
        return Err(Error::InvalidArgument {
            arg: "iteration_budget",
            msg: format!("budget evaluated to {v}"),
        });
    }
    Ok(v.ceil() as u64)
}

/// Perturbation radius for the matrix-free subsolver:
/// `sigma = C_sigma sqrt(M eps^3) / (4608 (4 L + sqrt(M eps)))`.
pub fn sigma_value(eps: f64, big_l: f64, big_m: f64, c_sigma: f64) -> f64 {
    c_sigma * (big_m * eps.powi(3)).sqrt() / (4608.0 * (4.0 * big_l + (big_m * eps).sqrt()))
}
