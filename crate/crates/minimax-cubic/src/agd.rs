//! Nesterov-style accelerated gradient descent for smooth strongly convex
//! minimization, used as the inner maximizer (`h(y) = -f(x, y)`).
//!
//! With step size `eta = 1/ell_h` and momentum
//! `theta = (sqrt(kappa_h) - 1)/(sqrt(kappa_h) + 1)` the iterates satisfy
//!
//! ```text
//! ||y_K - y*||^2 <= (kappa_h + 1) (1 - 1/sqrt(kappa_h))^K ||y_0 - y*||^2
//! ```
//!
//! so `K = O(sqrt(kappa_h) log(1/eps))` steps reach accuracy `eps`. Each step
//! evaluates the gradient once, at the extrapolated point.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Step size and momentum for the constant-parameter scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgdParams {
    /// Step size, `1 / ell_h` for an `ell_h`-smooth objective.
    pub eta: f64,
    /// Momentum, `(sqrt(kappa_h) - 1) / (sqrt(kappa_h) + 1)`.
    pub theta: f64,
}

impl AgdParams {
    /// Parameters for an `ell_h`-smooth, `mu_h`-strongly-convex objective.
    pub fn for_condition(ell_h: f64, mu_h: f64) -> Result<Self> {
        if !(mu_h.is_finite() && ell_h.is_finite() && mu_h > 0.0 && ell_h >= mu_h) {
            return Err(Error::InvalidConstants(format!(
                "need 0 < mu_h <= ell_h, got mu_h = {mu_h}, ell_h = {ell_h}"
            )));
        }
        let root_kappa = (ell_h / mu_h).sqrt();
        Ok(Self {
            eta: 1.0 / ell_h,
            theta: (root_kappa - 1.0) / (root_kappa + 1.0),
        })
    }
}

/// Runs exactly `steps` accelerated gradient steps from `y0` and returns the
/// final iterate.
///
/// ```text
/// y_{k+1}  = y~_k - eta * grad(y~_k)
/// y~_{k+1} = y_{k+1} + theta * (y_{k+1} - y_k)
/// ```
///
/// The gradient is evaluated at the extrapolated point `y~_k`; one gradient
/// evaluation per step. Errors if a gradient turns non-finite.
pub fn agd_minimize(
    mut grad: impl FnMut(&DVector<f64>) -> DVector<f64>,
    y0: &DVector<f64>,
    steps: usize,
    params: &AgdParams,
) -> Result<DVector<f64>> {
    let mut y = y0.clone();
    let mut y_tilde = y0.clone();
    for k in 0..steps {
        let g = grad(&y_tilde);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "gradient",
                iter: k,
            });
        }
        let y_next = &y_tilde - params.eta * g;
        y_tilde = &y_next + params.theta * (&y_next - &y);
        y = y_next;
    }
    Ok(y)
}

/// Runs accelerated gradient steps until `||grad|| <= tol`, up to
/// `max_steps`. Returns the iterate and the number of steps taken.
///
/// Used by verification paths that need a gradient-certified maximizer
/// rather than a step-count certified one.
pub fn agd_minimize_to_grad_norm(
    mut grad: impl FnMut(&DVector<f64>) -> DVector<f64>,
    y0: &DVector<f64>,
    tol: f64,
    max_steps: usize,
    params: &AgdParams,
) -> Result<(DVector<f64>, usize)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument {
            arg: "tol",
            msg: format!("must be positive, got {tol}"),
        });
    }
    let mut y = y0.clone();
    let mut y_tilde = y0.clone();
    let mut last_norm = f64::INFINITY;
    for k in 0..=max_steps {
        // One gradient per step: the same evaluation serves as certificate
        // (at the extrapolated point) and as the step direction.
        let g = grad(&y_tilde);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "gradient",
                iter: k,
            });
        }
        last_norm = g.norm();
        if last_norm <= tol {
            return Ok((y_tilde, k));
        }
        if k == max_steps {
            break;
        }
        let y_next = &y_tilde - params.eta * g;
        y_tilde = &y_next + params.theta * (&y_next - &y);
        y = y_next;
    }
    Err(Error::InvalidArgument {
        arg: "max_steps",
        msg: format!(
            "gradient norm {last_norm:.3e} still above tol {tol:.3e} after {max_steps} steps"
        ),
    })
}

/// Distance bound after `k` steps:
/// `sqrt(kappa_h + 1) * (1 - 1/sqrt(kappa_h))^{k/2} * dist0`.
///
/// For `kappa_h = 1` the contraction factor is zero, so the bound is
/// `sqrt(2) * dist0` at `k = 0` and `0` for any `k >= 1`.
pub fn agd_rate_bound(kappa_h: f64, k: usize, dist0: f64) -> f64 {
    let contraction = 1.0 - 1.0 / kappa_h.sqrt();
    (kappa_h + 1.0).sqrt() * contraction.powf(k as f64 / 2.0) * dist0
}

/// Smallest `k` such that [`agd_rate_bound`] falls to `target`.
pub fn agd_iters_for(kappa_h: f64, dist0: f64, target: f64) -> Result<usize> {
    if !(kappa_h.is_finite() && kappa_h >= 1.0) {
        return Err(Error::InvalidConstants(format!(
            "need kappa_h >= 1, got {kappa_h}"
        )));
    }
    if !(target > 0.0) || !(dist0 >= 0.0) {
        return Err(Error::InvalidArgument {
            arg: "target",
            msg: format!("need target > 0 and dist0 >= 0, got {target}, {dist0}"),
        });
    }
    if agd_rate_bound(kappa_h, 0, dist0) <= target {
        return Ok(0);
    }
    if kappa_h == 1.0 {
        return Ok(1); // bound is exactly zero after one step
    }
    let contraction = 1.0 - 1.0 / kappa_h.sqrt();
    // Analytic guess, then walk to the exact threshold to absorb rounding.
    let guess = (2.0 * (target / ((kappa_h + 1.0).sqrt() * dist0)).ln() / contraction.ln()).ceil();
    let mut k = if guess.is_finite() && guess > 0.0 {
        guess as usize
    } else {
        0
    };
    while agd_rate_bound(kappa_h, k, dist0) > target {
        k += 1;
    }
    while k > 0 && agd_rate_bound(kappa_h, k - 1, dist0) <= target {
        k -= 1;
    }
    Ok(k)
}
