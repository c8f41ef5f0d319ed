//! Certification utilities: oracle-only evaluation of the primal
//! `P(x) = max_y f(x, y)` and its derivatives, finite-difference probes,
//! stationarity checks, and sampled Lipschitz-constant audits.
//!
//! Everything here works through the problem's black-box oracles (plus its
//! stated constants); closed forms are never consulted, so these routines
//! can audit a solver run on problems where no analytic primal exists.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::agd::{agd_iters_for, agd_minimize_to_grad_norm, AgdParams};
use crate::error::{Error, Result};
use crate::problem::{
    derive_constants, min_eigenvalue_sym, schur_complement, spectral_norm_sym, symmetrize,
    MinimaxProblem,
};

/// Central-difference step for gradient probes.
pub const FD_GRAD_STEP: f64 = 1e-5;
/// Central-difference step for Hessian probes (applied to gradients).
pub const FD_HESS_STEP: f64 = 1e-4;

/// Central-difference gradient of a scalar function.
pub fn fd_gradient(
    mut f: impl FnMut(&DVector<f64>) -> f64,
    x: &DVector<f64>,
    h: f64,
) -> DVector<f64> {
    let n = x.len();
    let mut g = DVector::zeros(n);
    let mut xp = x.clone();
    for i in 0..n {
        xp[i] = x[i] + h;
        let up = f(&xp);
        xp[i] = x[i] - h;
        let dn = f(&xp);
        xp[i] = x[i];
        g[i] = (up - dn) / (2.0 * h);
    }
    g
}

/// Central-difference Jacobian of a vector function (rows index outputs).
pub fn fd_jacobian(
    mut f: impl FnMut(&DVector<f64>) -> DVector<f64>,
    x: &DVector<f64>,
    h: f64,
) -> DMatrix<f64> {
    let n = x.len();
    let probe = f(x);
    let m = probe.len();
    let mut j = DMatrix::zeros(m, n);
    let mut xp = x.clone();
    for i in 0..n {
        xp[i] = x[i] + h;
        let up = f(&xp);
        xp[i] = x[i] - h;
        let dn = f(&xp);
        xp[i] = x[i];
        j.set_column(i, &((up - dn) / (2.0 * h)));
    }
    j
}

/// Runs the inner maximization at `x` until `||y - y*(x)|| <= dist_tol`
/// (certified through the gradient norm and strong concavity), then returns
/// `(f(x, y), inner_steps)`. The value error is at most
/// `(ell / 2) dist_tol^2`.
pub fn eval_primal(p: &MinimaxProblem, x: &DVector<f64>, dist_tol: f64) -> Result<(f64, usize)> {
    let (y, steps) = maximize_inner(p, x, dist_tol)?;
    Ok((p.value(x, &y), steps))
}

/// Oracle-only `grad P(x)`, accurate to `ell * dist_tol`.
pub fn grad_p(p: &MinimaxProblem, x: &DVector<f64>, dist_tol: f64) -> Result<DVector<f64>> {
    let (y, _) = maximize_inner(p, x, dist_tol)?;
    Ok(p.grad_x(x, &y))
}

/// Oracle-only `hess P(x)` (the Schur complement at an accurate inner
/// iterate), accurate to `3 kappa^2 rho * dist_tol` in spectral norm.
pub fn hess_p(p: &MinimaxProblem, x: &DVector<f64>, dist_tol: f64) -> Result<DMatrix<f64>> {
    let (y, _) = maximize_inner(p, x, dist_tol)?;
    schur_complement(&p.hess_blocks(x, &y))
}

/// Inner solve to a distance certificate: `||grad_y f(x, y)|| <= mu d`
/// implies `||y - y*(x)|| <= d` by strong concavity.
fn maximize_inner(
    p: &MinimaxProblem,
    x: &DVector<f64>,
    dist_tol: f64,
) -> Result<(DVector<f64>, usize)> {
    if x.len() != p.dim_x() {
        return Err(Error::DimMismatch {
            arg: "x",
            expected: p.dim_x(),
            got: x.len(),
        });
    }
    if !(dist_tol.is_finite() && dist_tol > 0.0) {
        return Err(Error::InvalidArgument {
            arg: "dist_tol",
            msg: format!("must be positive and finite, got {dist_tol}"),
        });
    }
    let (ell, mu) = (p.ell(), p.mu());
    let kappa = ell / mu;
    let params = AgdParams::for_condition(ell, mu)?;
    let y0 = DVector::zeros(p.dim_y());
    let dist0 = p.grad_y(x, &y0).norm() / mu;
    // The gradient test fires once the iterate is within (mu/ell) dist_tol
    // of y*; budget AGD by its rate bound with headroom for the
    // extrapolation offset.
    let needed = agd_iters_for(kappa, dist0.max(dist_tol), dist_tol * mu / (4.0 * ell))?;
    let max_steps = 2 * needed + 64;
    agd_minimize_to_grad_norm(|v| -p.grad_y(x, v), &y0, mu * dist_tol, max_steps, &params)
}

/// Outcome of [`check_stationarity`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StationarityReport {
    /// First-order target the check ran at.
    pub eps: f64,
    /// Second-order target (curvature floor is `-delta`).
    pub delta: f64,
    /// Measured `||grad P(x)||`.
    pub grad_p_norm: f64,
    /// Measured smallest eigenvalue of `hess P(x)`.
    pub min_eig_hess_p: f64,
    /// Inner-solve distance tolerance used for the measurements.
    pub inner_dist_tol: f64,
    /// Inner steps spent on the gradient measurement.
    pub inner_steps: usize,
    /// `grad_p_norm <= eps`.
    pub fsp_pass: bool,
    /// First-order pass and `min_eig_hess_p >= -delta`.
    pub ssp_pass: bool,
}

/// Measures `||grad P||` and `lambda_min(hess P)` at `x` through the oracles
/// and grades them against `(eps, delta)`. The inner tolerance is chosen so
/// measurement error is at most one percent of each target, hence a reported
/// pass is meaningful at the stated scale. A second-order pass requires the
/// first-order pass by construction.
pub fn check_stationarity(
    p: &MinimaxProblem,
    x: &DVector<f64>,
    eps: f64,
    delta: f64,
) -> Result<StationarityReport> {
    if !(eps > 0.0 && delta > 0.0) {
        return Err(Error::InvalidArgument {
            arg: "eps/delta",
            msg: format!("targets must be positive, got ({eps}, {delta})"),
        });
    }
    let dc = derive_constants(p);
    let (ell, rho, kappa) = (p.ell(), p.rho(), dc.kappa);
    let grad_sens = ell;
    let hess_sens = 3.0 * kappa * kappa * rho;
    let dist_tol = (eps / (100.0 * grad_sens)).min(delta / (100.0 * hess_sens));

    let (y, inner_steps) = maximize_inner(p, x, dist_tol)?;
    let grad_p_norm = p.grad_x(x, &y).norm();
    let hess = schur_complement(&p.hess_blocks(x, &y))?;
    let min_eig_hess_p = min_eigenvalue_sym(&hess);

    let fsp_pass = grad_p_norm <= eps;
    let ssp_pass = fsp_pass && min_eig_hess_p >= -delta;
    Ok(StationarityReport {
        eps,
        delta,
        grad_p_norm,
        min_eig_hess_p,
        inner_dist_tol: dist_tol,
        inner_steps,
        fsp_pass,
        ssp_pass,
    })
}

/// One audited constant in a [`LipschitzReport`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LipschitzRow {
    /// Which quantity was probed.
    pub name: String,
    /// Largest difference ratio observed over the samples.
    pub measured_max: f64,
    /// The bound the problem's stated constants imply.
    pub stated_bound: f64,
    /// `measured_max <= stated_bound` (with 1% slack for inner-solve and
    /// finite-sample noise).
    pub within: bool,
}

/// Outcome of [`estimate_lipschitz`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub rows: Vec<LipschitzRow>,
    pub n_samples: usize,
    pub box_radius: f64,
    pub seed: u64,
}

impl LipschitzReport {
    /// True when every audited constant held.
    pub fn all_within(&self) -> bool {
        self.rows.iter().all(|r| r.within)
    }
}

/// Samples difference quotients of the oracles inside the box
/// `[-box_radius, box_radius]^d` and grades the stated constants:
///
/// | probe                          | stated bound        |
/// |--------------------------------|---------------------|
/// | joint gradient of `f`          | `ell`               |
/// | joint Hessian of `f`           | `rho`               |
/// | gradient of `P`                | `(kappa + 1) ell`   |
/// | Hessian of `P`                 | `M`                 |
/// | Schur complement in `y`        | `3 kappa^2 rho`     |
///
/// Sampling can only certify violations, never validity; a clean report
/// means no counterexample was found at this sample size.
pub fn estimate_lipschitz(
    p: &MinimaxProblem,
    box_radius: f64,
    n_samples: usize,
    seed: u64,
) -> Result<LipschitzReport> {
    use rand::{Rng, SeedableRng};
    if !(box_radius.is_finite() && box_radius > 0.0) {
        return Err(Error::InvalidArgument {
            arg: "box_radius",
            msg: format!("must be positive and finite, got {box_radius}"),
        });
    }
    if n_samples == 0 {
        return Err(Error::InvalidArgument {
            arg: "n_samples",
            msg: "need at least one sample".into(),
        });
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (dx, dy) = (p.dim_x(), p.dim_y());
    let dc = derive_constants(p);
    let (ell, rho, kappa) = (p.ell(), p.rho(), dc.kappa);
    let r = box_radius;
    let sample = |rng: &mut rand_chacha::ChaCha8Rng, n: usize| {
        DVector::from_fn(n, |_, _| rng.random_range(-r..r))
    };
    // Primal probes run the inner solver; keep its error far below the
    // difference scale so ratios are trustworthy.
    let primal_tol = 1e-9 * r;

    let mut max_grad_f = 0.0_f64;
    let mut max_hess_f = 0.0_f64;
    let mut max_grad_p = 0.0_f64;
    let mut max_hess_p = 0.0_f64;
    let mut max_schur_y = 0.0_f64;
    for _ in 0..n_samples {
        let x = sample(&mut rng, dx);
        let y = sample(&mut rng, dy);
        let x2 = sample(&mut rng, dx);
        let y2 = sample(&mut rng, dy);

        let dz = ((&x2 - &x).norm_squared() + (&y2 - &y).norm_squared()).sqrt();
        if dz > 1e-12 {
            let mut dg = DVector::zeros(dx + dy);
            let gx = p.grad_x(&x2, &y2) - p.grad_x(&x, &y);
            let gy = p.grad_y(&x2, &y2) - p.grad_y(&x, &y);
            dg.rows_mut(0, dx).copy_from(&gx);
            dg.rows_mut(dx, dy).copy_from(&gy);
            max_grad_f = max_grad_f.max(dg.norm() / dz);

            let h1 = p.hess_blocks(&x, &y).assemble_full();
            let h2 = p.hess_blocks(&x2, &y2).assemble_full();
            max_hess_f = max_hess_f.max(spectral_norm_sym(&symmetrize(&(h2 - h1))) / dz);
        }

        let dxn = (&x2 - &x).norm();
        if dxn > 1e-9 {
            let g1 = grad_p(p, &x, primal_tol)?;
            let g2 = grad_p(p, &x2, primal_tol)?;
            max_grad_p = max_grad_p.max((g2 - g1).norm() / dxn);

            let hp1 = hess_p(p, &x, primal_tol)?;
            let hp2 = hess_p(p, &x2, primal_tol)?;
            max_hess_p = max_hess_p.max(spectral_norm_sym(&symmetrize(&(hp2 - hp1))) / dxn);
        }

        let dyn_ = (&y2 - &y).norm();
        if dyn_ > 1e-12 {
            let s1 = schur_complement(&p.hess_blocks(&x, &y))?;
            let s2 = schur_complement(&p.hess_blocks(&x, &y2))?;
            max_schur_y = max_schur_y.max(spectral_norm_sym(&symmetrize(&(s2 - s1))) / dyn_);
        }
    }

    let slack = 1.01;
    let row = |name: &str, measured: f64, bound: f64| LipschitzRow {
        name: name.to_string(),
        measured_max: measured,
        stated_bound: bound,
        within: measured <= bound * slack,
    };
    let big_m = dc.hess_lip;
    let rows = vec![
        row("grad_f", max_grad_f, ell),
        row("hess_f", max_hess_f, rho),
        row("grad_primal", max_grad_p, (kappa + 1.0) * ell),
        row("hess_primal", max_hess_p, big_m),
        row("schur_in_y", max_schur_y, 3.0 * kappa * kappa * rho),
    ];
    Ok(LipschitzReport {
        rows,
        n_samples,
        box_radius,
        seed,
    })
}
