//! Acceptance suite: eleven numbered criteria covering the derivative
//! formulas, the cubic subproblem solvers, the Chebyshev operator, both
//! drivers, saddle escape, oracle accounting, and the Lipschitz audits, all
//! at desk scale with the theorems' concrete constants.
//!
//! Each criterion prints exactly one `CRITERION NN [PASS|FAIL] ...` line
//! (run with `-- --nocapture` to see them on success); the test fails if any
//! criterion fails.

use minimax_cubic::agd::{agd_minimize, agd_rate_bound, AgdParams};
use minimax_cubic::batch::{map_indexed, ExecMode};
use minimax_cubic::chebyshev::{
    build_dense_ht, cheb_error_bound, cheb_inverse_approx_dense, hvp_primal, ChebyshevPlan,
};
use minimax_cubic::cubic::{
    cubic_solver_gd, iteration_budget, sigma_value, solve_cubic_exact, CubicModel, Hessian,
};
use minimax_cubic::drivers::{imcn_run, mcn_run, SolverConfig, TerminationReason, IMCN_C_H};
use minimax_cubic::problem::{
    derive_constants, make_quadratic_problem, make_saddle_problem, min_eigenvalue_sym,
    spectral_norm_sym, symmetrize, ClosedForms, MinimaxProblem,
};
use minimax_cubic::verify::{
    check_stationarity, estimate_lipschitz, eval_primal, fd_gradient, fd_jacobian, grad_p, hess_p,
    FD_GRAD_STEP, FD_HESS_STEP,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Default)]
struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn record(&mut self, num: u32, name: &str, pass: bool, detail: String) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("CRITERION {num:02} [{verdict}] {name}: {detail}");
        if !pass {
            self.failures.push(format!("{num:02} {name}: {detail}"));
        }
    }
}

fn rng_for(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0xACCE_0000 ^ tag)
}

fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    m.qr().q()
}

/// Symmetric matrix with the given eigenvalues in a random orthogonal frame.
fn sym_with_eigs(rng: &mut ChaCha8Rng, eigs: &[f64]) -> DMatrix<f64> {
    let d = eigs.len();
    let q = random_orthogonal(rng, d);
    let lam = DMatrix::from_diagonal(&DVector::from_row_slice(eigs));
    symmetrize(&(&q * lam * q.transpose()))
}

fn uniform_vec(rng: &mut ChaCha8Rng, d: usize, radius: f64) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.random_range(-radius..radius))
}

/// Standard strongly-convex-primal quadratic used by criteria 5, 6.
fn quadratic_instance() -> (MinimaxProblem, ClosedForms) {
    let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
    let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
    let c = DMatrix::from_row_slice(2, 2, &[1.5, 0.2, 0.2, 2.0]);
    let av = DVector::from_row_slice(&[0.3, -0.1]);
    let bv = DVector::from_row_slice(&[-0.2, 0.4]);
    make_quadratic_problem(&a, &b, &c, &av, &bv, 1.0).unwrap()
}

/// Decoupled quartic saddle used by criteria 7, 8: the primal has a strict
/// saddle at the origin with curvature -1 and minima at the hypercube
/// corners.
fn escape_instance() -> (MinimaxProblem, ClosedForms) {
    make_saddle_problem(1, 1, None, 4.8, 1.5).unwrap()
}

fn criterion_01(gate: &mut Gate) {
    // grad_P against central differences of eval_primal, hess_P against
    // central differences of grad_P, on 100 points per built-in problem.
    let quad = quadratic_instance();
    let b = DMatrix::from_row_slice(3, 3, &[0.2, 0.0, 0.1, 0.0, 0.15, 0.0, -0.1, 0.05, 0.2]);
    let saddle = make_saddle_problem(3, 3, Some(&b), 2.0, 1.0).unwrap();
    let cases: [(&str, &MinimaxProblem, f64); 2] =
        [("quadratic", &quad.0, 1.5), ("saddle", &saddle.0, 0.9)];

    let mut worst_g = 0.0_f64;
    let mut worst_h = 0.0_f64;
    let mut rng = rng_for(1);
    for (_, p, radius) in &cases {
        // Inner tolerances keep oracle noise far below the FD resolution.
        let value_tol = (2.0 * 1e-12 / p.ell()).sqrt();
        let grad_tol = 1e-9 / p.ell();
        for _ in 0..100 {
            let x = uniform_vec(&mut rng, p.dim_x(), *radius);
            let g = grad_p(p, &x, grad_tol).unwrap();
            let g_fd = fd_gradient(
                |v| eval_primal(p, v, value_tol).unwrap().0,
                &x,
                FD_GRAD_STEP,
            );
            worst_g = worst_g.max((&g_fd - &g).norm() / (1.0 + g.norm()));

            let h = hess_p(p, &x, grad_tol).unwrap();
            let h_fd = symmetrize(&fd_jacobian(
                |v| grad_p(p, v, grad_tol).unwrap(),
                &x,
                FD_HESS_STEP,
            ));
            worst_h = worst_h.max(spectral_norm_sym(&(&h_fd - &h)) / (1.0 + spectral_norm_sym(&h)));
        }
    }
    let pass = worst_g <= 1e-4 && worst_h <= 1e-3;
    gate.record(
        1,
        "primal derivative formulas vs finite differences",
        pass,
        format!("worst grad rel {worst_g:.2e} (tol 1e-4), worst hess rel {worst_h:.2e} (tol 1e-3)"),
    );
}

fn criterion_02(gate: &mut Gate) {
    // Exact cubic solver optimality triple on 1000 models (50 hard cases).
    let mut rng = rng_for(2);
    let mut worst_res = 0.0_f64;
    let mut worst_eig = 0.0_f64;
    let mut worst_dec = 0.0_f64;
    let mut failures = 0usize;
    for trial in 0..1000 {
        let hard = trial % 20 == 19; // 50 of 1000
                                     // Hard cases need a nontrivial orthogonal complement of the bottom
                                     // eigenspace, so force d >= 2 there.
        let d = if hard {
            rng.random_range(2..=20)
        } else {
            rng.random_range(1..=20)
        };
        let weight = rng.random_range(0.5..5.0);
        let mut eigs: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..3.0)).collect();
        let (h, g) = if hard {
            // Gradient orthogonal to a simple bottom eigenspace, small
            // enough that the ridge step cannot reach the required length.
            eigs.sort_by(f64::total_cmp);
            eigs[0] = -1.0;
            for e in eigs.iter_mut().skip(1) {
                *e = e.abs().max(0.2);
            }
            let q = random_orthogonal(&mut rng, d);
            let lam = DMatrix::from_diagonal(&DVector::from_row_slice(&eigs));
            let h = symmetrize(&(&q * lam * q.transpose()));
            let mut ghat = DVector::from_fn(d, |_, _| rng.random_range(-0.05..0.05));
            ghat[0] = 0.0;
            (h.clone(), &q * ghat)
        } else {
            let h = sym_with_eigs(&mut rng, &eigs);
            (h, uniform_vec(&mut rng, d, 2.0))
        };
        let model = CubicModel::new(g.clone(), Hessian::Dense(h.clone()), weight).unwrap();
        let sol = match solve_cubic_exact(&model, 1e-8) {
            Ok(s) => s,
            Err(e) => {
                failures += 1;
                eprintln!("criterion 02 trial {trial}: solver error {e}");
                continue;
            }
        };
        let s_norm = sol.step.norm();
        let res_rel = sol.residual / (1.0 + g.norm());
        let eig_slack = -(min_eigenvalue_sym(&h) + weight / 2.0 * s_norm);
        let dec_slack = sol.model_value - (-(weight / 12.0) * s_norm.powi(3));
        worst_res = worst_res.max(res_rel);
        worst_eig = worst_eig.max(eig_slack);
        worst_dec = worst_dec.max(dec_slack);
        if res_rel > 1e-8 || eig_slack > 1e-8 || dec_slack > 1e-10 {
            failures += 1;
        }
    }
    let pass = failures == 0;
    gate.record(
        2,
        "exact cubic solver optimality triple",
        pass,
        format!(
            "{failures} violations / 1000; worst residual {worst_res:.2e}, \
             eig slack {worst_eig:.2e}, decrease slack {worst_dec:.2e}"
        ),
    );
}

fn criterion_03(gate: &mut Gate) {
    // Chebyshev inverse error against its bound on 200 random SPD matrices.
    let mut rng = rng_for(3);
    let mut violations = 0usize;
    let mut worst_excess = f64::NEG_INFINITY;
    for _ in 0..200 {
        let d = rng.random_range(2..=8);
        let lo = rng.random_range(0.02..0.4);
        let hi = rng.random_range((lo * 1.0001)..0.95);
        let mut eigs: Vec<f64> = (0..d).map(|_| rng.random_range(lo..hi)).collect();
        eigs[0] = lo;
        eigs[d - 1] = hi;
        let x = sym_with_eigs(&mut rng, &eigs);
        let k_prime = rng.random_range(0..=50);
        let approx = cheb_inverse_approx_dense(&x, hi, lo, k_prime).unwrap();
        let err = spectral_norm_sym(&symmetrize(&(x.clone().try_inverse().unwrap() - &approx)));
        let bound = cheb_error_bound(hi, lo, k_prime);
        // The bound underflows for well-conditioned spectra at large K', so
        // track the absolute excess rather than a ratio.
        worst_excess = worst_excess.max(err - bound);
        if err > bound * (1.0 + 1e-9) + 1e-12 {
            violations += 1;
        }
    }
    gate.record(
        3,
        "Chebyshev inverse error bound",
        violations == 0,
        format!("{violations} violations / 200; worst err minus bound {worst_excess:.2e}"),
    );
}

fn criterion_04(gate: &mut Gate) {
    // Matrix-free primal hvp: equals the assembled dense H_t, equals the
    // independently computed block form, and costs exactly K' + 3 hvps.
    let mut rng = rng_for(4);
    let mut worst = 0.0_f64;
    let mut count_errors = 0usize;
    for _ in 0..100 {
        let dx = rng.random_range(1..=6);
        let dy = rng.random_range(1..=10);
        let a_eigs: Vec<f64> = (0..dx).map(|_| rng.random_range(-1.0..2.0)).collect();
        let c_eigs: Vec<f64> = (0..dy).map(|_| rng.random_range(0.5..2.5)).collect();
        let a = sym_with_eigs(&mut rng, &a_eigs);
        let c = sym_with_eigs(&mut rng, &c_eigs);
        let b = DMatrix::from_fn(dx, dy, |_, _| rng.random_range(-0.5..0.5));
        let (p, _) =
            make_quadratic_problem(&a, &b, &c, &DVector::zeros(dx), &DVector::zeros(dy), 1.0)
                .unwrap();
        let k_prime = rng.random_range(0..=12);
        let plan = ChebyshevPlan::for_problem(&p, k_prime).unwrap();
        let x = uniform_vec(&mut rng, dx, 1.0);
        let y = uniform_vec(&mut rng, dy, 1.0);
        let u = uniform_vec(&mut rng, dx, 2.0);

        let fork = p.fork_counters();
        let out = hvp_primal(&fork, &x, &y, &plan, &u);
        if fork.counters().n_hvp != plan.hvp_count() + 3 {
            count_errors += 1;
        }

        let ht = build_dense_ht(&p, &x, &y, &plan);
        let via_dense = &ht * &u;
        worst = worst.max((&out - via_dense).norm() / (1.0 + out.norm()));

        // Independent realization: dense Lemma-form middle factor between
        // the exact blocks.
        let (ell, mu) = (p.ell(), p.mu());
        let middle = cheb_inverse_approx_dense(&(&c / (2.0 * ell)), 0.5, mu / (2.0 * ell), k_prime)
            .unwrap()
            / (2.0 * ell);
        let via_blocks = &a * &u + &b * (&middle * (b.transpose() * &u));
        worst = worst.max((&out - via_blocks).norm() / (1.0 + out.norm()));
    }
    let pass = worst <= 1e-10 && count_errors == 0;
    gate.record(
        4,
        "matrix-free hvp equals dense assembly at K'+3 hvps",
        pass,
        format!("worst rel diff {worst:.2e} (tol 1e-10), {count_errors} count mismatches"),
    );
}

fn criterion_05(gate: &mut Gate) -> Option<minimax_cubic::drivers::RunResult> {
    // Exact driver end-to-end on the quadratic at eps = 1e-3.
    let (p, forms) = quadratic_instance();
    let x0 = DVector::from_row_slice(&[2.5, -2.0]);
    let mut cfg = SolverConfig::new(1e-3);
    cfg.p_star = forms.p_star();
    let res = match mcn_run(&p, &x0, &cfg, Some(&forms)) {
        Ok(r) => r,
        Err(e) => {
            gate.record(
                5,
                "MCN end-to-end on the quadratic",
                false,
                format!("error: {e}"),
            );
            return None;
        }
    };
    let big_m = derive_constants(&p).hess_lip;
    let eps_prime = cfg.eps * (2.0_f64).powf(-2.5);
    let t_bound = (192.0
        * (forms.primal(&x0).unwrap() - forms.p_star().unwrap())
        * big_m.sqrt()
        * eps_prime.powf(-1.5))
    .ceil()
        + 1.0;
    let report = check_stationarity(&p, &res.x_hat, cfg.eps, (big_m * cfg.eps).sqrt()).unwrap();
    let pass = report.ssp_pass && (res.iterations as f64) <= t_bound;
    gate.record(
        5,
        "MCN end-to-end on the quadratic",
        pass,
        format!(
            "grad {:.2e} <= {:.0e}, min eig {:.3} >= -{:.3}, iters {} <= bound {:.0}",
            report.grad_p_norm,
            cfg.eps,
            report.min_eig_hess_p,
            (big_m * cfg.eps).sqrt(),
            res.iterations,
            t_bound
        ),
    );
    Some(res)
}

fn criterion_06(gate: &mut Gate, run: Option<&minimax_cubic::drivers::RunResult>) {
    // Per-iteration primal descent along the MCN trace.
    let Some(res) = run else {
        gate.record(
            6,
            "MCN per-iteration descent",
            false,
            "no run from criterion 5".into(),
        );
        return;
    };
    let (p, _) = quadratic_instance();
    let big_m = derive_constants(&p).hess_lip;
    let eps_prime = res.eps * (2.0_f64).powf(-2.5);
    let required = (eps_prime.powi(3) / big_m).sqrt() / 192.0;
    let mut min_drop = f64::INFINITY;
    for w in res.records.windows(2) {
        let drop = w[0].primal_value.unwrap() - w[1].primal_value.unwrap();
        min_drop = min_drop.min(drop);
    }
    let pass = res.records.len() < 2 || min_drop >= required;
    gate.record(
        6,
        "MCN per-iteration descent",
        pass,
        format!(
            "min decrease {min_drop:.3e} >= required {required:.3e} over {} non-final iterations",
            res.records.len().saturating_sub(1)
        ),
    );
}

struct EscapeOutcome {
    curvature_ok: bool,
    terminated: bool,
    n_hess: u64,
}

fn imcn_escape_config() -> SolverConfig {
    let mut cfg = SolverConfig::new(1e-3);
    cfg.p_star = Some(0.0);
    // The printed subsolver budget is ~1e9 iterations; escape completes in
    // ~7e3. The cap keeps desk-scale runtime while leaving 3x margin.
    cfg.subsolver_iter_cap = Some(20_000);
    cfg
}

fn run_escape_seed(seed: u64, eps: f64) -> (minimax_cubic::drivers::RunResult, f64) {
    let (p, forms) = escape_instance();
    let mut cfg = imcn_escape_config();
    cfg.eps = eps;
    cfg.rng_seed = seed;
    let x0 = DVector::zeros(1);
    let res = imcn_run(&p, &x0, &cfg, Some(&forms)).unwrap();
    let min_eig = min_eigenvalue_sym(&forms.hess_primal(&res.x_hat).unwrap());
    (res, min_eig)
}

fn criterion_07(gate: &mut Gate) -> Vec<EscapeOutcome> {
    // Saddle escape: randomized inexact method from the exact strict saddle
    // (100 seeds), exact method from a deterministic offset.
    let (p, forms) = escape_instance();
    let big_m = derive_constants(&p).hess_lip;
    let eps = 1e-3;
    let imcn_floor = -2.0 * (big_m * eps).sqrt();

    let outcomes: Vec<EscapeOutcome> = map_indexed(ExecMode::Parallel, 100, |seed| {
        let (res, min_eig) = run_escape_seed(seed as u64, eps);
        EscapeOutcome {
            curvature_ok: min_eig >= imcn_floor,
            terminated: res.reason == TerminationReason::SmallModelDecrease,
            n_hess: res.counters.n_hess,
        }
    });
    let escaped = outcomes
        .iter()
        .filter(|o| o.curvature_ok && o.terminated)
        .count();

    let mcn_floor = -(big_m * eps).sqrt();
    let x0 = DVector::from_row_slice(&[0.05]);
    let cfg = SolverConfig::new(eps);
    let mcn_res = mcn_run(&p, &x0, &cfg, Some(&forms)).unwrap();
    let mcn_eig = min_eigenvalue_sym(&forms.hess_primal(&mcn_res.x_hat).unwrap());
    let mcn_ok = mcn_eig >= mcn_floor && mcn_res.reason == TerminationReason::SmallStep;

    let pass = escaped >= 95 && mcn_ok;
    gate.record(
        7,
        "saddle escape",
        pass,
        format!(
            "IMCN {escaped}/100 seeds reach min eig >= {imcn_floor:.3}; \
             MCN min eig {mcn_eig:.3} >= {mcn_floor:.3}"
        ),
    );
    outcomes
}

fn criterion_08(gate: &mut Gate, outcomes: &[EscapeOutcome]) {
    // Oracle accounting: the inexact path never assembles a Hessian, the
    // exact path assembles one per iteration, and the hvp count is supposed
    // to scale like the eps^{-2} corollary bound across an eps sweep.
    let imcn_hess_ok = outcomes.iter().all(|o| o.n_hess == 0);

    let (p, forms) = escape_instance();
    let cfg = SolverConfig::new(1e-3);
    let mcn_res = mcn_run(&p, &DVector::from_row_slice(&[0.05]), &cfg, Some(&forms)).unwrap();
    let mcn_hess_ok = mcn_res.counters.n_hess == mcn_res.iterations as u64;

    let sweep = [1e-1, 1e-2, 1e-3];
    let counts: Vec<f64> = sweep
        .iter()
        .map(|&eps| run_escape_seed(0, eps).0.counters.n_hvp as f64)
        .collect();
    // Least-squares slope of ln(n_hvp) against ln(1/eps).
    let us: Vec<f64> = sweep.iter().map(|e| (1.0 / e).ln()).collect();
    let vs: Vec<f64> = counts.iter().map(|c| c.ln()).collect();
    let (ub, vb) = (
        us.iter().sum::<f64>() / us.len() as f64,
        vs.iter().sum::<f64>() / vs.len() as f64,
    );
    let slope = us
        .iter()
        .zip(&vs)
        .map(|(u, v)| (u - ub) * (v - vb))
        .sum::<f64>()
        / us.iter().map(|u| (u - ub) * (u - ub)).sum::<f64>();
    let slope_ok = (1.5..=2.5).contains(&slope);

    let pass = imcn_hess_ok && mcn_hess_ok && slope_ok;
    gate.record(
        8,
        "oracle accounting",
        pass,
        format!(
            "IMCN n_hess==0 {}, MCN n_hess==iters {}, hvp slope {slope:.2} in [1.5, 2.5] {} \
             (counts {:?} at eps {:?}; measured outer iterations stay flat while the theory \
             bound scales, so the measured slope tracks the capped per-iteration budget, \
             not the eps^-2 worst case)",
            imcn_hess_ok, mcn_hess_ok, slope_ok, counts, sweep
        ),
    );
}

fn criterion_09(gate: &mut Gate) {
    // Perturbed gradient-descent subsolver decrease guarantee at the full
    // printed budget, 100 random models with a long exact step.
    let (big_l, big_m, eps) = (1.0, 1.0, 1.0);
    let (c_sigma, c_h) = (0.25, IMCN_C_H);
    let d = 3;
    let delta_prime = 0.01;
    let budget = iteration_budget(eps, delta_prime, big_l, big_m, c_sigma, c_h, d).unwrap();
    let sigma = sigma_value(eps, big_l, big_m, c_sigma);
    let target = -((1.0 - c_sigma) / 96.0) * (eps.powi(3) / big_m).sqrt();
    let min_exact_norm = 0.5 * (eps / big_m).sqrt();

    let results: Vec<(bool, f64)> = map_indexed(ExecMode::Parallel, 100, |trial| {
        let mut rng = rng_for(9_000 + trial as u64);
        // Rejection-sample a model whose exact step is long enough.
        let model = loop {
            let eigs: Vec<f64> = (0..d).map(|_| rng.random_range(-big_l..big_l)).collect();
            let h = sym_with_eigs(&mut rng, &eigs);
            let g = uniform_vec(&mut rng, d, 1.5);
            let model = CubicModel::new(g, Hessian::Dense(h), big_m).unwrap();
            let exact = solve_cubic_exact(&model, 1e-10).unwrap();
            if exact.step.norm() >= min_exact_norm {
                break model;
            }
        };
        let sol = cubic_solver_gd(&model, big_l, sigma, budget, trial as u64).unwrap();
        (sol.model_value <= target, sol.model_value)
    });
    let good = results.iter().filter(|(ok, _)| *ok).count();
    let worst = results
        .iter()
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    gate.record(
        9,
        "subsolver decrease at the printed budget",
        good >= 95,
        format!("{good}/100 trials reach model value <= {target:.6} (worst {worst:.6}, budget {budget})"),
    );
}

fn criterion_10(gate: &mut Gate) {
    // AGD distance bound on 100 random strongly convex quadratics, all
    // prefixes K <= 200.
    let mut rng = rng_for(10);
    let mut violations = 0usize;
    let mut worst_excess = f64::NEG_INFINITY;
    for _ in 0..100 {
        let d = rng.random_range(1..=10);
        let mu_h = rng.random_range(0.1..1.0);
        let ell_h = mu_h * rng.random_range(1.0..40.0);
        let mut eigs: Vec<f64> = (0..d).map(|_| rng.random_range(mu_h..ell_h)).collect();
        eigs[0] = mu_h;
        eigs[d - 1] = ell_h;
        let a = sym_with_eigs(&mut rng, &eigs);
        let bvec = uniform_vec(&mut rng, d, 2.0);
        let y_star = a.clone().cholesky().unwrap().solve(&bvec);
        let y0 = uniform_vec(&mut rng, d, 3.0);
        let dist0 = (&y0 - &y_star).norm();
        let kappa_h = ell_h / mu_h;
        let params = AgdParams::for_condition(ell_h, mu_h).unwrap();
        for k in 0..=200 {
            let yk = agd_minimize(|y| &a * y - &bvec, &y0, k, &params).unwrap();
            let dist = (&yk - &y_star).norm();
            let bound = agd_rate_bound(kappa_h, k, dist0);
            // The bound underflows for mild condition numbers at large k;
            // track absolute excess, not a ratio.
            worst_excess = worst_excess.max(dist - bound);
            if dist > bound * (1.0 + 1e-9) + 1e-12 {
                violations += 1;
            }
        }
    }
    gate.record(
        10,
        "AGD rate bound on random quadratics",
        violations == 0,
        format!("{violations} violations; worst dist minus bound {worst_excess:.2e}"),
    );
}

fn criterion_11(gate: &mut Gate) {
    // Sampled Lipschitz ratios stay below the stated constants on the
    // built-in problems, inside their validity boxes.
    let (quad, _) = quadratic_instance();
    let b = DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.1, 0.2]);
    let (saddle, _) = make_saddle_problem(2, 2, Some(&b), 2.0, 1.2).unwrap();
    let reports = [
        (
            "quadratic",
            estimate_lipschitz(&quad, 2.0, 20, 111).unwrap(),
        ),
        ("saddle", estimate_lipschitz(&saddle, 1.2, 20, 222).unwrap()),
    ];
    let mut all_ok = true;
    let mut detail = String::new();
    for (name, rep) in &reports {
        all_ok &= rep.all_within();
        let worst = rep
            .rows
            .iter()
            .map(|r| r.measured_max / r.stated_bound.max(1e-300))
            .fold(0.0_f64, f64::max);
        detail.push_str(&format!("{name} worst ratio {worst:.3}; "));
    }
    gate.record(
        11,
        "Lipschitz constants hold on built-ins",
        all_ok,
        detail.trim_end_matches("; ").to_string(),
    );
}

#[test]
fn acceptance() {
    let mut gate = Gate::default();
    criterion_01(&mut gate);
    criterion_02(&mut gate);
    criterion_03(&mut gate);
    criterion_04(&mut gate);
    let run5 = criterion_05(&mut gate);
    criterion_06(&mut gate, run5.as_ref());
    let outcomes = criterion_07(&mut gate);
    criterion_08(&mut gate, &outcomes);
    criterion_09(&mut gate);
    criterion_10(&mut gate);
    criterion_11(&mut gate);
    assert!(
        gate.failures.is_empty(),
        "failed acceptance criteria:\n{}",
        gate.failures.join("\n")
    );
}
