//! End-to-end driver behavior on small built-in problems: termination
//! certificates, oracle-tally contracts, branch selection, determinism, and
//! the local-minimax refinement.

use minimax_cubic::drivers::{
    imcn_run, k_prime_for, mcn_run, refine_local_minimax, Algorithm, SolverConfig, SubsolverKind,
    TerminationReason, IMCN_C_H,
};
use minimax_cubic::problem::{
    derive_constants, make_quadratic_problem, ClosedForms, MinimaxProblem,
};
use minimax_cubic::verify::check_stationarity;
use nalgebra::{DMatrix, DVector};

fn quadratic() -> (MinimaxProblem, ClosedForms) {
    let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
    let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
    let c = DMatrix::from_row_slice(2, 2, &[1.5, 0.2, 0.2, 2.0]);
    let av = DVector::from_row_slice(&[0.3, -0.1]);
    let bv = DVector::from_row_slice(&[-0.2, 0.4]);
    make_quadratic_problem(&a, &b, &c, &av, &bv, 1.0).unwrap()
}

/// Wide-but-flat quadratic whose Cauchy threshold `L^2 / M` is tiny, so the
/// first iterations of the inexact method must take the Cauchy branch.
fn flat_quadratic() -> (MinimaxProblem, ClosedForms) {
    let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]);
    let b = DMatrix::from_row_slice(2, 2, &[0.25, 0.0, 0.0, 0.25]);
    let c = DMatrix::identity(2, 2);
    make_quadratic_problem(&a, &b, &c, &DVector::zeros(2), &DVector::zeros(2), 40.0).unwrap()
}

#[test]
fn mcn_terminates_with_a_small_step_certificate() {
    let (p, forms) = quadratic();
    let x0 = DVector::from_row_slice(&[2.0, -1.5]);
    let mut cfg = SolverConfig::new(1e-5);
    cfg.p_star = forms.p_star();
    let res = mcn_run(&p, &x0, &cfg, Some(&forms)).unwrap();

    assert_eq!(res.algorithm, Algorithm::Mcn);
    assert_eq!(res.reason, TerminationReason::SmallStep);
    let bound = res.outer_bound.expect("p_star makes the bound computable");
    assert!(res.iterations <= bound, "{} > {bound}", res.iterations);

    // The certificate: the terminal step is short at the rescaled target.
    let big_m = derive_constants(&p).hess_lip;
    let eps_prime = cfg.eps * (2.0_f64).powf(-2.5);
    let last = res.records.last().unwrap();
    assert!(last.step_norm <= 0.5 * (eps_prime / big_m).sqrt());

    // And it lands where it should: near x* and second-order stationary.
    let x_star = forms.x_star().unwrap();
    assert!((&res.x_hat - x_star).norm() < 1e-3);
    let report = check_stationarity(&p, &res.x_hat, cfg.eps, res.second_order_target).unwrap();
    assert!(report.fsp_pass, "grad {}", report.grad_p_norm);
    assert!(report.ssp_pass);

    // Closed-form primal logging, monotone along the run.
    assert!(res.records.iter().all(|r| !r.primal_is_estimate));
    let primals: Vec<f64> = res
        .records
        .iter()
        .map(|r| r.primal_value.unwrap())
        .collect();
    assert!(primals.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    assert!(primals.last().unwrap() >= &forms.p_star().unwrap());
}

#[test]
fn mcn_oracle_tally_contract() {
    let (p, forms) = quadratic();
    let x0 = DVector::from_row_slice(&[1.0, 1.0]);
    let mut cfg = SolverConfig::new(1e-4);
    // Fixed y0 bound: no measurement call, so the tally is exact.
    cfg.y0_radius_estimate = Some(2.0);
    let res = mcn_run(&p, &x0, &cfg, Some(&forms)).unwrap();

    let agd_grads: u64 = res.records.iter().map(|r| r.k_t as u64).sum();
    let outer_grads = res.iterations as u64;
    assert_eq!(res.counters.n_grad, agd_grads + outer_grads);
    assert_eq!(res.counters.n_hess, res.iterations as u64);
    assert_eq!(res.counters.n_hvp, 0);
    assert_eq!(res.counters.n_value, 0);

    // Without the estimate the only extra call is one grad_y at the origin.
    let fork = p.fork_counters();
    let mut cfg2 = SolverConfig::new(1e-4);
    cfg2.y0_radius_estimate = None;
    let res2 = mcn_run(&fork, &x0, &cfg2, Some(&forms)).unwrap();
    let agd2: u64 = res2.records.iter().map(|r| r.k_t as u64).sum();
    assert_eq!(res2.counters.n_grad, 1 + agd2 + res2.iterations as u64);
}

#[test]
fn mcn_respects_the_iteration_cap() {
    let (p, forms) = quadratic();
    let x0 = DVector::from_row_slice(&[30.0, -40.0]);
    let mut cfg = SolverConfig::new(1e-12);
    cfg.t_max = 2;
    let res = mcn_run(&p, &x0, &cfg, Some(&forms)).unwrap();
    assert_eq!(res.reason, TerminationReason::IterationCap);
    assert_eq!(res.iterations, 2);
}

#[test]
fn mcn_flags_estimated_primal_logging_without_closed_forms() {
    let (p, _) = quadratic();
    let x0 = DVector::from_row_slice(&[0.5, 0.5]);
    let cfg = SolverConfig::new(1e-4);
    let res = mcn_run(&p, &x0, &cfg, None).unwrap();
    let first = &res.records[0];
    assert!(first.primal_value.is_some());
    assert!(first.primal_is_estimate);
    // Instrumentation runs on a forked handle: the run's own tally stays
    // the pure algorithm cost (grads from AGD + one per outer iteration
    // + the y0 measurement).
    let agd: u64 = res.records.iter().map(|r| r.k_t as u64).sum();
    assert_eq!(res.counters.n_grad, 1 + agd + res.iterations as u64);
}

#[test]
fn imcn_is_matrix_free_and_tallies_hvps_exactly() {
    let (p, forms) = quadratic();
    let x0 = DVector::from_row_slice(&[2.0, -1.5]);
    let mut cfg = SolverConfig::new(1e-3);
    cfg.p_star = forms.p_star();
    cfg.y0_radius_estimate = Some(3.0);
    cfg.subsolver_iter_cap = Some(800);
    let res = imcn_run(&p, &x0, &cfg, Some(&forms)).unwrap();

    assert_eq!(res.algorithm, Algorithm::Imcn);
    assert_eq!(res.counters.n_hess, 0, "inexact path must never assemble H");
    assert_eq!(res.reason, TerminationReason::SmallModelDecrease);
    assert!(res.final_step_norm.is_some());

    // Exact hvp tally: every Hessian apply costs K' + 3 hvp calls.
    let k_prime = k_prime_for(cfg.eps, IMCN_C_H, p.ell(), p.mu(), p.rho()).unwrap();
    let per_apply = k_prime as u64 + 3;
    let applies: u64 = res
        .records
        .iter()
        .map(|r| match r.subsolver {
            SubsolverKind::GradientDescent => r.inner_iterations + 1,
            SubsolverKind::Cauchy => 1,
            SubsolverKind::Exact => unreachable!("inexact run"),
        })
        .sum::<u64>()
        + res.final_refine_iterations.unwrap();
    assert_eq!(res.counters.n_hvp, applies * per_apply);

    // First-order stationarity holds at the output.
    let report = check_stationarity(&p, &res.x_hat, cfg.eps, res.second_order_target).unwrap();
    assert!(report.fsp_pass, "grad {}", report.grad_p_norm);
}

#[test]
fn imcn_is_deterministic_for_a_fixed_seed() {
    let (p, forms) = quadratic();
    let x0 = DVector::from_row_slice(&[1.3, 0.7]);
    let mut cfg = SolverConfig::new(1e-3);
    cfg.rng_seed = 12345;
    cfg.subsolver_iter_cap = Some(300);
    let r1 = imcn_run(&p.fork_counters(), &x0, &cfg, Some(&forms)).unwrap();
    let r2 = imcn_run(&p.fork_counters(), &x0, &cfg, Some(&forms)).unwrap();

    assert_eq!(r1.x_hat, r2.x_hat, "bitwise-identical output");
    let t1 = serde_json::to_string(&r1.records).unwrap();
    let t2 = serde_json::to_string(&r2.records).unwrap();
    assert_eq!(t1, t2, "byte-identical traces");

    // A different seed perturbs differently (the subsolver is randomized).
    let mut cfg3 = cfg.clone();
    cfg3.rng_seed = 6;
    let r3 = imcn_run(&p.fork_counters(), &x0, &cfg3, Some(&forms)).unwrap();
    assert_ne!(r1.x_hat, r3.x_hat);
}

#[test]
fn imcn_takes_the_cauchy_branch_on_large_gradients() {
    let (p, forms) = flat_quadratic();
    let dc = derive_constants(&p);
    let threshold = dc.grad_lip * dc.grad_lip / dc.hess_lip;
    let x0 = DVector::from_row_slice(&[2.0, 2.0]);
    let mut cfg = SolverConfig::new(1e-3);
    cfg.subsolver_iter_cap = Some(400);
    let res = imcn_run(&p, &x0, &cfg, Some(&forms)).unwrap();

    let kinds: Vec<SubsolverKind> = res.records.iter().map(|r| r.subsolver).collect();
    assert!(kinds.contains(&SubsolverKind::Cauchy), "{kinds:?}");
    assert!(kinds.contains(&SubsolverKind::GradientDescent), "{kinds:?}");
    // Branch selection is exactly the gradient-norm test.
    for r in &res.records {
        let expect = if r.grad_norm >= threshold {
            SubsolverKind::Cauchy
        } else {
            SubsolverKind::GradientDescent
        };
        assert_eq!(r.subsolver, expect, "iteration {}", r.t);
    }
}

#[test]
fn refinement_certifies_a_local_minimax_point() {
    let (p, forms) = quadratic();
    let x0 = DVector::from_row_slice(&[2.0, -1.5]);
    let cfg = SolverConfig::new(1e-5);
    let res = mcn_run(&p, &x0, &cfg, Some(&forms)).unwrap();

    let report = refine_local_minimax(&p, &res.x_hat, &res.y_last, 1e-2, 0.5, &cfg).unwrap();
    assert!(report.first_order_pass, "joint grad {}", report.grad_norm);
    assert!(report.second_order_pass, "min eig {}", report.min_eig_schur);
    assert!(report.pass());
    assert!(report.grad_norm <= 1e-2);

    // Tightening the targets beyond what eps supports is rejected.
    let err = refine_local_minimax(&p, &res.x_hat, &res.y_last, 1e-8, 0.5, &cfg);
    assert!(err.is_err());
}

#[test]
fn drivers_reject_bad_inputs() {
    let (p, forms) = quadratic();
    let x0 = DVector::from_row_slice(&[1.0, 1.0]);

    let cfg = SolverConfig::new(0.0);
    assert!(mcn_run(&p, &x0, &cfg, Some(&forms)).is_err());

    let cfg = SolverConfig::new(1e-4);
    assert!(mcn_run(&p, &DVector::zeros(3), &cfg, Some(&forms)).is_err());

    // The inexact method is only defined for eps <= L^2 / M.
    let dc = derive_constants(&p);
    let cfg = SolverConfig::new(2.0 * dc.grad_lip * dc.grad_lip / dc.hess_lip);
    assert!(imcn_run(&p, &x0, &cfg, Some(&forms)).is_err());

    let mut cfg = SolverConfig::new(1e-3);
    cfg.delta = 0.0;
    assert!(imcn_run(&p, &x0, &cfg, Some(&forms)).is_err());
    cfg.delta = 1.0;
    assert!(imcn_run(&p, &x0, &cfg, Some(&forms)).is_err());
}
