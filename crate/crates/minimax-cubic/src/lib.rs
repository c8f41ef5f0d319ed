//! Cubic-regularized Newton methods for smooth minimax problems
//! `min_x max_y f(x, y)` that are nonconvex in `x` and strongly concave
//! in `y`.
//!
//! The object being minimized is the primal `P(x) = max_y f(x, y)`. Under
//! `ell`-smoothness, `mu`-strong concavity in `y`, and `rho`-Lipschitz
//! Hessians, `P` inherits smoothness with constants `L = 2 kappa ell` and
//! `M = 4 sqrt(2) kappa^3 rho` (`kappa = ell / mu`), which is exactly what
//! cubic regularization needs to find second-order stationary points and
//! escape the strict saddles where plain gradient methods stall.
//!
//! Two drivers are provided:
//!
//! * [`drivers::mcn_run`]: assembles the primal Hessian as a Schur
//!   complement each iteration and solves the cubic model exactly. Best
//!   when `dim_x`, `dim_y` are small enough to factor.
//! * [`drivers::imcn_run`]: fully matrix-free. Hessian-vector products of
//!   `P` are approximated by a Chebyshev polynomial of the `yy` block
//!   ([`chebyshev`]) and the cubic model is minimized by perturbed gradient
//!   descent, so only gradient and Hessian-vector oracles are touched.
//!
//! Supporting modules: [`problem`] (oracle bundle, counters, built-in test
//! problems), [`agd`] (the accelerated inner maximizer), [`cubic`] (cubic
//! subproblem solvers), [`verify`] (oracle-only stationarity certification
//! and Lipschitz audits), and [`batch`] (parallel batch execution, behind
//! the default-on `parallel` feature).
//!
//! # Example
//!
//! ```
//! use minimax_cubic::drivers::{mcn_run, SolverConfig};
//! use minimax_cubic::problem::make_saddle_problem;
//! use minimax_cubic::verify::check_stationarity;
//! use nalgebra::DVector;
//!
//! // Quartic-coupled saddle in (x, y) with a strict saddle of P at the
//! // origin; the driver must escape it and certify stationarity.
//! let (p, forms) = make_saddle_problem(2, 2, None, 4.8, 3.0).unwrap();
//! let x0 = DVector::from_element(2, 0.6);
//! let cfg = SolverConfig::new(1e-4);
//! let result = mcn_run(&p, &x0, &cfg, Some(&forms)).unwrap();
//! let report = check_stationarity(&p, &result.x_hat, 1e-4, 1.0).unwrap();
//! assert!(report.fsp_pass);
//! ```

pub mod agd;
pub mod batch;
pub mod chebyshev;
pub mod cubic;
pub mod drivers;
pub mod error;
pub mod problem;
pub mod verify;

pub use error::{Error, Result};
