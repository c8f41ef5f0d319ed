//! Problem container for smooth minimax objectives `min_x max_y f(x, y)`.
//!
//! A [`MinimaxProblem`] bundles first- and second-order oracles for an
//! `ell`-smooth, `mu`-strongly-concave-in-`y` objective with `rho`-Lipschitz
//! Hessian, together with atomic call counters. The primal function is
//! `P(x) = max_y f(x, y)`; under strong concavity the maximizer `y*(x)` is
//! unique and `kappa = ell / mu`-Lipschitz, and
//!
//! ```text
//! grad P(x)  = grad_x f(x, y*(x))
//! hess P(x)  = [xx] - [xy] [yy]^{-1} [yx]     (Schur complement at (x, y*(x)))
//! ```
//!
//! Two built-in families cover the test surface: a quadratic saddle
//! (closed forms for everything) and a separable quartic-coupling family
//! whose primal has strict saddle points.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts of oracle calls, updated atomically so cloned handles and parallel
/// callers all tally into the same totals.
#[derive(Debug, Default)]
pub struct OracleCounters {
    n_value: AtomicU64,
    n_grad: AtomicU64,
    n_hvp: AtomicU64,
    n_hess: AtomicU64,
}

/// A point-in-time copy of [`OracleCounters`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterSnapshot {
    /// Objective value evaluations.
    pub n_value: u64,
    /// Gradient evaluations (`grad_x` and `grad_y` each count one).
    pub n_grad: u64,
    /// Hessian-vector products (any block).
    pub n_hvp: u64,
    /// Dense Hessian block assemblies.
    pub n_hess: u64,
}

impl OracleCounters {
    fn snapshot(&self) -> CounterSnapshot {
        CounterSnapshot {
            n_value: self.n_value.load(Ordering::Relaxed),
            n_grad: self.n_grad.load(Ordering::Relaxed),
            n_hvp: self.n_hvp.load(Ordering::Relaxed),
            n_hess: self.n_hess.load(Ordering::Relaxed),
        }
    }
}

/// Dense second-order blocks of `f` at a point. `yy` is the Hessian in `y`
/// (negative definite for a strongly concave objective), not its negation.
#[derive(Clone, Debug)]
pub struct HessBlocks {
    pub xx: DMatrix<f64>,
    pub xy: DMatrix<f64>,
    pub yy: DMatrix<f64>,
}

impl HessBlocks {
    /// Stacks the blocks into the full symmetric `(dx+dy) x (dx+dy)` Hessian.
    pub fn assemble_full(&self) -> DMatrix<f64> {
        let (dx, dy) = (self.xx.nrows(), self.yy.nrows());
        let mut full = DMatrix::zeros(dx + dy, dx + dy);
        full.view_mut((0, 0), (dx, dx)).copy_from(&self.xx);
        full.view_mut((0, dx), (dx, dy)).copy_from(&self.xy);
        full.view_mut((dx, 0), (dy, dx))
            .copy_from(&self.xy.transpose());
        full.view_mut((dx, dx), (dy, dy)).copy_from(&self.yy);
        full
    }
}

/// Schur complement `xx - xy * yy^{-1} * yx` computed through a Cholesky
/// factorization of `-yy` and triangular solves; no explicit inverse.
///
/// With `C = -yy = L L^T` and `Z = L^{-1} yx` this is `xx + Z^T Z`, which is
/// symmetric by construction up to rounding (the result is re-symmetrized).
pub fn schur_complement(blocks: &HessBlocks) -> Result<DMatrix<f64>> {
    let c = symmetrize(&(-&blocks.yy));
    let chol = nalgebra::Cholesky::new(c).ok_or_else(|| Error::NotPositiveDefinite {
        arg: "-hess_yy",
        msg: "Cholesky failed; the objective is not strongly concave here".into(),
    })?;
    let yx = blocks.xy.transpose();
    let z = chol
        .l()
        .solve_lower_triangular(&yx)
        .ok_or_else(|| Error::NotPositiveDefinite {
            arg: "-hess_yy",
            msg: "singular triangular factor".into(),
        })?;
    Ok(symmetrize(&(&blocks.xx + z.transpose() * z)))
}

/// `(m + m^T) / 2`, guarding eigensolvers against asymmetric rounding noise.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Spectral norm of a symmetric matrix (largest absolute eigenvalue).
pub fn spectral_norm_sym(m: &DMatrix<f64>) -> f64 {
    symmetrize(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, &v| acc.max(v.abs()))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue_sym(m: &DMatrix<f64>) -> f64 {
    symmetrize(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, &v| acc.min(v))
}

type ValueFn = dyn Fn(&DVector<f64>, &DVector<f64>) -> f64 + Send + Sync;
type GradFn = dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync;
type HvpFn = dyn Fn(&DVector<f64>, &DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync;
type HessFn = dyn Fn(&DVector<f64>, &DVector<f64>) -> HessBlocks + Send + Sync;

/// Raw oracle closures for an objective `f(x, y)`.
///
/// Hessian-vector products follow the convention
/// `hvp_ab(x, y, v) = (d^2 f / da db) v`, so `hvp_xy` maps a `dim_y` vector to
/// a `dim_x` vector and `hvp_yx` is its adjoint.
pub struct Oracles {
    pub value: Box<ValueFn>,
    pub grad_x: Box<GradFn>,
    pub grad_y: Box<GradFn>,
    pub hvp_xx: Box<HvpFn>,
    pub hvp_xy: Box<HvpFn>,
    pub hvp_yx: Box<HvpFn>,
    pub hvp_yy: Box<HvpFn>,
    pub hess_blocks: Box<HessFn>,
}

/// A smooth minimax problem with declared smoothness constants and counted
/// oracle access.
///
/// Cloning is cheap and shares both the oracles and the counters; use
/// [`MinimaxProblem::fork_counters`] to get a handle whose calls do not
/// pollute the original tally (instrumentation, verification).
#[derive(Clone)]
pub struct MinimaxProblem {
    dim_x: usize,
    dim_y: usize,
    ell: f64,
    mu: f64,
    rho: f64,
    box_radius: f64,
    oracles: Arc<Oracles>,
    counters: Arc<OracleCounters>,
}

impl fmt::Debug for MinimaxProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MinimaxProblem")
            .field("dim_x", &self.dim_x)
            .field("dim_y", &self.dim_y)
            .field("ell", &self.ell)
            .field("mu", &self.mu)
            .field("rho", &self.rho)
            .field("box_radius", &self.box_radius)
            .finish()
    }
}

impl MinimaxProblem {
    /// Wraps oracles with declared constants.
    ///
    /// # Arguments
    /// * `ell` - joint gradient Lipschitz constant of `f`
    /// * `mu` - strong concavity modulus in `y` (`0 < mu <= ell`)
    /// * `rho` - Lipschitz constant of the full Hessian of `f`
    /// * `box_radius` - radius of the region where the constants are declared
    ///   valid (`f64::INFINITY` for globally valid constants)
    pub fn new(
        dim_x: usize,
        dim_y: usize,
        ell: f64,
        mu: f64,
        rho: f64,
        box_radius: f64,
        oracles: Oracles,
    ) -> Result<Self> {
        if dim_x == 0 || dim_y == 0 {
            return Err(Error::InvalidArgument {
                arg: "dim",
                msg: format!("dimensions must be positive, got ({dim_x}, {dim_y})"),
            });
        }
        if !(mu.is_finite() && ell.is_finite() && mu > 0.0 && ell >= mu) {
            return Err(Error::InvalidConstants(format!(
                "need 0 < mu <= ell, got mu = {mu}, ell = {ell}"
            )));
        }
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::InvalidConstants(format!("need rho > 0, got {rho}")));
        }
        if !(box_radius > 0.0) {
            return Err(Error::InvalidConstants(format!(
                "need box_radius > 0, got {box_radius}"
            )));
        }
        Ok(Self {
            dim_x,
            dim_y,
            ell,
            mu,
            rho,
            box_radius,
            oracles: Arc::new(oracles),
            counters: Arc::new(OracleCounters::default()),
        })
    }

    pub fn dim_x(&self) -> usize {
        self.dim_x
    }

    pub fn dim_y(&self) -> usize {
        self.dim_y
    }

    /// Joint gradient Lipschitz constant of `f`.
    pub fn ell(&self) -> f64 {
        self.ell
    }

    /// Strong concavity modulus in `y`.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Hessian Lipschitz constant of `f`.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Condition number `ell / mu`.
    pub fn kappa(&self) -> f64 {
        self.ell / self.mu
    }

    /// Radius of the `x`-region where the declared constants hold.
    pub fn box_radius(&self) -> f64 {
        self.box_radius
    }

    /// Current oracle-call tallies.
    pub fn counters(&self) -> CounterSnapshot {
        self.counters.snapshot()
    }

    /// A handle sharing the oracles but with fresh, zeroed counters.
    pub fn fork_counters(&self) -> Self {
        Self {
            counters: Arc::new(OracleCounters::default()),
            ..self.clone()
        }
    }

    fn check_dims(&self, x: &DVector<f64>, y: &DVector<f64>) {
        assert_eq!(x.len(), self.dim_x, "x has wrong dimension");
        assert_eq!(y.len(), self.dim_y, "y has wrong dimension");
    }

    pub fn value(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.check_dims(x, y);
        self.counters.n_value.fetch_add(1, Ordering::Relaxed);
        (self.oracles.value)(x, y)
    }

    pub fn grad_x(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        self.check_dims(x, y);
        self.counters.n_grad.fetch_add(1, Ordering::Relaxed);
        (self.oracles.grad_x)(x, y)
    }

    pub fn grad_y(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        self.check_dims(x, y);
        self.counters.n_grad.fetch_add(1, Ordering::Relaxed);
        (self.oracles.grad_y)(x, y)
    }

    pub fn hvp_xx(&self, x: &DVector<f64>, y: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.check_dims(x, y);
        assert_eq!(v.len(), self.dim_x, "v has wrong dimension for hvp_xx");
        self.counters.n_hvp.fetch_add(1, Ordering::Relaxed);
        (self.oracles.hvp_xx)(x, y, v)
    }

    pub fn hvp_xy(&self, x: &DVector<f64>, y: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.check_dims(x, y);
        assert_eq!(v.len(), self.dim_y, "v has wrong dimension for hvp_xy");
        self.counters.n_hvp.fetch_add(1, Ordering::Relaxed);
        (self.oracles.hvp_xy)(x, y, v)
    }

    pub fn hvp_yx(&self, x: &DVector<f64>, y: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.check_dims(x, y);
        assert_eq!(v.len(), self.dim_x, "v has wrong dimension for hvp_yx");
        self.counters.n_hvp.fetch_add(1, Ordering::Relaxed);
        (self.oracles.hvp_yx)(x, y, v)
    }

    pub fn hvp_yy(&self, x: &DVector<f64>, y: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.check_dims(x, y);
        assert_eq!(v.len(), self.dim_y, "v has wrong dimension for hvp_yy");
        self.counters.n_hvp.fetch_add(1, Ordering::Relaxed);
        (self.oracles.hvp_yy)(x, y, v)
    }

    pub fn hess_blocks(&self, x: &DVector<f64>, y: &DVector<f64>) -> HessBlocks {
        self.check_dims(x, y);
        self.counters.n_hess.fetch_add(1, Ordering::Relaxed);
        (self.oracles.hess_blocks)(x, y)
    }
}

/// Constants the cubic-Newton analysis derives from `(ell, mu, rho)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DerivedConstants {
    /// Condition number `kappa = ell / mu`.
    pub kappa: f64,
    /// Gradient Lipschitz surrogate for the primal: `L = 2 kappa ell`
    /// (an upper bound on the exact `(kappa + 1) ell`).
    pub grad_lip: f64,
    /// Hessian Lipschitz constant of the primal: `M = 4 sqrt(2) kappa^3 rho`.
    pub hess_lip: f64,
}

/// Derives `(kappa, L, M)` for a problem's primal function.
pub fn derive_constants(p: &MinimaxProblem) -> DerivedConstants {
    let kappa = p.kappa();
    DerivedConstants {
        kappa,
        grad_lip: 2.0 * kappa * p.ell(),
        hess_lip: 4.0 * std::f64::consts::SQRT_2 * kappa.powi(3) * p.rho(),
    }
}

type PointMap = Box<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
type ScalarMap = Box<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
type MatrixMap = Box<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// Analytic ground truth attached to built-in problems. Every field is
/// optional; absent entries mean no closed form is known for that instance.
#[derive(Default)]
pub struct ClosedForms {
    y_star: Option<PointMap>,
    primal: Option<ScalarMap>,
    grad_primal: Option<PointMap>,
    hess_primal: Option<MatrixMap>,
    p_star: Option<f64>,
    x_star: Option<DVector<f64>>,
    strict_saddle: Option<DVector<f64>>,
}

impl fmt::Debug for ClosedForms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosedForms")
            .field("y_star", &self.y_star.is_some())
            .field("primal", &self.primal.is_some())
            .field("grad_primal", &self.grad_primal.is_some())
            .field("hess_primal", &self.hess_primal.is_some())
            .field("p_star", &self.p_star)
            .field("x_star", &self.x_star)
            .field("strict_saddle", &self.strict_saddle)
            .finish()
    }
}

impl ClosedForms {
    /// Exact maximizer `y*(x)`.
    pub fn y_star(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        self.y_star.as_ref().map(|f| f(x))
    }

    /// Exact primal value `P(x)`.
    pub fn primal(&self, x: &DVector<f64>) -> Option<f64> {
        self.primal.as_ref().map(|f| f(x))
    }

    /// Exact primal gradient.
    pub fn grad_primal(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        self.grad_primal.as_ref().map(|f| f(x))
    }

    /// Exact primal Hessian.
    pub fn hess_primal(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.hess_primal.as_ref().map(|f| f(x))
    }

    /// Global primal minimum value, when known.
    pub fn p_star(&self) -> Option<f64> {
        self.p_star
    }

    /// Global primal minimizer, when known and unique.
    pub fn x_star(&self) -> Option<&DVector<f64>> {
        self.x_star.as_ref()
    }

    /// A strict saddle point of the primal, when one is known.
    pub fn strict_saddle(&self) -> Option<&DVector<f64>> {
        self.strict_saddle.as_ref()
    }
}

fn require_square(m: &DMatrix<f64>, arg: &'static str, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimMismatch {
            arg,
            expected: n,
            got: m.nrows().max(m.ncols()),
        });
    }
    Ok(())
}

fn require_symmetric(m: &DMatrix<f64>, arg: &'static str) -> Result<()> {
    let scale = 1.0 + m.norm();
    if (m - m.transpose()).norm() > 1e-10 * scale {
        return Err(Error::InvalidArgument {
            arg,
            msg: "matrix must be symmetric".into(),
        });
    }
    Ok(())
}

/// Tiny relative slack applied to measured extremal eigenvalues so the
/// declared `(ell, mu)` hold despite eigensolver rounding.
const CONSTANT_HEADROOM: f64 = 1e-12;

/// Builds the quadratic minimax problem
///
/// ```text
/// f(x, y) = 1/2 x^T A x + a^T x + x^T B y - 1/2 y^T C y + b^T y
/// ```
///
/// with `A` symmetric and `C` symmetric positive definite. The constants are
/// measured exactly: `mu = lambda_min(C)`, `ell` the spectral norm of the
/// full Hessian `[[A, B], [B^T, -C]]`; `rho` is a free declaration because
/// the true Hessian is constant (any `rho > 0` is valid).
///
/// Closed forms: `y*(x) = C^{-1}(B^T x + b)`,
/// `P(x) = 1/2 x^T Q x + q^T x + 1/2 b^T C^{-1} b` with
/// `Q = A + B C^{-1} B^T`, `q = a + B C^{-1} b`; `x*` and `P*` are attached
/// when `Q` is positive definite.
pub fn make_quadratic_problem(
    a_mat: &DMatrix<f64>,
    b_mat: &DMatrix<f64>,
    c_mat: &DMatrix<f64>,
    a_vec: &DVector<f64>,
    b_vec: &DVector<f64>,
    rho: f64,
) -> Result<(MinimaxProblem, ClosedForms)> {
    let dx = a_mat.nrows();
    let dy = c_mat.nrows();
    require_square(a_mat, "a_mat", dx)?;
    require_square(c_mat, "c_mat", dy)?;
    if b_mat.nrows() != dx || b_mat.ncols() != dy {
        return Err(Error::DimMismatch {
            arg: "b_mat",
            expected: dx,
            got: b_mat.nrows(),
        });
    }
    if a_vec.len() != dx {
        return Err(Error::DimMismatch {
            arg: "a_vec",
            expected: dx,
            got: a_vec.len(),
        });
    }
    if b_vec.len() != dy {
        return Err(Error::DimMismatch {
            arg: "b_vec",
            expected: dy,
            got: b_vec.len(),
        });
    }
    require_symmetric(a_mat, "a_mat")?;
    require_symmetric(c_mat, "c_mat")?;

    let a = Arc::new(symmetrize(a_mat));
    let b = Arc::new(b_mat.clone());
    let c = Arc::new(symmetrize(c_mat));
    let a_lin = Arc::new(a_vec.clone());
    let b_lin = Arc::new(b_vec.clone());

    let c_min = min_eigenvalue_sym(&c);
    if c_min <= 0.0 {
        return Err(Error::NotPositiveDefinite {
            arg: "c_mat",
            msg: format!("smallest eigenvalue {c_min:.3e} is not positive"),
        });
    }
    let blocks = HessBlocks {
        xx: (*a).clone(),
        xy: (*b).clone(),
        yy: -(*c).clone(),
    };
    let ell = spectral_norm_sym(&blocks.assemble_full()) * (1.0 + CONSTANT_HEADROOM);
    let mu = c_min * (1.0 - CONSTANT_HEADROOM);

    let chol_c =
        nalgebra::Cholesky::new((*c).clone()).ok_or_else(|| Error::NotPositiveDefinite {
            arg: "c_mat",
            msg: "Cholesky failed".into(),
        })?;
    let c_inv_bt = chol_c.solve(&b.transpose());
    let c_inv_b_vec = chol_c.solve(&*b_lin);
    let q_mat = Arc::new(symmetrize(&(&*a + &*b * &c_inv_bt)));
    let q_lin = Arc::new(&*a_lin + &*b * &c_inv_b_vec);
    let p_const = 0.5 * b_lin.dot(&c_inv_b_vec);

    let oracles = {
        let (a1, b1, c1, av1, bv1) = (
            a.clone(),
            b.clone(),
            c.clone(),
            a_lin.clone(),
            b_lin.clone(),
        );
        let (a2, b2, av2) = (a.clone(), b.clone(), a_lin.clone());
        let (b3, c3, bv3) = (b.clone(), c.clone(), b_lin.clone());
        let a4 = a.clone();
        let b5 = b.clone();
        let b6 = b.clone();
        let c7 = c.clone();
        let (a8, b8, c8) = (a.clone(), b.clone(), c.clone());
        Oracles {
            value: Box::new(move |x, y| {
                0.5 * x.dot(&(&*a1 * x)) + av1.dot(x) + x.dot(&(&*b1 * y))
                    - 0.5 * y.dot(&(&*c1 * y))
                    + bv1.dot(y)
            }),
            grad_x: Box::new(move |x, y| &*a2 * x + &*av2 + &*b2 * y),
            grad_y: Box::new(move |x, y| b3.transpose() * x - &*c3 * y + &*bv3),
            hvp_xx: Box::new(move |_x, _y, v| &*a4 * v),
            hvp_xy: Box::new(move |_x, _y, v| &*b5 * v),
            hvp_yx: Box::new(move |_x, _y, v| b6.transpose() * v),
            hvp_yy: Box::new(move |_x, _y, v| -(&*c7 * v)),
            hess_blocks: Box::new(move |_x, _y| HessBlocks {
                xx: (*a8).clone(),
                xy: (*b8).clone(),
                yy: -(*c8).clone(),
            }),
        }
    };

    let problem = MinimaxProblem::new(dx, dy, ell, mu, rho, f64::INFINITY, oracles)?;

    let x_star = nalgebra::Cholesky::new((*q_mat).clone()).map(|ch| -ch.solve(&*q_lin));
    let p_star = x_star
        .as_ref()
        .map(|xs| 0.5 * xs.dot(&(&*q_mat * xs)) + q_lin.dot(xs) + p_const);

    let forms = {
        let (b_y, bv_y) = (b.clone(), b_lin.clone());
        let chol_y = Arc::new(chol_c);
        let (q_p, ql_p) = (q_mat.clone(), q_lin.clone());
        let (q_g, ql_g) = (q_mat.clone(), q_lin.clone());
        let q_h = q_mat.clone();
        ClosedForms {
            y_star: Some(Box::new(move |x| {
                chol_y.solve(&(b_y.transpose() * x + &*bv_y))
            })),
            primal: Some(Box::new(move |x| {
                0.5 * x.dot(&(&*q_p * x)) + ql_p.dot(x) + p_const
            })),
            grad_primal: Some(Box::new(move |x| &*q_g * x + &*ql_g)),
            hess_primal: Some(Box::new(move |_x| (*q_h).clone())),
            p_star,
            x_star,
            strict_saddle: None,
        }
    };

    Ok((problem, forms))
}

/// Builds the separable quartic-coupling problem
///
/// ```text
/// f(x, y) = 1/4 sum_i (x_i^2 - 1)^2 + x^T B y - mu/2 ||y||^2
/// ```
///
/// whose primal `P(x) = w(x) + ||B^T x||^2 / (2 mu)` has strict saddle
/// points (the origin, whenever `lambda_min(-I + B B^T / mu) < 0`) next to
/// genuine minima, making it the escape benchmark.
///
/// Constants are declared on the box `||x||_inf <= box_radius`:
/// `ell = max(3 box_radius^2 - 1, 1, mu) + ||B||_2` and `rho = 6 box_radius`.
/// Pass `coupling = None` for `B = 0` (fully separable; `P* = 0` at
/// `x = (+-1, ..., +-1)`).
pub fn make_saddle_problem(
    dim_x: usize,
    dim_y: usize,
    coupling: Option<&DMatrix<f64>>,
    mu: f64,
    box_radius: f64,
) -> Result<(MinimaxProblem, ClosedForms)> {
    if dim_x == 0 || dim_y == 0 {
        return Err(Error::InvalidArgument {
            arg: "dim",
            msg: format!("dimensions must be positive, got ({dim_x}, {dim_y})"),
        });
    }
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::InvalidConstants(format!("need mu > 0, got {mu}")));
    }
    if !(box_radius.is_finite() && box_radius > 0.0) {
        return Err(Error::InvalidConstants(format!(
            "need finite box_radius > 0, got {box_radius}"
        )));
    }
    let b = match coupling {
        Some(m) => {
            if m.nrows() != dim_x || m.ncols() != dim_y {
                return Err(Error::DimMismatch {
                    arg: "coupling",
                    expected: dim_x,
                    got: m.nrows(),
                });
            }
            Arc::new(m.clone())
        }
        None => Arc::new(DMatrix::zeros(dim_x, dim_y)),
    };
    let b_norm = {
        let gram = symmetrize(&(b.transpose() * &*b));
        gram.symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(0.0_f64, |acc, &v| acc.max(v))
            .max(0.0)
            .sqrt()
    };
    // |w''| <= max(1, 3 R^2 - 1) on the box; the full Hessian norm is bounded
    // by the curvature extremes plus the coupling norm.
    let curve = (3.0 * box_radius * box_radius - 1.0).max(1.0);
    let ell = (curve.max(mu) + b_norm) * (1.0 + CONSTANT_HEADROOM);
    let rho = 6.0 * box_radius;

    let oracles = {
        let (b1, b2, b3, b5, b6, b8) = (
            b.clone(),
            b.clone(),
            b.clone(),
            b.clone(),
            b.clone(),
            b.clone(),
        );
        Oracles {
            value: Box::new(move |x, y| {
                let w: f64 = x.iter().map(|&xi| (xi * xi - 1.0).powi(2)).sum::<f64>() * 0.25;
                w + x.dot(&(&*b1 * y)) - 0.5 * mu * y.norm_squared()
            }),
            grad_x: Box::new(move |x, y| {
                DVector::from_fn(x.len(), |i, _| x[i].powi(3) - x[i]) + &*b2 * y
            }),
            grad_y: Box::new(move |x, y| b3.transpose() * x - mu * y),
            hvp_xx: Box::new(move |x, _y, v| {
                DVector::from_fn(v.len(), |i, _| (3.0 * x[i] * x[i] - 1.0) * v[i])
            }),
            hvp_xy: Box::new(move |_x, _y, v| &*b5 * v),
            hvp_yx: Box::new(move |_x, _y, v| b6.transpose() * v),
            hvp_yy: Box::new(move |_x, _y, v| -mu * v),
            hess_blocks: Box::new(move |x, _y| HessBlocks {
                xx: DMatrix::from_diagonal(&DVector::from_fn(x.len(), |i, _| {
                    3.0 * x[i] * x[i] - 1.0
                })),
                xy: (*b8).clone(),
                yy: DMatrix::from_diagonal_element(dim_y, dim_y, -mu),
            }),
        }
    };

    let problem = MinimaxProblem::new(dim_x, dim_y, ell, mu, rho, box_radius, oracles)?;

    let coupling_gram = Arc::new(symmetrize(&(&*b * b.transpose())));
    let origin_curvature = min_eigenvalue_sym(
        &(DMatrix::from_diagonal_element(dim_x, dim_x, -1.0) + &*coupling_gram / mu),
    );
    let is_zero_coupling = b_norm == 0.0;

    let forms = {
        let by = b.clone();
        let bp = b.clone();
        let gram_g = coupling_gram.clone();
        let gram_h = coupling_gram.clone();
        ClosedForms {
            y_star: Some(Box::new(move |x| by.transpose() * x / mu)),
            primal: Some(Box::new(move |x| {
                let w: f64 = x.iter().map(|&xi| (xi * xi - 1.0).powi(2)).sum::<f64>() * 0.25;
                w + (bp.transpose() * x).norm_squared() / (2.0 * mu)
            })),
            grad_primal: Some(Box::new(move |x| {
                DVector::from_fn(x.len(), |i, _| x[i].powi(3) - x[i]) + &*gram_g * x / mu
            })),
            hess_primal: Some(Box::new(move |x| {
                DMatrix::from_diagonal(&DVector::from_fn(x.len(), |i, _| 3.0 * x[i] * x[i] - 1.0))
                    + &*gram_h / mu
            })),
            p_star: if is_zero_coupling { Some(0.0) } else { None },
            x_star: None,
            strict_saddle: if origin_curvature < 0.0 {
                Some(DVector::zeros(dim_x))
            } else {
                None
            },
        }
    };

    Ok((problem, forms))
}
