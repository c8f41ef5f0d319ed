//! Chebyshev-polynomial approximation of SPD inverses, used to apply the
//! primal Hessian (a Schur complement) without ever factoring the `yy`
//! block.
//!
//! For a symmetric `X` with spectrum in `[mu', ell']`, `0 < mu' <= ell' < 1`,
//! the degree-`K'` approximation
//!
//! ```text
//! X^{-1} ~ (c_0 / 2) I + sum_{k=1..K'} c_k T_k(Z),
//! Z   = (2 X - (ell' + mu') I) / (ell' - mu'),
//! c_k = (2 / sqrt(ell' mu')) (-r)^k,   r = (sqrt(ell'/mu') - 1) / (sqrt(ell'/mu') + 1),
//! ```
//!
//! has operator-norm error at most
//! `(sqrt(ell'/mu') - 1) / sqrt(ell' mu') * (1 - 2 / (sqrt(ell'/mu') + 1))^{K'}`.
//! The signs alternate because `Z` sends the smallest eigenvalue of `X` to
//! `-1`: the generating function identity
//! `1 + 2 sum_k (-r)^k T_k(z) = (1 - r^2) / (1 + 2 r z + r^2)` makes the
//! infinite series equal `1/x` exactly on the spectrum, while the truncation
//! error keeps the geometric tail `sum_{k > K'} |c_k|` above.
//!
//! Applying this to the scaled block `X = -hess_yy / (2 ell)` (spectrum in
//! `[mu/(2 ell), 1/2]`) gives the matrix-free factor used inside
//! [`hvp_primal`]: coefficients `c_k = 4 sqrt(kappa) (-r)^k` and
//!
//! ```text
//! (-hess_yy)^{-1} u ~ (c_0 / (4 ell)) u + (1 / (2 ell)) sum_k c_k T_k(Z_t) u,
//! Z_t v = -(2 / (ell - mu)) hess_yy v - ((ell + mu) / (ell - mu)) v,
//! ```
//!
//! evaluated with the three-term recurrence `v_k = 2 Z_t v_{k-1} - v_{k-2}`,
//! one `hvp_yy` per degree. The induced error on the inverse is at most
//! `(kappa - sqrt(kappa)) / ell * (1 - 2 / (sqrt(kappa) + 1))^{K'}`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problem::{symmetrize, MinimaxProblem};

/// Precomputed coefficients for applying the scaled Chebyshev inverse of
/// `-hess_yy` for a problem with constants `(ell, mu)`.
#[derive(Clone, Debug)]
pub struct ChebyshevPlan {
    k_prime: usize,
    /// Signed coefficients `c_k = 4 sqrt(kappa) (-r)^k` for `k = 0..=k_prime`.
    coeffs: Vec<f64>,
    ell: f64,
    mu: f64,
    /// Contraction ratio `r`; zero means `kappa = 1` up to f64 resolution,
    /// where the inverse is exactly `u / ell` and no recurrence is needed.
    r: f64,
}

impl ChebyshevPlan {
    /// Plan for constants `0 < mu <= ell` and polynomial degree `k_prime`.
    pub fn new(ell: f64, mu: f64, k_prime: usize) -> Result<Self> {
        if !(mu.is_finite() && ell.is_finite() && mu > 0.0 && ell >= mu) {
            return Err(Error::InvalidConstants(format!(
                "need 0 < mu <= ell, got mu = {mu}, ell = {ell}"
            )));
        }
        let root_kappa = (ell / mu).sqrt();
        let r = (root_kappa - 1.0) / (root_kappa + 1.0);
        let base = 4.0 * root_kappa;
        let mut coeffs = Vec::with_capacity(k_prime + 1);
        let mut ck = base;
        for _ in 0..=k_prime {
            coeffs.push(ck);
            ck *= -r;
        }
        Ok(Self {
            k_prime,
            coeffs,
            ell,
            mu,
            r,
        })
    }

    /// Plan bound to a problem's declared constants.
    pub fn for_problem(p: &MinimaxProblem, k_prime: usize) -> Result<Self> {
        Self::new(p.ell(), p.mu(), k_prime)
    }

    pub fn k_prime(&self) -> usize {
        self.k_prime
    }

    /// Signed coefficients `c_0..c_K'` in the scaled variables.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `hvp_yy` calls one [`approx_neg_yy_inverse_apply`] costs.
    pub fn hvp_count(&self) -> u64 {
        if self.r == 0.0 {
            0
        } else {
            self.k_prime as u64
        }
    }

    fn check_problem(&self, p: &MinimaxProblem) {
        assert_eq!(
            (self.ell, self.mu),
            (p.ell(), p.mu()),
            "plan was built for different problem constants"
        );
    }
}

/// Operator-norm error bound of the degree-`k_prime` Chebyshev approximation
/// of `X^{-1}` for SPD `X` with spectrum in `[mu_p, ell_p]` inside `(0, 1)`.
pub fn cheb_error_bound(ell_p: f64, mu_p: f64, k_prime: usize) -> f64 {
    let sqrt_ratio = (ell_p / mu_p).sqrt();
    (sqrt_ratio - 1.0) / (ell_p * mu_p).sqrt()
        * (1.0 - 2.0 / (sqrt_ratio + 1.0)).powi(k_prime as i32)
}

/// Error bound of [`approx_neg_yy_inverse_apply`] as an approximation of
/// `(-hess_yy)^{-1}`: `(kappa - sqrt(kappa)) / ell * r^{K'}`.
pub fn plan_inverse_error_bound(plan: &ChebyshevPlan) -> f64 {
    cheb_error_bound(0.5, plan.mu / (2.0 * plan.ell), plan.k_prime) / (2.0 * plan.ell)
}

/// Applies the Chebyshev approximation of `(-hess_yy(x, y))^{-1}` to `u`.
///
/// Costs exactly `plan.hvp_count()` `hvp_yy` oracle calls (`K'`, or zero in
/// the `kappa = 1` closed-form case).
pub fn approx_neg_yy_inverse_apply(
    p: &MinimaxProblem,
    x: &DVector<f64>,
    y: &DVector<f64>,
    plan: &ChebyshevPlan,
    u: &DVector<f64>,
) -> DVector<f64> {
    plan.check_problem(p);
    assert_eq!(u.len(), p.dim_y(), "u has wrong dimension");
    if plan.r == 0.0 {
        // kappa = 1: -hess_yy = ell I exactly on the declared class.
        return u / plan.ell;
    }
    let (ell, mu) = (plan.ell, plan.mu);
    let a = 2.0 / (ell - mu);
    let b = (ell + mu) / (ell - mu);
    let z_apply = |v: &DVector<f64>| -> DVector<f64> { -a * p.hvp_yy(x, y, v) - b * v };
    let inner_scale = 1.0 / (2.0 * ell);

    let mut w = (plan.coeffs[0] / (4.0 * ell)) * u;
    if plan.k_prime == 0 {
        return w;
    }
    let mut v_prev = u.clone(); // T_0 u
    let mut v_cur = z_apply(u); // T_1 u
    w += (plan.coeffs[1] * inner_scale) * &v_cur;
    for k in 2..=plan.k_prime {
        let mut v_next = z_apply(&v_cur) * 2.0;
        v_next -= &v_prev;
        w += (plan.coeffs[k] * inner_scale) * &v_next;
        v_prev = std::mem::replace(&mut v_cur, v_next);
    }
    w
}

/// Matrix-free primal Hessian-vector product
///
/// ```text
/// H_t u' = hess_xx u' + hess_xy [approx (-hess_yy)^{-1}] hess_yx u'
/// ```
///
/// Costs exactly `plan.hvp_count() + 3` hvp oracle calls.
pub fn hvp_primal(
    p: &MinimaxProblem,
    x: &DVector<f64>,
    y: &DVector<f64>,
    plan: &ChebyshevPlan,
    u_prime: &DVector<f64>,
) -> DVector<f64> {
    assert_eq!(u_prime.len(), p.dim_x(), "u_prime has wrong dimension");
    let v = p.hvp_yx(x, y, u_prime);
    let w = approx_neg_yy_inverse_apply(p, x, y, plan, &v);
    let coupled = p.hvp_xy(x, y, &w);
    p.hvp_xx(x, y, u_prime) + coupled
}

/// Assembles the dense approximate primal Hessian column by column
/// (`dim_x` [`hvp_primal`] calls; intended for verification and small
/// problems). The result is symmetrized to absorb recurrence rounding.
pub fn build_dense_ht(
    p: &MinimaxProblem,
    x: &DVector<f64>,
    y: &DVector<f64>,
    plan: &ChebyshevPlan,
) -> DMatrix<f64> {
    let d = p.dim_x();
    let mut ht = DMatrix::zeros(d, d);
    for j in 0..d {
        let mut e = DVector::zeros(d);
        e[j] = 1.0;
        ht.set_column(j, &hvp_primal(p, x, y, plan, &e));
    }
    symmetrize(&ht)
}

/// Dense Lemma-form approximation of `X^{-1}` for a symmetric `X` with
/// spectrum in `[mu_p, ell_p]` inside `(0, 1)`.
pub fn cheb_inverse_approx_dense(
    x_mat: &DMatrix<f64>,
    ell_p: f64,
    mu_p: f64,
    k_prime: usize,
) -> Result<DMatrix<f64>> {
    if x_mat.nrows() != x_mat.ncols() {
        return Err(Error::DimMismatch {
            arg: "x_mat",
            expected: x_mat.nrows(),
            got: x_mat.ncols(),
        });
    }
    if !(mu_p > 0.0 && ell_p >= mu_p && ell_p < 1.0) {
        return Err(Error::InvalidConstants(format!(
            "need 0 < mu_p <= ell_p < 1, got mu_p = {mu_p}, ell_p = {ell_p}"
        )));
    }
    let d = x_mat.nrows();
    let eye = DMatrix::identity(d, d);
    let sqrt_ratio = (ell_p / mu_p).sqrt();
    let r = (sqrt_ratio - 1.0) / (sqrt_ratio + 1.0);
    if r == 0.0 {
        return Ok(eye / ell_p);
    }
    let z = (x_mat * 2.0 - &eye * (ell_p + mu_p)) / (ell_p - mu_p);
    let base = 2.0 / (ell_p * mu_p).sqrt();
    let mut approx = &eye * (base / 2.0);
    let mut t_prev = eye.clone();
    let mut t_cur = z.clone();
    let mut ck = -base * r;
    for _k in 1..=k_prime {
        approx += &t_cur * ck;
        let t_next = &z * &t_cur * 2.0 - &t_prev;
        t_prev = std::mem::replace(&mut t_cur, t_next);
        ck *= -r;
    }
    Ok(approx)
}
