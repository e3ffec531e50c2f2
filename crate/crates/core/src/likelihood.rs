//! Discrete-time log-likelihood with right censoring.
//!
//! A lifetime that fails at step `T` contributes
//! `Σ_{j<T} -λ(j) + log(1 - exp(-λ(T)))`; a lifetime censored after `S`
//! steps contributes `Σ_{j≤S} -λ(j)`. The regularized objective adds
//! `C1‖α‖² + C2‖β‖²`.
//!
//! Gradients and second derivatives are assembled analytically from
//!
//! ```text
//! ∂λ(j)/∂α_k = x_k(j) g(j)            ∂λ(j)/∂β_k = Σ_{l≤j} x_k(l) exp(β0 + β·x(l))
//! ```
//!
//! with `x_0 ≡ 1` for the intercepts.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{checked_exp, Event, Lifetime, ModelParams};

/// Below this many lifetimes the per-lifetime terms are summed on the calling thread.
const PARALLEL_THRESHOLD: usize = 64;

/// Smallest hazard accepted at a failure step.
pub const MIN_FAILURE_HAZARD: f64 = 1e-300;

/// L2 penalty constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizedLossSpec {
    pub c1_alpha: f64,
    pub c2_beta: f64,
    #[serde(default)]
    pub penalize_intercepts: bool,
}

impl Default for RegularizedLossSpec {
    fn default() -> Self {
        Self {
            c1_alpha: 0.1,
            c2_beta: 0.1,
            penalize_intercepts: false,
        }
    }
}

impl RegularizedLossSpec {
    pub fn new(c1_alpha: f64, c2_beta: f64) -> Result<Self> {
        let spec = Self {
            c1_alpha,
            c2_beta,
            penalize_intercepts: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn unpenalized() -> Self {
        Self {
            c1_alpha: 0.0,
            c2_beta: 0.0,
            penalize_intercepts: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c1_alpha >= 0.0 && self.c2_beta >= 0.0)
            || !self.c1_alpha.is_finite()
            || !self.c2_beta.is_finite()
        {
            return Err(Error::InvalidParameter(format!(
                "penalties must be finite and nonnegative, got C1={} C2={}",
                self.c1_alpha, self.c2_beta
            )));
        }
        Ok(())
    }

    pub fn penalty(&self, params: &ModelParams) -> f64 {
        let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        let mut pen = self.c1_alpha * sq(&params.alpha) + self.c2_beta * sq(&params.beta);
        if self.penalize_intercepts {
            pen += self.c1_alpha * params.alpha0 * params.alpha0
                + self.c2_beta * params.beta0 * params.beta0;
        }
        pen
    }

    fn add_penalty_gradient(&self, params: &ModelParams, grad: &mut [f64]) {
        let p = params.n_features();
        for k in 0..p {
            grad[1 + k] += 2.0 * self.c1_alpha * params.alpha[k];
            grad[p + 2 + k] += 2.0 * self.c2_beta * params.beta[k];
        }
        if self.penalize_intercepts {
            grad[0] += 2.0 * self.c1_alpha * params.alpha0;
            grad[p + 1] += 2.0 * self.c2_beta * params.beta0;
        }
    }
}

/// `log(1 - exp(-λ))` without cancellation for small `λ`.
pub fn log1mexp(lambda: f64) -> Result<f64> {
    if !(lambda >= MIN_FAILURE_HAZARD) {
        return Err(Error::NumericRange(format!(
            "failure-step hazard {lambda:e} is below {MIN_FAILURE_HAZARD:e}"
        )));
    }
    Ok(if lambda < std::f64::consts::LN_2 {
        (-(-lambda).exp_m1()).ln()
    } else {
        (-(-lambda).exp()).ln_1p()
    })
}

/// First derivative of `log(1 - exp(-λ))`, i.e. `1 / (exp(λ) - 1)`.
pub(crate) fn failure_slope(lambda: f64) -> f64 {
    1.0 / lambda.exp_m1()
}

/// Negative Hessian of the unpenalized log-likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedInformation {
    matrix: DMatrix<f64>,
}

impl ObservedInformation {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| self.matrix[(i, j)])
            .collect()
    }

    pub fn from_row_major(n: usize, values: &[f64]) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: values.len(),
            });
        }
        Ok(Self {
            matrix: DMatrix::from_row_slice(n, n, values),
        })
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)]).abs());
            }
        }
        worst
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn is_positive_definite(&self) -> bool {
        self.matrix.clone().cholesky().is_some()
    }

    /// Inverse information, the asymptotic covariance estimate of the MLE.
    pub fn covariance(&self) -> Option<DMatrix<f64>> {
        self.matrix.clone().cholesky().map(|c| c.inverse())
    }

    pub fn standard_errors(&self) -> Option<Vec<f64>> {
        self.covariance()
            .map(|cov| cov.diagonal().iter().map(|v| v.sqrt()).collect())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Order {
    Value,
    Gradient,
    Hessian,
}

struct Terms {
    loglik: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
}

fn check_data(params: &ModelParams, data: &[Lifetime]) -> Result<()> {
    if data.is_empty() {
        return Err(Error::InvalidInput("no lifetimes supplied".into()));
    }
    let p = params.n_features();
    if let Some(bad) = data.iter().find(|l| l.n_features() != p) {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: bad.n_features(),
        });
    }
    Ok(())
}

/// Log-likelihood terms of a single lifetime up to the requested derivative order.
fn lifetime_terms(params: &ModelParams, life: &Lifetime, order: Order) -> Result<Terms> {
    let p = params.n_features();
    let q = p + 1; // block width including the intercept
    let dim = 2 * q;
    let want_grad = order >= Order::Gradient;
    let want_hess = order >= Order::Hessian;

    let mut terms = Terms {
        loglik: 0.0,
        grad: if want_grad {
            vec![0.0; dim]
        } else {
            Vec::new()
        },
        hess: if want_hess {
            vec![0.0; dim * dim]
        } else {
            Vec::new()
        },
    };
    // running sums of exp(β0 + β·x(l)) x̃_k(l) and of the outer products
    let mut s1 = vec![0.0; if want_grad { q } else { 1 }];
    let mut s2 = vec![0.0; if want_hess { q * q } else { 0 }];
    let mut dl = vec![0.0; if want_grad { dim } else { 0 }];
    let mut xt = vec![1.0; q];

    let t_len = life.len();
    for (j, row) in life.rows().enumerate() {
        xt[1..].copy_from_slice(row);
        let e = checked_exp(params.latent_exponent(row))?;
        let g = checked_exp(params.transient_exponent(row))?;
        if want_grad {
            for k in 0..q {
                s1[k] += e * xt[k];
            }
        } else {
            s1[0] += e;
        }
        if want_hess {
            for k in 0..q {
                for m in 0..q {
                    s2[k * q + m] += e * xt[k] * xt[m];
                }
            }
        }
        let lambda = s1[0] + g;
        let failure_step = j + 1 == t_len && life.event() == Event::Failed;

        // weight on ∇λ and on ∇λ∇λᵀ for this step's contribution
        let (w1, w2) = if failure_step {
            terms.loglik += log1mexp(lambda)?;
            let f1 = failure_slope(lambda);
            (f1, -f1 * (1.0 + f1))
        } else {
            terms.loglik -= lambda;
            (-1.0, 0.0)
        };
        if !want_grad {
            continue;
        }
        for k in 0..q {
            dl[k] = g * xt[k];
            dl[q + k] = s1[k];
        }
        for (gk, dk) in terms.grad.iter_mut().zip(&dl) {
            *gk += w1 * dk;
        }
        if !want_hess {
            continue;
        }
        let h = &mut terms.hess;
        for k in 0..q {
            for m in 0..q {
                h[k * dim + m] += w1 * g * xt[k] * xt[m];
                h[(q + k) * dim + q + m] += w1 * s2[k * q + m];
            }
        }
        if w2 != 0.0 {
            for a in 0..dim {
                for b in 0..dim {
                    h[a * dim + b] += w2 * dl[a] * dl[b];
                }
            }
        }
    }
    Ok(terms)
}

/// Evaluates all lifetimes and sums in slice order, so results do not depend
/// on whether the work ran in parallel.
fn summed_terms(params: &ModelParams, data: &[Lifetime], order: Order) -> Result<Terms> {
    check_data(params, data)?;
    let parts: Vec<Terms> = if data.len() >= PARALLEL_THRESHOLD {
        data.par_iter()
            .map(|life| lifetime_terms(params, life, order))
            .collect::<Result<_>>()?
    } else {
        data.iter()
            .map(|life| lifetime_terms(params, life, order))
            .collect::<Result<_>>()?
    };
    let mut parts = parts.into_iter();
    let mut total = parts.next().expect("data is nonempty");
    for part in parts {
        total.loglik += part.loglik;
        for (a, b) in total.grad.iter_mut().zip(&part.grad) {
            *a += b;
        }
        for (a, b) in total.hess.iter_mut().zip(&part.hess) {
            *a += b;
        }
    }
    Ok(total)
}

/// Log-likelihood of one lifetime with its first and second derivative along
/// coordinate `coord` of `(α0, α, β0, β)`.
fn coordinate_terms(params: &ModelParams, life: &Lifetime, coord: usize) -> Result<[f64; 3]> {
    let q = params.n_features() + 1;
    let (latent, k) = if coord < q {
        (false, coord)
    } else {
        (true, coord - q)
    };
    let t_len = life.len();
    let (mut ll, mut d1, mut d2) = (0.0, 0.0, 0.0);
    let (mut mu, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for (j, row) in life.rows().enumerate() {
        let x = if k == 0 { 1.0 } else { row[k - 1] };
        let e = checked_exp(params.latent_exponent(row))?;
        let g = checked_exp(params.transient_exponent(row))?;
        mu += e;
        let (dl, ddl) = if latent {
            s1 += e * x;
            s2 += e * x * x;
            (s1, s2)
        } else {
            (g * x, g * x * x)
        };
        let lambda = mu + g;
        if j + 1 == t_len && life.event() == Event::Failed {
            ll += log1mexp(lambda)?;
            let f1 = failure_slope(lambda);
            d1 += f1 * dl;
            d2 += f1 * ddl - f1 * (1.0 + f1) * dl * dl;
        } else {
            ll -= lambda;
            d1 -= dl;
            d2 -= ddl;
        }
    }
    Ok([ll, d1, d2])
}

/// Regularized loss with its first and second derivative along one
/// coordinate of `(α0, α, β0, β)`.
pub fn coordinate_derivatives(
    params: &ModelParams,
    data: &[Lifetime],
    spec: &RegularizedLossSpec,
    coord: usize,
) -> Result<(f64, f64, f64)> {
    check_data(params, data)?;
    let dim = params.dim();
    if coord >= dim {
        return Err(Error::IndexOutOfRange {
            index: coord,
            len: dim,
        });
    }
    let parts: Vec<[f64; 3]> = if data.len() >= PARALLEL_THRESHOLD {
        data.par_iter()
            .map(|life| coordinate_terms(params, life, coord))
            .collect::<Result<_>>()?
    } else {
        data.iter()
            .map(|life| coordinate_terms(params, life, coord))
            .collect::<Result<_>>()?
    };
    let mut total = [0.0; 3];
    for part in &parts {
        for (a, b) in total.iter_mut().zip(part) {
            *a += b;
        }
    }
    let q = params.n_features() + 1;
    let theta = params.to_vec()[coord];
    let c = if coord < q {
        spec.c1_alpha
    } else {
        spec.c2_beta
    };
    let penalized = coord % q != 0 || spec.penalize_intercepts;
    let (p1, p2) = if penalized {
        (2.0 * c * theta, 2.0 * c)
    } else {
        (0.0, 0.0)
    };
    Ok((
        -total[0] + spec.penalty(params),
        -total[1] + p1,
        -total[2] + p2,
    ))
}

/// Log-likelihood of the data under `params`.
pub fn log_likelihood(params: &ModelParams, data: &[Lifetime]) -> Result<f64> {
    Ok(summed_terms(params, data, Order::Value)?.loglik)
}

/// Negative log-likelihood plus the L2 penalty.
pub fn regularized_loss(
    params: &ModelParams,
    data: &[Lifetime],
    spec: &RegularizedLossSpec,
) -> Result<f64> {
    Ok(-log_likelihood(params, data)? + spec.penalty(params))
}

/// Gradient of [`regularized_loss`] in `(α0, α, β0, β)` order.
pub fn gradient(
    params: &ModelParams,
    data: &[Lifetime],
    spec: &RegularizedLossSpec,
) -> Result<Vec<f64>> {
    Ok(loss_and_gradient(params, data, spec)?.1)
}

pub fn loss_and_gradient(
    params: &ModelParams,
    data: &[Lifetime],
    spec: &RegularizedLossSpec,
) -> Result<(f64, Vec<f64>)> {
    let terms = summed_terms(params, data, Order::Gradient)?;
    let mut grad: Vec<f64> = terms.grad.iter().map(|g| -g).collect();
    spec.add_penalty_gradient(params, &mut grad);
    Ok((-terms.loglik + spec.penalty(params), grad))
}

/// Gradient of one lifetime's log-likelihood (the score contribution).
pub fn lifetime_score(params: &ModelParams, life: &Lifetime) -> Result<Vec<f64>> {
    check_data(params, std::slice::from_ref(life))?;
    Ok(lifetime_terms(params, life, Order::Gradient)?.grad)
}

/// Negative Hessian of the unpenalized log-likelihood.
pub fn observed_information(
    params: &ModelParams,
    data: &[Lifetime],
) -> Result<ObservedInformation> {
    let terms = summed_terms(params, data, Order::Hessian)?;
    let dim = params.dim();
    let mut m = DMatrix::from_fn(dim, dim, |i, j| -terms.hess[i * dim + j]);
    // the assembly is symmetric up to rounding; make it exact
    for i in 0..dim {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(ObservedInformation { matrix: m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::trajectory;

    /// Constant hazard `lambda` carried entirely by `g`; `μ` underflows to zero.
    fn constant_hazard_params(lambda: f64) -> ModelParams {
        ModelParams::new(lambda.ln(), vec![0.0], -800.0, vec![0.0]).unwrap()
    }

    fn life(t: usize, event: Event) -> Lifetime {
        Lifetime::new("x", "u", 1, vec![0.0; t], event).unwrap()
    }

    #[test]
    fn failed_lifetime_closed_form() {
        let p = constant_hazard_params(0.1);
        let ll = log_likelihood(&p, &[life(2, Event::Failed)]).unwrap();
        let expected = -0.1 + (1.0 - (-0.1f64).exp()).ln();
        assert!((ll - expected).abs() < 1e-12, "{ll} vs {expected}");
        assert!((ll + 2.452168).abs() < 1e-6);
    }

    #[test]
    fn censored_lifetime_is_pure_survival() {
        let p = constant_hazard_params(0.1);
        let ll = log_likelihood(&p, &[life(3, Event::Censored)]).unwrap();
        assert!((ll + 0.3).abs() < 1e-12);
    }

    #[test]
    fn additivity_over_copies() {
        let p = ModelParams::simulation_truth();
        let one = Lifetime::new("a", "u", 1, vec![0.3, -1.0, 2.0], Event::Failed).unwrap();
        let single = log_likelihood(&p, std::slice::from_ref(&one)).unwrap();
        let double = log_likelihood(&p, &[one.clone(), one]).unwrap();
        assert_eq!(double, 2.0 * single);
    }

    #[test]
    fn penalty_arithmetic() {
        let p = ModelParams::new(0.0, vec![1.0, 2.0], 0.0, vec![0.0, 0.0]).unwrap();
        let data = [Lifetime::new("a", "u", 2, vec![0.1, 0.2, 0.3, 0.4], Event::Failed).unwrap()];
        let spec = RegularizedLossSpec::new(0.1, 0.1).unwrap();
        let diff = regularized_loss(&p, &data, &spec).unwrap()
            - regularized_loss(&p, &data, &RegularizedLossSpec::unpenalized()).unwrap();
        assert!((diff - 0.5).abs() < 1e-12);
        assert_eq!(
            regularized_loss(&p, &data, &RegularizedLossSpec::unpenalized()).unwrap(),
            -log_likelihood(&p, &data).unwrap()
        );
    }

    #[test]
    fn zero_covariates_give_zero_slope_gradients() {
        let p = ModelParams::new(-2.0, vec![0.4], -3.0, vec![-0.2]).unwrap();
        let data = [life(5, Event::Failed), life(3, Event::Censored)];
        let g = gradient(&p, &data, &RegularizedLossSpec::unpenalized()).unwrap();
        assert_eq!(g[1], 0.0);
        assert_eq!(g[3], 0.0);
        assert!(g[0] != 0.0 && g[2] != 0.0);
    }

    #[test]
    fn log1mexp_is_accurate_on_both_branches() {
        for &x in &[1e-12f64, 1e-6, 0.1, 0.69, 0.7, 5.0, 40.0] {
            let direct = (1.0 - (-x).exp()).ln();
            let stable = log1mexp(x).unwrap();
            if x > 1e-4 {
                assert!((direct - stable).abs() < 1e-10 * direct.abs().max(1.0));
            }
        }
        assert!((log1mexp(1e-12).unwrap() - (1e-12f64).ln()).abs() < 1e-9);
        assert!(log1mexp(1e-301).unwrap_err().is_numeric());
    }

    #[test]
    fn tiny_failure_hazard_raises() {
        let p = ModelParams::new(-700.0, vec![0.0], -700.0, vec![0.0]).unwrap();
        let err = log_likelihood(&p, &[life(1, Event::Failed)]).unwrap_err();
        assert!(err.is_numeric());
    }

    #[test]
    fn information_is_symmetric_and_matches_trajectory_scale() {
        let p = ModelParams::simulation_truth();
        let data = [Lifetime::new("a", "u", 1, vec![0.5, 1.0, -0.3, 2.0], Event::Failed).unwrap()];
        let info = observed_information(&p, &data).unwrap();
        assert_eq!(info.dim(), 4);
        assert!(info.max_asymmetry() == 0.0);
        // μ-only second derivative w.r.t. β0 for a censored lifetime equals Σ μ(j)
        let cens = [data[0].clone().with_event(Event::Censored)];
        let info = observed_information(&p, &cens).unwrap();
        let traj = trajectory(&p, &cens[0]).unwrap();
        let s: f64 = traj.mu.iter().sum();
        assert!((info.matrix()[(2, 2)] - s).abs() < 1e-15 * s.max(1.0) + 1e-18);
    }

    #[test]
    fn negative_penalty_rejected() {
        assert!(RegularizedLossSpec::new(-0.1, 0.0).is_err());
        assert!(RegularizedLossSpec::new(0.0, f64::NAN).is_err());
    }
}
