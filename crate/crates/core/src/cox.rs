//! Time-dependent proportional hazards with a Weibull baseline.
//!
//! ```text
//! λ(j) = (ζ/η) (j/η)^(ζ−1) exp(c·x(j))
//! ```
//!
//! Fitted by the same discretized censored likelihood as the latent model,
//! with shape and scale optimized on the log scale and an L2 penalty on the
//! regression coefficients only.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decision::Criterion;
use crate::error::{Error, Result};
use crate::likelihood::{failure_slope, log1mexp, ObservedInformation, RegularizedLossSpec};
use crate::model::{checked_exp, dot, HazardModel, Lifetime};
use crate::optimizer::{minimize_coordinate_descent, FitConfig, Minimum, Objective, TraceEntry};

const PARALLEL_THRESHOLD: usize = 64;
const START_SHAPES: [f64; 3] = [0.5, 1.0, 2.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxParams {
    pub zeta: f64,
    pub eta: f64,
    pub coeffs: Vec<f64>,
}

impl CoxParams {
    pub fn new(zeta: f64, eta: f64, coeffs: Vec<f64>) -> Result<Self> {
        let p = Self { zeta, eta, coeffs };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zeta.is_finite() && self.zeta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Weibull shape must be positive, got {}",
                self.zeta
            )));
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Weibull scale must be positive, got {}",
                self.eta
            )));
        }
        if self.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "coefficients must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        self.coeffs.len()
    }

    /// `(log ζ, log η, c1, .., cP)`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.zeta.ln(), self.eta.ln()];
        v.extend_from_slice(&self.coeffs);
        v
    }

    pub fn from_slice(theta: &[f64]) -> Result<Self> {
        if theta.len() < 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                found: theta.len(),
            });
        }
        Self::new(
            checked_exp(theta[0])?,
            checked_exp(theta[1])?,
            theta[2..].to_vec(),
        )
    }
}

fn log_hazard(
    log_zeta: f64,
    log_eta: f64,
    zeta: f64,
    t: usize,
    coeffs: &[f64],
    x_row: &[f64],
) -> f64 {
    log_zeta - log_eta + (zeta - 1.0) * ((t as f64).ln() - log_eta) + dot(coeffs, x_row)
}

/// Hazard at step `t` (1-based).
pub fn cox_hazard(params: &CoxParams, t: usize, x_row: &[f64]) -> Result<f64> {
    params.validate()?;
    if t == 0 {
        return Err(Error::InvalidInput("steps are 1-based".into()));
    }
    if x_row.len() != params.coeffs.len() {
        return Err(Error::DimensionMismatch {
            expected: params.coeffs.len(),
            found: x_row.len(),
        });
    }
    checked_exp(log_hazard(
        params.zeta.ln(),
        params.eta.ln(),
        params.zeta,
        t,
        &params.coeffs,
        x_row,
    ))
}

impl HazardModel for CoxParams {
    fn n_features(&self) -> usize {
        self.coeffs.len()
    }

    fn hazard_path(&self, life: &Lifetime) -> Result<Vec<f64>> {
        life.rows()
            .enumerate()
            .map(|(j, row)| cox_hazard(self, j + 1, row))
            .collect()
    }

    fn criterion_path(&self, life: &Lifetime, _: Criterion) -> Result<Vec<f64>> {
        self.hazard_path(life)
    }
}

fn lifetime_terms(theta: &[f64], life: &Lifetime, with_grad: bool) -> Result<(f64, Vec<f64>)> {
    let (log_zeta, log_eta) = (theta[0], theta[1]);
    let zeta = checked_exp(log_zeta)?;
    let coeffs = &theta[2..];
    let mut loglik = 0.0;
    let mut grad = vec![0.0; if with_grad { theta.len() } else { 0 }];
    let last = life.len();
    for (j, row) in life.rows().enumerate() {
        let t = j + 1;
        let lambda = checked_exp(log_hazard(log_zeta, log_eta, zeta, t, coeffs, row))?;
        let failure = t == last && life.event().is_failure();
        // d log λ / dθ scaled by d ll / d λ · λ
        let weight = if failure {
            loglik += log1mexp(lambda)?;
            failure_slope(lambda) * lambda
        } else {
            loglik -= lambda;
            -lambda
        };
        if with_grad {
            grad[0] += weight * (1.0 + zeta * ((t as f64).ln() - log_eta));
            grad[1] -= weight * zeta;
            for (g, x) in grad[2..].iter_mut().zip(row) {
                *g += weight * x;
            }
        }
    }
    Ok((loglik, grad))
}

/// Log-likelihood and its gradient in `(log ζ, log η, c)`.
pub fn cox_log_likelihood(
    theta: &[f64],
    data: &[Lifetime],
    with_grad: bool,
) -> Result<(f64, Vec<f64>)> {
    let p = theta.len().saturating_sub(2);
    if data.is_empty() {
        return Err(Error::InvalidInput("no lifetimes supplied".into()));
    }
    if let Some(bad) = data.iter().find(|l| l.n_features() != p) {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: bad.n_features(),
        });
    }
    let parts: Vec<(f64, Vec<f64>)> = if data.len() >= PARALLEL_THRESHOLD {
        data.par_iter()
            .map(|l| lifetime_terms(theta, l, with_grad))
            .collect::<Result<_>>()?
    } else {
        data.iter()
            .map(|l| lifetime_terms(theta, l, with_grad))
            .collect::<Result<_>>()?
    };
    let mut loglik = 0.0;
    let mut grad = vec![0.0; if with_grad { theta.len() } else { 0 }];
    for (ll, g) in parts {
        loglik += ll;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    Ok((loglik, grad))
}

/// Penalized negative log-likelihood of the Cox model. The penalty constant
/// is `c1_alpha` and applies to the regression coefficients only.
pub struct CoxObjective<'a> {
    data: &'a [Lifetime],
    penalty: f64,
    n_features: usize,
}

impl<'a> CoxObjective<'a> {
    pub fn new(data: &'a [Lifetime], spec: &RegularizedLossSpec) -> Result<Self> {
        spec.validate()?;
        let n_features = data
            .first()
            .ok_or_else(|| Error::InvalidInput("no lifetimes supplied".into()))?
            .n_features();
        Ok(Self {
            data,
            penalty: spec.c1_alpha,
            n_features,
        })
    }
}

impl Objective for CoxObjective<'_> {
    fn dim(&self) -> usize {
        self.n_features + 2
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let (ll, _) = cox_log_likelihood(x, self.data, false)?;
        Ok(-ll + self.penalty * dot(&x[2..], &x[2..]))
    }

    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (ll, mut g) = cox_log_likelihood(x, self.data, true)?;
        for v in g.iter_mut() {
            *v = -*v;
        }
        for (gk, xk) in g[2..].iter_mut().zip(&x[2..]) {
            *gk += 2.0 * self.penalty * xk;
        }
        Ok((-ll + self.penalty * dot(&x[2..], &x[2..]), g))
    }
}

#[derive(Debug, Clone)]
pub struct CoxFit {
    pub params: CoxParams,
    pub loss: f64,
    pub iterations: usize,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
    pub spec: RegularizedLossSpec,
    /// Negative Hessian of the unpenalized log-likelihood in
    /// `(log ζ, log η, c)`, by central differences of the score.
    pub information: ObservedInformation,
    pub gradient: Vec<f64>,
}

/// Fits the Weibull proportional hazards model from three starting shapes
/// and keeps the lowest loss. `cfg.init` is ignored.
pub fn fit_cox(data: &[Lifetime], spec: &RegularizedLossSpec, cfg: &FitConfig) -> Result<CoxFit> {
    cfg.validate()?;
    let obj = CoxObjective::new(data, spec)?;
    let mean_len = data.iter().map(|l| l.len() as f64).sum::<f64>() / data.len() as f64;
    let mut best = None;
    let mut last_err = None;
    for shape in START_SHAPES {
        let mut init = vec![shape.ln(), mean_len.ln()];
        init.resize(obj.dim(), 0.0);
        match minimize_coordinate_descent(&obj, init, cfg) {
            Ok(m) => {
                if best.as_ref().is_none_or(|b: &Minimum| m.value < b.value) {
                    best = Some(m);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let min = match (best, last_err) {
        (Some(m), _) => m,
        (None, Some(e)) => return Err(e),
        (None, None) => unreachable!("at least one start is attempted"),
    };
    let information = numeric_information(&min.x, data)?;
    Ok(CoxFit {
        params: CoxParams::from_slice(&min.x)?,
        loss: min.value,
        iterations: min.iterations,
        trace: min.trace,
        converged: min.converged,
        spec: *spec,
        information,
        gradient: min.gradient,
    })
}

fn numeric_information(theta: &[f64], data: &[Lifetime]) -> Result<ObservedInformation> {
    let n = theta.len();
    let mut m = nalgebra::DMatrix::zeros(n, n);
    let mut probe = theta.to_vec();
    for k in 0..n {
        let h = 1e-5 * theta[k].abs().max(1.0);
        probe[k] = theta[k] + h;
        let (_, up) = cox_log_likelihood(&probe, data, true)?;
        probe[k] = theta[k] - h;
        let (_, down) = cox_log_likelihood(&probe, data, true)?;
        probe[k] = theta[k];
        for i in 0..n {
            m[(i, k)] = -(up[i] - down[i]) / (2.0 * h);
        }
    }
    let sym = (&m + m.transpose()) * 0.5;
    Ok(ObservedInformation::from_matrix(sym))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Event;

    #[test]
    fn hazard_examples() {
        let unit = CoxParams::new(1.0, 1.0, vec![0.0]).unwrap();
        for t in 1..5 {
            assert!((cox_hazard(&unit, t, &[3.0]).unwrap() - 1.0).abs() < 1e-15);
        }
        let sq = CoxParams::new(2.0, 1.0, vec![0.0]).unwrap();
        assert!((cox_hazard(&sq, 3, &[0.0]).unwrap() - 6.0).abs() < 1e-12);

        let hmm = CoxParams::new(20.0, 4.5, vec![1.4]).unwrap();
        let direct = 20.0 / 4.5 * (4.0f64 / 4.5).powi(19) * 1.4f64.exp();
        let got = cox_hazard(&hmm, 4, &[1.0]).unwrap();
        assert!((got - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn rejects_nonpositive_shape_or_scale() {
        assert!(CoxParams::new(0.0, 1.0, vec![]).is_err());
        assert!(CoxParams::new(1.0, -1.0, vec![]).is_err());
        let p = CoxParams {
            zeta: -1.0,
            eta: 1.0,
            coeffs: vec![0.0],
        };
        assert!(cox_hazard(&p, 1, &[0.0]).is_err());
    }

    #[test]
    fn increasing_without_covariates() {
        let p = CoxParams::new(1.7, 12.0, vec![0.0]).unwrap();
        let h: Vec<f64> = (1..30)
            .map(|t| cox_hazard(&p, t, &[0.0]).unwrap())
            .collect();
        assert!(h.windows(2).all(|w| w[1] > w[0]));
    }

    fn toy_data() -> Vec<Lifetime> {
        vec![
            Lifetime::from_rows(
                "1",
                "A",
                &[vec![0.2, -1.0], vec![0.5, 0.3], vec![1.1, 0.0]],
                Event::Failed,
            )
            .unwrap(),
            Lifetime::from_rows(
                "2",
                "B",
                &[vec![-0.4, 0.8], vec![0.1, 0.2]],
                Event::Censored,
            )
            .unwrap(),
            Lifetime::from_rows(
                "3",
                "C",
                &[
                    vec![0.0, 0.0],
                    vec![0.3, -0.2],
                    vec![0.9, 0.4],
                    vec![1.3, 1.0],
                ],
                Event::Failed,
            )
            .unwrap(),
        ]
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let data = toy_data();
        let spec = RegularizedLossSpec::new(0.3, 0.0).unwrap();
        let obj = CoxObjective::new(&data, &spec).unwrap();
        let theta = [0.4, 1.2, 0.3, -0.5];
        let (_, g) = obj.value_and_gradient(&theta).unwrap();
        for k in 0..theta.len() {
            let h = 1e-6;
            let mut up = theta;
            up[k] += h;
            let mut down = theta;
            down[k] -= h;
            let fd = (obj.value(&up).unwrap() - obj.value(&down).unwrap()) / (2.0 * h);
            assert!(
                (fd - g[k]).abs() <= 1e-6 * fd.abs().max(1.0),
                "k={k}: {fd} vs {}",
                g[k]
            );
        }
    }

    fn weibull_sample(n: usize, truth: &CoxParams, seed: u64) -> Vec<Lifetime> {
        use crate::simulator::{sample_discrete_hazard, stream_rng};
        use rand::Rng;
        use rand_distr::StandardNormal;
        (0..n)
            .map(|i| {
                let mut rng = stream_rng(seed, i as u64);
                let v: f64 = rng.random_range(1e-12..1.0);
                let mut rows = Vec::new();
                let (_, event) = sample_discrete_hazard(
                    |t| {
                        let x: f64 = rng.sample(StandardNormal);
                        rows.push(vec![x]);
                        cox_hazard(truth, t, &[x])
                    },
                    v,
                    200,
                )
                .unwrap();
                Lifetime::from_rows(i.to_string(), "U", &rows, event).unwrap()
            })
            .collect()
    }

    #[test]
    fn fit_reaches_stationary_point() {
        let truth = CoxParams::new(1.5, 10.0, vec![0.3]).unwrap();
        let data = weibull_sample(150, &truth, 5);
        let spec = RegularizedLossSpec::new(0.1, 0.1).unwrap();
        let fit = fit_cox(&data, &spec, &FitConfig::default()).unwrap();
        assert!(fit.converged, "{fit:?}");
        // decreases below ulp(loss) are invisible to the line search
        let bound = 1e-8 * fit.loss.max(1.0);
        assert!(
            fit.gradient.iter().all(|g| g.abs() <= bound),
            "{:?}",
            fit.gradient
        );
        assert!(fit
            .trace
            .windows(2)
            .all(|w| w[1].objective < w[0].objective));
        assert!(fit.information.max_asymmetry() < 1e-10);
        assert!(fit.information.is_positive_definite());
        assert!(
            (fit.params.zeta - 1.5).abs() < 0.4 && (fit.params.eta - 10.0).abs() < 3.0,
            "{:?}",
            fit.params
        );
    }
}
