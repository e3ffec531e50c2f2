//! Lifetimes drawn from the latent state hazard model.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{open_unit, sample_discrete_hazard, stream_rng};
use crate::error::{Error, Result};
use crate::model::{g_term, mu_step, Lifetime, ModelParams};

/// Survival level below which [`expected_lifetime`] stops summing.
const SURVIVAL_FLOOR: f64 = 1e-12;
const EXPECTATION_CAP: usize = 10_000_000;

/// User-supplied covariate process.
pub trait CovariateGenerator: Send + Sync {
    /// Writes the covariates of step `step` (1-based) into `row`.
    fn fill(&self, step: usize, rng: &mut dyn RngCore, row: &mut [f64]);

    /// Typical covariate row, used to size the default horizon.
    fn mean_row(&self, n_features: usize) -> Vec<f64> {
        vec![0.0; n_features]
    }
}

#[derive(Clone, Default)]
pub enum CovariateSource {
    /// Every covariate independent N(0, 1) at every step.
    #[default]
    IidStandardNormal,
    Custom(Arc<dyn CovariateGenerator>),
}

impl fmt::Debug for CovariateSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::IidStandardNormal => f.write_str("IidStandardNormal"),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl CovariateSource {
    fn fill(&self, step: usize, rng: &mut dyn RngCore, row: &mut [f64]) {
        match self {
            Self::IidStandardNormal => {
                for v in row.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
            }
            Self::Custom(g) => g.fill(step, rng, row),
        }
    }

    fn mean_row(&self, n_features: usize) -> Vec<f64> {
        match self {
            Self::IidStandardNormal => vec![0.0; n_features],
            Self::Custom(g) => g.mean_row(n_features),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n_lifetimes: usize,
    pub true_params: ModelParams,
    /// Censoring cap in steps. `None` uses ten times the expected lifetime
    /// with covariates held at their mean.
    pub horizon: Option<usize>,
    pub seed: u64,
    pub covariate_source: CovariateSource,
}

impl SimConfig {
    /// One standard normal covariate with β0 = −7, β1 = 0.5, α0 = −14, α1 = 5.
    pub fn sec61(n_lifetimes: usize, seed: u64) -> Self {
        Self {
            n_lifetimes,
            true_params: ModelParams::simulation_truth(),
            horizon: None,
            seed,
            covariate_source: CovariateSource::IidStandardNormal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_lifetimes == 0 {
            return Err(Error::InvalidParameter(
                "n_lifetimes must be positive".into(),
            ));
        }
        if self.horizon == Some(0) {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        Ok(())
    }

    pub fn resolved_horizon(&self) -> Result<usize> {
        if let Some(h) = self.horizon {
            return Ok(h);
        }
        let p = self.true_params.n_features();
        let mean = self.covariate_source.mean_row(p);
        let expected = expected_lifetime(&self.true_params, &mean)?;
        Ok(((10.0 * expected).ceil() as usize).max(1))
    }
}

/// `E[T] = Σ_{t≥0} P(T > t)` with the covariates fixed at `x_row`.
pub fn expected_lifetime(params: &ModelParams, x_row: &[f64]) -> Result<f64> {
    let inc = mu_step(params, x_row)?;
    let g = g_term(params, x_row)?;
    let mut mu = 0.0;
    let mut cumulative = 0.0;
    let mut total = 1.0;
    for _ in 0..EXPECTATION_CAP {
        mu += inc;
        cumulative += mu + g;
        let survival = (-cumulative).exp();
        if survival < SURVIVAL_FLOOR {
            return Ok(total);
        }
        total += survival;
    }
    Err(Error::InvalidParameter(format!(
        "hazard too small to bound the lifetime within {EXPECTATION_CAP} steps; set a horizon"
    )))
}

/// Draws one lifetime. `index` names it and does not affect the draw.
pub fn sample_lifetime<R: Rng>(cfg: &SimConfig, index: usize, rng: &mut R) -> Result<Lifetime> {
    cfg.validate()?;
    let horizon = cfg.resolved_horizon()?;
    let v = open_unit(rng);
    draw(cfg, index, horizon, v, rng)
}

pub(crate) fn draw<R: Rng>(
    cfg: &SimConfig,
    index: usize,
    horizon: usize,
    v: f64,
    rng: &mut R,
) -> Result<Lifetime> {
    let params = &cfg.true_params;
    let p = params.n_features();
    let mut covariates = Vec::new();
    let mut row = vec![0.0; p];
    let mut mu = 0.0;
    let (_, event) = sample_discrete_hazard(
        |t| {
            cfg.covariate_source.fill(t, rng, &mut row);
            mu += mu_step(params, &row)?;
            let g = g_term(params, &row)?;
            covariates.extend_from_slice(&row);
            Ok(mu + g)
        },
        v,
        horizon,
    )?;
    let name = (index + 1).to_string();
    Lifetime::new(name.clone(), format!("U{name}"), p, covariates, event)
}

/// `n_lifetimes` lifetimes, lifetime `i` drawn from stream `i` of `seed`.
pub fn simulate_dataset(cfg: &SimConfig) -> Result<Vec<Lifetime>> {
    cfg.validate()?;
    let horizon = cfg.resolved_horizon()?;
    (0..cfg.n_lifetimes)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(cfg.seed, i as u64);
            let v = open_unit(&mut rng);
            draw(cfg, i, horizon, v, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Event;

    struct Zeros;

    impl CovariateGenerator for Zeros {
        fn fill(&self, _: usize, _: &mut dyn RngCore, row: &mut [f64]) {
            row.fill(0.0);
        }
    }

    fn zero_cfg() -> SimConfig {
        SimConfig {
            covariate_source: CovariateSource::Custom(Arc::new(Zeros)),
            ..SimConfig::sec61(1, 0)
        }
    }

    #[test]
    fn expected_lifetime_constant_hazard() {
        // λ ≡ 1 would need μ constant; use β0 → −∞ surrogate and g = 1
        let params = ModelParams::new(0.0, vec![0.0], -690.0, vec![0.0]).unwrap();
        let e = expected_lifetime(&params, &[0.0]).unwrap();
        let oracle = 1.0 / (1.0 - (-1.0f64).exp());
        assert!((e - oracle).abs() < 1e-9);
    }

    #[test]
    fn sec61_default_horizon() {
        let h = SimConfig::sec61(10, 1).resolved_horizon().unwrap();
        assert!((350..=450).contains(&h), "{h}");
    }

    #[test]
    fn near_one_uniform_fails_at_first_step() {
        let cfg = zero_cfg();
        let mut rng = stream_rng(0, 0);
        let life = draw(&cfg, 0, 100, 1.0 - 1e-15, &mut rng).unwrap();
        assert_eq!(life.len(), 1);
        assert_eq!(life.event(), Event::Failed);
    }

    #[test]
    fn tiny_uniform_is_censored() {
        let cfg = zero_cfg();
        let mut rng = stream_rng(0, 0);
        let life = draw(&cfg, 0, 25, 1e-300, &mut rng).unwrap();
        assert_eq!(life.len(), 25);
        assert_eq!(life.event(), Event::Censored);
    }

    #[test]
    fn same_seed_same_data() {
        let cfg = SimConfig::sec61(40, 9);
        assert_eq!(
            simulate_dataset(&cfg).unwrap(),
            simulate_dataset(&cfg).unwrap()
        );
        let other = SimConfig::sec61(40, 10);
        assert_ne!(
            simulate_dataset(&cfg).unwrap(),
            simulate_dataset(&other).unwrap()
        );
    }

    #[test]
    fn parallel_matches_sequential() {
        let cfg = SimConfig::sec61(16, 4);
        let par = simulate_dataset(&cfg).unwrap();
        for (i, life) in par.iter().enumerate() {
            let mut rng = stream_rng(4, i as u64);
            assert_eq!(&sample_lifetime(&cfg, i, &mut rng).unwrap(), life);
        }
    }

    #[test]
    fn rejects_bad_config() {
        assert!(SimConfig::sec61(0, 0).validate().is_err());
        let cfg = SimConfig {
            horizon: Some(0),
            ..SimConfig::sec61(1, 0)
        };
        assert!(cfg.validate().is_err());
    }
}
