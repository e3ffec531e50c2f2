//! Hidden three-state Markov degradation with a Weibull proportional hazard.
//!
//! The state `Z` moves by the transition matrix once per step and emits one
//! of five condition-monitoring outputs through the emission matrix. The
//! failure hazard is `(ζ/η)(t/η)^(ζ−1) exp(γZ)`; it is integrated exactly over
//! each step, so with the state held fixed the step-level failure time has
//! CDF `1 − exp(−exp(γZ)(t/η)^ζ)`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{open_unit, sample_discrete_hazard, stream_rng};
use crate::error::{Error, Result};
use crate::model::{checked_exp, Lifetime};

pub const N_STATES: usize = 3;
pub const N_OUTPUTS: usize = 5;
const ROW_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmConfig {
    pub transition: [[f64; N_STATES]; N_STATES],
    pub emission: [[f64; N_OUTPUTS]; N_STATES],
    /// Weibull shape.
    pub zeta: f64,
    /// Weibull scale.
    pub eta: f64,
    pub gamma: f64,
    /// 1-based state at the first step.
    pub initial_state: usize,
    /// Length of one step in model time.
    pub step: f64,
    pub horizon: usize,
    pub seed: u64,
}

impl Default for HmmConfig {
    fn default() -> Self {
        Self {
            transition: [[0.9, 0.09, 0.01], [0.0, 0.87, 0.13], [0.0, 0.0, 1.0]],
            emission: [
                [0.6, 0.3, 0.05, 0.05, 0.0],
                [0.1, 0.2, 0.4, 0.2, 0.1],
                [0.0, 0.05, 0.05, 0.3, 0.6],
            ],
            zeta: 20.0,
            eta: 4.5,
            gamma: 1.4,
            initial_state: 1,
            step: 1.0,
            horizon: 1000,
            seed: 0,
        }
    }
}

fn check_rows<const K: usize>(name: &str, rows: &[[f64; K]]) -> Result<()> {
    for (i, row) in rows.iter().enumerate() {
        if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "{name} row {} has a negative or non-finite entry",
                i + 1
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_TOL {
            return Err(Error::InvalidParameter(format!(
                "{name} row {} sums to {sum}",
                i + 1
            )));
        }
    }
    Ok(())
}

impl HmmConfig {
    pub fn validate(&self) -> Result<()> {
        check_rows("transition", &self.transition)?;
        check_rows("emission", &self.emission)?;
        if self.transition[N_STATES - 1] != [0.0, 0.0, 1.0] {
            return Err(Error::InvalidParameter(format!(
                "state {N_STATES} must be absorbing"
            )));
        }
        for (name, v) in [("zeta", self.zeta), ("eta", self.eta), ("step", self.step)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !self.gamma.is_finite() {
            return Err(Error::InvalidParameter("gamma must be finite".into()));
        }
        if !(1..=N_STATES).contains(&self.initial_state) {
            return Err(Error::InvalidParameter(format!(
                "initial_state must be in 1..={N_STATES}"
            )));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        Ok(())
    }

    /// Cumulative baseline hazard `(t/η)^ζ`.
    fn baseline_cumulative(&self, t: f64) -> f64 {
        (t / self.eta).powf(self.zeta)
    }
}

/// One simulated lifetime with covariates `[log t, y_t]` and the hidden
/// state at every step (1-based states).
#[derive(Debug, Clone, PartialEq)]
pub struct HmmSample {
    pub lifetime: Lifetime,
    pub states: Vec<usize>,
}

struct Samplers {
    transition: Vec<WeightedIndex<f64>>,
    emission: Vec<WeightedIndex<f64>>,
}

impl Samplers {
    fn new(cfg: &HmmConfig) -> Result<Self> {
        let build = |row: &[f64]| {
            WeightedIndex::new(row.iter().copied())
                .map_err(|e| Error::InvalidParameter(format!("stochastic row: {e}")))
        };
        Ok(Self {
            transition: cfg
                .transition
                .iter()
                .map(|r| build(r))
                .collect::<Result<_>>()?,
            emission: cfg
                .emission
                .iter()
                .map(|r| build(r))
                .collect::<Result<_>>()?,
        })
    }
}

fn draw<R: Rng>(cfg: &HmmConfig, s: &Samplers, index: usize, rng: &mut R) -> Result<HmmSample> {
    let v = open_unit(rng);
    let mut state = cfg.initial_state - 1;
    let mut states = Vec::new();
    let mut covariates = Vec::new();
    let (_, event) = sample_discrete_hazard(
        |k| {
            if k > 1 {
                state = s.transition[state].sample(rng);
            }
            let y = s.emission[state].sample(rng) + 1;
            let t = k as f64 * cfg.step;
            states.push(state + 1);
            covariates.extend_from_slice(&[t.ln(), y as f64]);
            let scale = checked_exp(cfg.gamma * (state + 1) as f64)?;
            let increment = cfg.baseline_cumulative(t) - cfg.baseline_cumulative(t - cfg.step);
            Ok(scale * increment)
        },
        v,
        cfg.horizon,
    )?;
    let name = (index + 1).to_string();
    let lifetime = Lifetime::new(name.clone(), format!("U{name}"), 2, covariates, event)?;
    Ok(HmmSample { lifetime, states })
}

/// Draws one lifetime from the hidden Markov process.
pub fn sample_hmm_lifetime<R: Rng>(
    cfg: &HmmConfig,
    index: usize,
    rng: &mut R,
) -> Result<HmmSample> {
    cfg.validate()?;
    draw(cfg, &Samplers::new(cfg)?, index, rng)
}

/// `n` lifetimes, lifetime `i` drawn from stream `i` of `cfg.seed`.
pub fn simulate_hmm(cfg: &HmmConfig, n: usize) -> Result<Vec<HmmSample>> {
    cfg.validate()?;
    let samplers = Samplers::new(cfg)?;
    (0..n)
        .into_par_iter()
        .map(|i| draw(cfg, &samplers, i, &mut stream_rng(cfg.seed, i as u64)))
        .collect()
}
