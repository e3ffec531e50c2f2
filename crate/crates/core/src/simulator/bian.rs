//! Brownian degradation signal in a periodic environment.
//!
//! ```text
//! s(t) = ∫_0^t [a + b ω(v)] dv + c B(t),   ω(t) = 2 + sin(πt/12)
//! ```
//!
//! The drift integral is evaluated in closed form at each grid time; only
//! the Brownian part is simulated. A unit fails at the first grid time where
//! the signal reaches the failure threshold.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stream_rng;
use crate::error::{Error, Result};
use crate::model::{Event, Lifetime};

/// Normal prior on a per-unit coefficient. `sd = 0` fixes it at the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prior {
    pub mean: f64,
    pub sd: f64,
}

impl Prior {
    pub fn fixed(mean: f64) -> Self {
        Self { mean, sd: 0.0 }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.sd == 0.0 {
            self.mean
        } else {
            let z: f64 = rng.sample(StandardNormal);
            self.mean + self.sd * z
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BianConfig {
    /// Constant drift coefficient.
    pub alpha: Prior,
    /// Environment drift coefficient.
    pub beta: Prior,
    /// Mean of the Brownian coefficient.
    pub noise_scale: f64,
    pub noise_sd: f64,
    pub failure_threshold: f64,
    pub step: f64,
    /// Maximum number of steps before censoring.
    pub horizon: usize,
    pub seed: u64,
}

impl Default for BianConfig {
    fn default() -> Self {
        Self {
            alpha: Prior::fixed(0.5),
            beta: Prior::fixed(0.5),
            noise_scale: 1.0,
            noise_sd: 0.0,
            failure_threshold: 150.0,
            step: 1.0,
            horizon: 2000,
            seed: 0,
        }
    }
}

impl BianConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return Err(Error::InvalidParameter(
                "noise_scale must be nonnegative".into(),
            ));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::InvalidParameter("step must be positive".into()));
        }
        for (name, v) in [
            ("alpha mean", self.alpha.mean),
            ("beta mean", self.beta.mean),
            ("failure_threshold", self.failure_threshold),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        for (name, sd) in [
            ("alpha sd", self.alpha.sd),
            ("beta sd", self.beta.sd),
            ("noise_sd", self.noise_sd),
        ] {
            if !(sd.is_finite() && sd >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be nonnegative"
                )));
            }
        }
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        Ok(())
    }
}

/// Environment `ω(t) = 2 + sin(πt/12)`.
pub fn environment(t: f64) -> f64 {
    2.0 + (PI * t / 12.0).sin()
}

/// `∫_0^t [a + b ω(v)] dv`.
pub fn drift(a: f64, b: f64, t: f64) -> f64 {
    (a + 2.0 * b) * t + b * (12.0 / PI) * (1.0 - (PI * t / 12.0).cos())
}

/// One simulated unit. Series are sampled at `t = step, 2·step, ..`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BianSignal {
    pub times: Vec<f64>,
    pub signal: Vec<f64>,
    pub environment: Vec<f64>,
    /// 1-based step of the threshold crossing, `None` if censored.
    pub failure_step: Option<usize>,
    /// Drawn `(a, b, c)`.
    pub coefficients: (f64, f64, f64),
}

impl BianSignal {
    /// Failure time in model units, if any.
    pub fn failure_time(&self) -> Option<f64> {
        self.failure_step.map(|k| self.times[k - 1])
    }

    /// Lifetime with covariates `[s(t), ω(t)]`.
    pub fn to_lifetime(
        &self,
        id: impl Into<String>,
        unit_id: impl Into<String>,
    ) -> Result<Lifetime> {
        let covariates = self
            .signal
            .iter()
            .zip(&self.environment)
            .flat_map(|(s, w)| [*s, *w])
            .collect();
        let event = if self.failure_step.is_some() {
            Event::Failed
        } else {
            Event::Censored
        };
        Lifetime::new(id, unit_id, 2, covariates, event)
    }
}

/// Simulates one signal until it crosses the threshold or the horizon ends.
pub fn sample_bian_signal<R: Rng>(cfg: &BianConfig, rng: &mut R) -> Result<BianSignal> {
    cfg.validate()?;
    let a = cfg.alpha.draw(rng);
    let b = cfg.beta.draw(rng);
    let c = Prior {
        mean: cfg.noise_scale,
        sd: cfg.noise_sd,
    }
    .draw(rng);
    let sqrt_h = cfg.step.sqrt();
    let mut brownian = 0.0;
    let mut out = BianSignal {
        times: Vec::new(),
        signal: Vec::new(),
        environment: Vec::new(),
        failure_step: None,
        coefficients: (a, b, c),
    };
    for k in 1..=cfg.horizon {
        let t = k as f64 * cfg.step;
        let z: f64 = rng.sample(StandardNormal);
        brownian += sqrt_h * z;
        let s = drift(a, b, t) + c * brownian;
        out.times.push(t);
        out.signal.push(s);
        out.environment.push(environment(t));
        if s >= cfg.failure_threshold {
            out.failure_step = Some(k);
            break;
        }
    }
    Ok(out)
}

/// `n` signals, signal `i` drawn from stream `i` of `cfg.seed`.
pub fn simulate_bian(cfg: &BianConfig, n: usize) -> Result<Vec<BianSignal>> {
    cfg.validate()?;
    (0..n)
        .into_par_iter()
        .map(|i| sample_bian_signal(cfg, &mut stream_rng(cfg.seed, i as u64)))
        .collect()
}
