//! Hazard decomposition `λ(j) = μ(j) + g(j)`.
//!
//! The latent term accumulates exponentiated covariate effects over the whole
//! history of a lifetime,
//!
//! ```text
//! μ(j) = μ(j-1) + exp(β0 + β·x(j)),   μ(0) = 0
//! ```
//!
//! and is therefore strictly increasing. The transient term only sees the
//! current covariates, `g(j) = exp(α0 + α·x(j))`. Time is discrete with unit
//! steps; step `j` (1-based) covers the interval `(j-1, j]`. Baseline hazards
//! are fixed to the constant 1, the intercepts absorb them.

use serde::{Deserialize, Serialize};

use crate::decision::Criterion;
use crate::error::{Error, Result};

/// Exponents above this bound are rejected instead of overflowing to infinity.
pub const MAX_EXPONENT: f64 = 700.0;

/// `exp(x)` with an explicit range check.
pub fn checked_exp(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::NumericRange("exponent is NaN".into()));
    }
    if x > MAX_EXPONENT {
        return Err(Error::NumericRange(format!(
            "exponent {x:.6e} exceeds {MAX_EXPONENT}"
        )));
    }
    Ok(x.exp())
}

/// How a lifetime ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    Failed,
    Censored,
}

impl Event {
    pub fn is_failure(self) -> bool {
        matches!(self, Event::Failed)
    }
}

/// One run of a unit from restoration to failure or censoring.
///
/// Covariates are stored row-major, one row per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lifetime {
    id: String,
    unit_id: String,
    n_features: usize,
    covariates: Vec<f64>,
    event: Event,
}

impl Lifetime {
    pub fn new(
        id: impl Into<String>,
        unit_id: impl Into<String>,
        n_features: usize,
        covariates: Vec<f64>,
        event: Event,
    ) -> Result<Self> {
        let id = id.into();
        if n_features == 0 {
            return Err(Error::InvalidInput(format!(
                "lifetime {id} needs at least one covariate"
            )));
        }
        if covariates.is_empty() {
            return Err(Error::InvalidInput(format!(
                "lifetime {id} has no observed steps"
            )));
        }
        if covariates.len() % n_features != 0 {
            return Err(Error::InvalidInput(format!(
                "lifetime {id}: {} covariate values do not form rows of width {n_features}",
                covariates.len()
            )));
        }
        if let Some(pos) = covariates.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "lifetime {id}: non-finite covariate at step {}, feature {}",
                pos / n_features + 1,
                pos % n_features
            )));
        }
        Ok(Self {
            id,
            unit_id: unit_id.into(),
            n_features,
            covariates,
            event,
        })
    }

    /// Builds a lifetime from per-step rows.
    pub fn from_rows(
        id: impl Into<String>,
        unit_id: impl Into<String>,
        rows: &[Vec<f64>],
        event: Event,
    ) -> Result<Self> {
        let id = id.into();
        let width = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != width) {
            return Err(Error::DimensionMismatch {
                expected: width,
                found: bad.len(),
            });
        }
        let flat = rows.iter().flatten().copied().collect();
        Self::new(id, unit_id, width, flat, event)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn unit_id(&self) -> &str {
        &self.unit_id
    }

    pub fn event(&self) -> Event {
        self.event
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Number of observed steps `T`.
    pub fn len(&self) -> usize {
        self.covariates.len() / self.n_features
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Covariates of step `j` (0-based row index).
    pub fn row(&self, j: usize) -> &[f64] {
        &self.covariates[j * self.n_features..(j + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.covariates.chunks_exact(self.n_features)
    }

    pub fn covariates(&self) -> &[f64] {
        &self.covariates
    }

    pub(crate) fn covariates_mut(&mut self) -> &mut [f64] {
        &mut self.covariates
    }

    pub fn with_event(mut self, event: Event) -> Self {
        self.event = event;
        self
    }
}

/// Parameter set `θ = (α0, α, β0, β)`.
///
/// The flattened order used by gradients and information matrices is
/// `(α0, α1..αP, β0, β1..βP)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha0: f64,
    pub alpha: Vec<f64>,
    pub beta0: f64,
    pub beta: Vec<f64>,
}

impl ModelParams {
    pub fn new(alpha0: f64, alpha: Vec<f64>, beta0: f64, beta: Vec<f64>) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(Error::DimensionMismatch {
                expected: alpha.len(),
                found: beta.len(),
            });
        }
        let params = Self {
            alpha0,
            alpha,
            beta0,
            beta,
        };
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("parameters must be finite".into()));
        }
        Ok(params)
    }

    pub fn zeros(n_features: usize) -> Self {
        Self {
            alpha0: 0.0,
            alpha: vec![0.0; n_features],
            beta0: 0.0,
            beta: vec![0.0; n_features],
        }
    }

    /// Truth used in the single-covariate simulation study.
    pub fn simulation_truth() -> Self {
        Self {
            alpha0: -14.0,
            alpha: vec![5.0],
            beta0: -7.0,
            beta: vec![0.5],
        }
    }

    pub fn n_features(&self) -> usize {
        self.alpha.len()
    }

    /// Length of the flattened parameter vector, `2P + 2`.
    pub fn dim(&self) -> usize {
        2 * self.alpha.len() + 2
    }

    fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.alpha0)
            .chain(self.alpha.iter().copied())
            .chain(std::iter::once(self.beta0))
            .chain(self.beta.iter().copied())
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.iter().collect()
    }

    pub fn from_slice(theta: &[f64]) -> Result<Self> {
        if theta.len() < 2 || theta.len() % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "parameter vector of length {} is not of the form 2P+2",
                theta.len()
            )));
        }
        let p = theta.len() / 2 - 1;
        Ok(Self {
            alpha0: theta[0],
            alpha: theta[1..=p].to_vec(),
            beta0: theta[p + 1],
            beta: theta[p + 2..].to_vec(),
        })
    }

    fn check_row(&self, x_row: &[f64]) -> Result<()> {
        if x_row.len() != self.alpha.len() {
            return Err(Error::DimensionMismatch {
                expected: self.alpha.len(),
                found: x_row.len(),
            });
        }
        Ok(())
    }

    /// Exponent of the transient term, `α0 + α·x`.
    pub(crate) fn transient_exponent(&self, x_row: &[f64]) -> f64 {
        self.alpha0 + dot(&self.alpha, x_row)
    }

    /// Exponent of the latent increment, `β0 + β·x`.
    pub(crate) fn latent_exponent(&self, x_row: &[f64]) -> f64 {
        self.beta0 + dot(&self.beta, x_row)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Transient hazard `g = exp(α0 + α·x)`.
pub fn g_term(params: &ModelParams, x_row: &[f64]) -> Result<f64> {
    params.check_row(x_row)?;
    checked_exp(params.transient_exponent(x_row))
}

/// One-step increment of the latent hazard, `exp(β0 + β·x)`.
pub fn mu_step(params: &ModelParams, x_row: &[f64]) -> Result<f64> {
    params.check_row(x_row)?;
    checked_exp(params.latent_exponent(x_row))
}

/// Per-step values of `μ`, `g` and `λ` for one lifetime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardTrajectory {
    pub mu: Vec<f64>,
    pub g: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl HazardTrajectory {
    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// Values of the requested decision criterion.
    pub fn criterion(&self, criterion: Criterion) -> &[f64] {
        match criterion {
            Criterion::TotalHazard => &self.lambda,
            Criterion::LatentOnly => &self.mu,
        }
    }
}

/// Evaluates the hazard decomposition along a lifetime.
pub fn trajectory(params: &ModelParams, life: &Lifetime) -> Result<HazardTrajectory> {
    if life.n_features() != params.n_features() {
        return Err(Error::DimensionMismatch {
            expected: params.n_features(),
            found: life.n_features(),
        });
    }
    let t = life.len();
    let mut mu = Vec::with_capacity(t);
    let mut g = Vec::with_capacity(t);
    let mut lambda = Vec::with_capacity(t);
    let mut acc = 0.0;
    for row in life.rows() {
        acc += checked_exp(params.latent_exponent(row))?;
        let gj = checked_exp(params.transient_exponent(row))?;
        mu.push(acc);
        g.push(gj);
        lambda.push(acc + gj);
    }
    Ok(HazardTrajectory { mu, g, lambda })
}

/// `Σ_{j ≤ upto} λ(j)` for a 1-based step index.
pub fn cumulative_hazard(traj: &HazardTrajectory, upto: usize) -> Result<f64> {
    if upto == 0 || upto > traj.len() {
        return Err(Error::IndexOutOfRange {
            index: upto,
            len: traj.len(),
        });
    }
    Ok(traj.lambda[..upto].iter().sum())
}

/// Anything that produces a per-step hazard path for a lifetime.
pub trait HazardModel: Sync {
    fn n_features(&self) -> usize;

    /// Total hazard at every step of `life`.
    fn hazard_path(&self, life: &Lifetime) -> Result<Vec<f64>>;

    /// Values of a decision criterion. Models without a latent decomposition
    /// fall back to the total hazard.
    fn criterion_path(&self, life: &Lifetime, criterion: Criterion) -> Result<Vec<f64>> {
        let _ = criterion;
        self.hazard_path(life)
    }
}

impl HazardModel for ModelParams {
    fn n_features(&self) -> usize {
        self.alpha.len()
    }

    fn hazard_path(&self, life: &Lifetime) -> Result<Vec<f64>> {
        Ok(trajectory(self, life)?.lambda)
    }

    fn criterion_path(&self, life: &Lifetime, criterion: Criterion) -> Result<Vec<f64>> {
        let traj = trajectory(self, life)?;
        Ok(match criterion {
            Criterion::TotalHazard => traj.lambda,
            Criterion::LatentOnly => traj.mu,
        })
    }
}
