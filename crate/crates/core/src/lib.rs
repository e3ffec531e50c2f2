//! Latent state hazard model.
//!
//! The hazard of a unit at step `j` is split into a monotone latent
//! degradation term and a transient term driven by current conditions,
//!
//! ```text
//! λ(j) = μ(j) + g(j),   μ(j) = Σ_{l≤j} exp(β0 + β·x(l)),   g(j) = exp(α0 + α·x(j))
//! ```
//!
//! The crate covers evaluation of the decomposition ([`model`]), the
//! discrete-time censored likelihood and its derivatives ([`likelihood`]),
//! coordinate-descent fitting ([`optimizer`]), warning-threshold training
//! ([`decision`]), data generators ([`simulator`]), a Weibull proportional
//! hazards baseline ([`cox`]), diagnostics ([`evaluation`]) and CSV/JSON
//! plumbing ([`data`]).

pub mod cox;
pub mod data;
pub mod decision;
pub mod error;
pub mod evaluation;
pub mod likelihood;
pub mod model;
pub mod optimizer;
pub mod simulator;

pub use cox::{CoxFit, CoxParams};
pub use data::{Dataset, ModelFile, Normalization};
pub use decision::{
    CostSpec, Criterion, CriterionPath, ThresholdFit, TradeoffPoint, WarningPolicy,
};
pub use error::{Error, Result};
pub use evaluation::{CostTable, KsResult, RankReport};
pub use likelihood::{ObservedInformation, RegularizedLossSpec};
pub use model::{Event, HazardModel, HazardTrajectory, Lifetime, ModelParams};
pub use optimizer::{FitConfig, FittedModel};
pub use simulator::{BianConfig, HmmConfig, SimConfig};
