use serde::{Deserialize, Serialize};

use super::Normalization;
use crate::cox::{CoxFit, CoxParams};
use crate::error::{Error, Result};
use crate::likelihood::ObservedInformation;
use crate::model::{HazardModel, ModelParams};
use crate::optimizer::FittedModel;

/// Fitted latent state model as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentModelFile {
    pub feature_names: Vec<String>,
    pub alpha0: f64,
    pub alpha: Vec<f64>,
    pub beta0: f64,
    pub beta: Vec<f64>,
    pub c1_alpha: f64,
    pub c2_beta: f64,
    #[serde(default)]
    pub penalize_intercepts: bool,
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Row-major, parameter order `(α0, α, β0, β)`.
    pub information: Vec<f64>,
    pub normalization: Option<Normalization>,
}

/// Fitted Weibull proportional hazards model as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxModelFile {
    pub feature_names: Vec<String>,
    pub zeta: f64,
    pub eta: f64,
    pub coeffs: Vec<f64>,
    pub c1_alpha: f64,
    pub c2_beta: f64,
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Row-major, parameter order `(log ζ, log η, coeffs)`.
    pub information: Vec<f64>,
    pub normalization: Option<Normalization>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_type")]
pub enum ModelFile {
    #[serde(rename = "latent_state")]
    Latent(LatentModelFile),
    #[serde(rename = "cox_weibull")]
    Cox(CoxModelFile),
}

impl ModelFile {
    pub fn from_latent(
        fit: &FittedModel,
        feature_names: Vec<String>,
        normalization: Option<Normalization>,
    ) -> Self {
        Self::Latent(LatentModelFile {
            feature_names,
            alpha0: fit.params.alpha0,
            alpha: fit.params.alpha.clone(),
            beta0: fit.params.beta0,
            beta: fit.params.beta.clone(),
            c1_alpha: fit.spec.c1_alpha,
            c2_beta: fit.spec.c2_beta,
            penalize_intercepts: fit.spec.penalize_intercepts,
            loss: fit.loss,
            iterations: fit.iterations,
            converged: fit.converged,
            information: fit.information.to_row_major(),
            normalization,
        })
    }

    pub fn from_cox(
        fit: &CoxFit,
        feature_names: Vec<String>,
        normalization: Option<Normalization>,
    ) -> Self {
        Self::Cox(CoxModelFile {
            feature_names,
            zeta: fit.params.zeta,
            eta: fit.params.eta,
            coeffs: fit.params.coeffs.clone(),
            c1_alpha: fit.spec.c1_alpha,
            c2_beta: fit.spec.c2_beta,
            loss: fit.loss,
            iterations: fit.iterations,
            converged: fit.converged,
            information: fit.information.to_row_major(),
            normalization,
        })
    }

    pub fn model_type(&self) -> &'static str {
        match self {
            Self::Latent(_) => "latent_state",
            Self::Cox(_) => "cox_weibull",
        }
    }

    pub fn feature_names(&self) -> &[String] {
        match self {
            Self::Latent(m) => &m.feature_names,
            Self::Cox(m) => &m.feature_names,
        }
    }

    pub fn normalization(&self) -> Option<&Normalization> {
        match self {
            Self::Latent(m) => m.normalization.as_ref(),
            Self::Cox(m) => m.normalization.as_ref(),
        }
    }

    pub fn information(&self) -> Result<ObservedInformation> {
        let (values, n) = match self {
            Self::Latent(m) => (&m.information, 2 * m.alpha.len() + 2),
            Self::Cox(m) => (&m.information, m.coeffs.len() + 2),
        };
        ObservedInformation::from_row_major(n, values)
    }

    /// Checks internal consistency and returns the hazard model.
    pub fn hazard_model(&self) -> Result<Box<dyn HazardModel>> {
        let p = self.feature_names().len();
        let model: Box<dyn HazardModel> = match self {
            Self::Latent(m) => Box::new(self.latent_params_of(m)?),
            Self::Cox(m) => Box::new(CoxParams::new(m.zeta, m.eta, m.coeffs.clone())?),
        };
        if model.n_features() != p {
            return Err(Error::InvalidInput(format!(
                "model has {} coefficients per term but {p} feature names",
                model.n_features()
            )));
        }
        if let Some(norm) = self.normalization() {
            norm.validate(p)?;
        }
        Ok(model)
    }

    fn latent_params_of(&self, m: &LatentModelFile) -> Result<ModelParams> {
        ModelParams::new(m.alpha0, m.alpha.clone(), m.beta0, m.beta.clone())
    }

    /// Latent parameters, if this is a latent state model.
    pub fn latent_params(&self) -> Option<Result<ModelParams>> {
        match self {
            Self::Latent(m) => Some(self.latent_params_of(m)),
            Self::Cox(_) => None,
        }
    }
}
