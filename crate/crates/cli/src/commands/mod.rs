mod compare;
mod evaluate;
mod fit;
mod predict;
mod simulate;
mod warn;

use std::path::Path;

use latent_hazard::data::{read_json, read_lifetimes_csv, IngestOptions};
use latent_hazard::{
    Dataset, Error, FitConfig, HazardModel, ModelFile, RegularizedLossSpec,
};
use latent_hazard::optimizer::LineSearchMethod;

use crate::args::{Command, LineSearchKind, OptimizerArgs, PenaltyArgs};
use crate::error::CliError;

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate(a) => simulate::run(&a),
        Command::Fit(a) => fit::run(&a),
        Command::Predict(a) => predict::run(&a),
        Command::Warn(a) => warn::run(&a),
        Command::Tradeoff(a) => warn::tradeoff(&a),
        Command::Evaluate(a) => evaluate::run(&a),
        Command::Compare(a) => compare::run(&a),
    }
}

fn load_data(path: &Path, forward_fill: bool) -> Result<Dataset, CliError> {
    Ok(read_lifetimes_csv(path, IngestOptions { forward_fill })?)
}

/// A model file with the hazard model it describes.
struct LoadedModel {
    file: ModelFile,
    model: Box<dyn HazardModel>,
}

fn load_model(path: &Path) -> Result<LoadedModel, CliError> {
    let file: ModelFile = read_json(path)?;
    let model = file.hazard_model().map_err(|e| match e {
        Error::InvalidInput(message) | Error::InvalidParameter(message) => Error::Data {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })?;
    Ok(LoadedModel { file, model })
}

/// Reads lifetimes for a fitted model and scales them as in training.
fn load_data_for(model: &LoadedModel, path: &Path, forward_fill: bool) -> Result<Dataset, CliError> {
    let mut ds = load_data(path, forward_fill)?;
    if ds.feature_names != model.file.feature_names() {
        return Err(Error::Data {
            path: path.to_path_buf(),
            message: format!(
                "features {:?} do not match the model's {:?}",
                ds.feature_names,
                model.file.feature_names()
            ),
        }
        .into());
    }
    if let Some(norm) = model.file.normalization() {
        ds.apply_normalization(norm.clone())?;
    }
    Ok(ds)
}

fn loss_spec(p: &PenaltyArgs) -> Result<RegularizedLossSpec, CliError> {
    let mut spec = RegularizedLossSpec::new(p.penalty_alpha, p.penalty_beta)?;
    spec.penalize_intercepts = p.penalize_intercepts;
    Ok(spec)
}

fn fit_config(o: &OptimizerArgs) -> Result<FitConfig, CliError> {
    let cfg = FitConfig {
        epsilon: o.epsilon,
        max_iters: o.max_iters,
        line_search: match o.line_search {
            LineSearchKind::Derivative => LineSearchMethod::DerivativeRoot,
            LineSearchKind::Golden => LineSearchMethod::GoldenSection,
        },
        ..FitConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}
