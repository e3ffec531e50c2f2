use latent_hazard::cox::fit_cox;
use latent_hazard::data::write_json;
use latent_hazard::optimizer::{fit_coordinate_descent, fit_reference};
use latent_hazard::{Dataset, Error, ModelFile};

use super::{fit_config, load_data, loss_spec};
use crate::args::{CompareArgs, FitArgs, ModelKind, OptimizerArgs, OptimizerKind, PenaltyArgs};
use crate::error::{required, CliError};

pub fn run(a: &FitArgs) -> Result<(), CliError> {
    let data = required(&a.data, "data")?;
    let out = required(&a.out, "out")?;
    let mut ds = load_data(data, a.forward_fill)?;
    if ds.is_empty() {
        return Err(Error::Data {
            path: data.clone(),
            message: "no lifetimes".into(),
        }
        .into());
    }
    if a.normalize {
        let all: Vec<usize> = (0..ds.len()).collect();
        ds.normalize(&all)?;
    }
    let file = fit_model(&ds, a.model, &a.penalty, &a.optimizer)?;
    write_json(out, &file)?;
    Ok(())
}

/// Fits one model on `ds` and reports the outcome on stdout.
pub(super) fn fit_model(
    ds: &Dataset,
    kind: ModelKind,
    penalty: &PenaltyArgs,
    optimizer: &OptimizerArgs,
) -> Result<ModelFile, CliError> {
    let spec = loss_spec(penalty)?;
    let cfg = fit_config(optimizer)?;
    let names = ds.feature_names.clone();
    let norm = ds.normalization.clone();
    let (file, loss, iterations, converged) = match kind {
        ModelKind::Latent => {
            let fit = match optimizer.optimizer {
                OptimizerKind::Cd => fit_coordinate_descent(&ds.lifetimes, &spec, &cfg)?,
                OptimizerKind::Reference => fit_reference(&ds.lifetimes, &spec, &cfg)?,
            };
            let file = ModelFile::from_latent(&fit, names, norm);
            (file, fit.loss, fit.iterations, fit.converged)
        }
        ModelKind::Cox => {
            let fit = fit_cox(&ds.lifetimes, &spec, &cfg)?;
            let file = ModelFile::from_cox(&fit, names, norm);
            (file, fit.loss, fit.iterations, fit.converged)
        }
    };
    println!(
        "{}: loss {loss:.6} after {iterations} iterations",
        file.model_type()
    );
    if !converged {
        eprintln!("lshm: warning: {} fit did not converge", file.model_type());
    }
    Ok(file)
}

/// Fits both models of a comparison on one training split.
pub(super) fn fit_pair(ds: &Dataset, a: &CompareArgs) -> Result<[ModelFile; 2], CliError> {
    Ok([
        fit_model(ds, ModelKind::Latent, &a.penalty, &a.optimizer)?,
        fit_model(ds, ModelKind::Cox, &a.penalty, &a.optimizer)?,
    ])
}
