use serde::Serialize;

use latent_hazard::data::write_csv_rows;
use latent_hazard::model::trajectory;

use super::{load_data_for, load_model};
use crate::args::PredictArgs;
use crate::error::{required, CliError};

#[derive(Serialize)]
struct Row<'a> {
    lifetime_id: &'a str,
    unit_id: &'a str,
    t: usize,
    /// Empty for models without a latent term.
    mu: Option<f64>,
    g: Option<f64>,
    lambda: f64,
}

pub fn run(a: &PredictArgs) -> Result<(), CliError> {
    let model = load_model(required(&a.model_file, "model-file")?)?;
    let ds = load_data_for(&model, required(&a.data, "data")?, a.forward_fill)?;
    let out = required(&a.out, "out")?;
    let latent = model.file.latent_params().transpose()?;
    let mut rows = Vec::new();
    for life in &ds.lifetimes {
        let (mu, g, lambda) = match &latent {
            Some(params) => {
                let traj = trajectory(params, life)?;
                (Some(traj.mu), Some(traj.g), traj.lambda)
            }
            None => (None, None, model.model.hazard_path(life)?),
        };
        for (j, &lambda) in lambda.iter().enumerate() {
            rows.push(Row {
                lifetime_id: life.id(),
                unit_id: life.unit_id(),
                t: j + 1,
                mu: mu.as_ref().map(|m| m[j]),
                g: g.as_ref().map(|g| g[j]),
                lambda,
            });
        }
    }
    write_csv_rows(out, &rows)?;
    Ok(())
}
