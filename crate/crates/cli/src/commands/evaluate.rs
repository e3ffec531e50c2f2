use serde::Serialize;

use latent_hazard::data::write_csv_rows;
use latent_hazard::evaluation::{cox_snell_residuals, hazard_rank_percentile, ks_test_exp1};

use super::{load_data_for, load_model};
use crate::args::EvaluateArgs;
use crate::error::{required, CliError};

#[derive(Serialize)]
struct ResidualRow<'a> {
    lifetime_id: &'a str,
    unit_id: &'a str,
    length: usize,
    residual: f64,
}

pub fn run(a: &EvaluateArgs) -> Result<(), CliError> {
    let model = load_model(required(&a.model_file, "model-file")?)?;
    let ds = load_data_for(&model, required(&a.data, "data")?, a.forward_fill)?;
    let dir = required(&a.out_dir, "out-dir")?;
    std::fs::create_dir_all(dir).map_err(latent_hazard::Error::from)?;

    let residuals = cox_snell_residuals(model.model.as_ref(), &ds.lifetimes)?;
    let failed = ds.lifetimes.iter().filter(|l| l.event().is_failure());
    let rows: Vec<ResidualRow> = failed
        .zip(&residuals)
        .map(|(l, &residual)| ResidualRow {
            lifetime_id: l.id(),
            unit_id: l.unit_id(),
            length: l.len(),
            residual,
        })
        .collect();
    write_csv_rows(&dir.join("residuals.csv"), &rows)?;

    let ks = ks_test_exp1(&residuals)?;
    write_csv_rows(&dir.join("ks.csv"), &[ks])?;

    let ranks = hazard_rank_percentile(model.model.as_ref(), &ds.lifetimes, &a.offsets, a.criterion)?;
    write_csv_rows(&dir.join("rank.csv"), &ranks.records)?;
    for s in &ranks.skipped {
        eprintln!(
            "lshm: rank of lifetime {} at offset {} skipped: {}",
            s.lifetime_id, s.eval_offset, s.reason
        );
    }
    println!(
        "K-S D = {:.4}, p = {:.4} on {} residuals",
        ks.statistic, ks.p_value, ks.n
    );
    Ok(())
}
