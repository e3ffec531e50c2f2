use serde::Serialize;

use latent_hazard::data::{kfold, write_csv_rows};
use latent_hazard::decision::optimize_threshold;
use latent_hazard::evaluation::{cost_comparison, criterion_paths, ModelPolicy};
use latent_hazard::Error;

use super::fit::fit_pair;
use super::load_data;
use super::warn::cost_spec;
use crate::args::CompareArgs;
use crate::error::{required, CliError};

#[derive(Serialize)]
struct Row {
    /// 1-based fold, or `all` for the totals.
    fold: String,
    model: String,
    #[serde(with = "latent_hazard::data::extended_f64")]
    threshold: f64,
    total_cost: f64,
    n_lifetimes: usize,
    warn_at_failure: f64,
    reduction_pct: f64,
}

pub fn run(a: &CompareArgs) -> Result<(), CliError> {
    let data = required(&a.data, "data")?;
    let out = required(&a.out, "out")?;
    let ds = load_data(data, a.forward_fill)?;
    let cost = cost_spec(&a.cost)?;
    let folds = kfold(ds.len(), a.folds, a.seed)?;
    let mut rows: Vec<Row> = Vec::new();
    for (k, fold) in folds.iter().enumerate() {
        let mut train = ds.subset(&fold.train)?;
        let mut test = ds.subset(&fold.test)?;
        if !a.no_normalize {
            let all: Vec<usize> = (0..train.len()).collect();
            let norm = train.normalize(&all)?.clone();
            test.apply_normalization(norm)?;
        }
        let mut policies = Vec::new();
        for file in fit_pair(&train, a)? {
            let model = file.hazard_model()?;
            let train_paths = criterion_paths(model.as_ref(), &train.lifetimes, a.cost.criterion)?;
            let fit = optimize_threshold(&train_paths, &cost, a.cost.include_censored)?;
            policies.push(ModelPolicy {
                name: file.model_type().to_string(),
                paths: criterion_paths(model.as_ref(), &test.lifetimes, a.cost.criterion)?,
                threshold: fit.threshold,
            });
        }
        let table = cost_comparison(&policies, &cost)?;
        for r in &table.rows {
            rows.push(Row {
                fold: (k + 1).to_string(),
                model: r.model.clone(),
                threshold: r.threshold,
                total_cost: r.total_cost,
                n_lifetimes: r.n_lifetimes,
                warn_at_failure: table.warn_at_failure,
                reduction_pct: table.reduction_pct(r),
            });
        }
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput("no folds to compare".into()).into());
    }
    let mut totals = Vec::new();
    for name in ["latent_state", "cox_weibull"] {
        let of_model: Vec<&Row> = rows.iter().filter(|r| r.model == name).collect();
        let total_cost: f64 = of_model.iter().map(|r| r.total_cost).sum();
        let warn_at_failure: f64 = of_model.iter().map(|r| r.warn_at_failure).sum();
        totals.push(Row {
            fold: "all".into(),
            model: name.into(),
            threshold: f64::NAN,
            total_cost,
            n_lifetimes: of_model.iter().map(|r| r.n_lifetimes).sum(),
            warn_at_failure,
            reduction_pct: if warn_at_failure == 0.0 {
                0.0
            } else {
                100.0 * (warn_at_failure - total_cost) / warn_at_failure
            },
        });
    }
    for t in &totals {
        println!(
            "{}: total cost {} ({:.1}% below warning at failure, {})",
            t.model, t.total_cost, t.reduction_pct, t.warn_at_failure
        );
    }
    rows.extend(totals);
    write_csv_rows(out, &rows)?;
    Ok(())
}
