use std::slice;

use serde::Serialize;

use latent_hazard::data::{write_csv_rows, write_json};
use latent_hazard::decision::{
    optimize_threshold, pinball_cost, threshold_cost, threshold_grid, tradeoff_curve,
    warning_time,
};
use latent_hazard::evaluation::criterion_paths;
use latent_hazard::{CostSpec, CriterionPath, Event, ThresholdFit, WarningPolicy};

use super::{load_data_for, load_model};
use crate::args::{CostArgs, TradeoffArgs, WarnArgs};
use crate::error::{required, CliError};

#[derive(Serialize)]
struct Summary {
    model_type: &'static str,
    policy: WarningPolicy,
    include_censored: bool,
    /// Fit on the training lifetimes.
    train: ThresholdFit,
    /// The trained threshold on the report lifetimes.
    evaluation: ThresholdFit,
    /// Cost of warning at failure on the report lifetimes.
    warn_at_failure: f64,
}

#[derive(Serialize)]
struct ReportRow<'a> {
    lifetime_id: &'a str,
    unit_id: &'a str,
    length: usize,
    event: Event,
    warning_step: usize,
    lead_time: usize,
    /// False for lifetimes shorter than `d` and for censored lifetimes
    /// unless they are included.
    charged: bool,
    cost: f64,
    warn_at_failure_cost: f64,
}

pub(super) fn cost_spec(c: &CostArgs) -> Result<CostSpec, CliError> {
    Ok(CostSpec::new(c.d, c.c1, c.c2)?)
}

pub fn run(a: &WarnArgs) -> Result<(), CliError> {
    let model = load_model(required(&a.model_file, "model-file")?)?;
    let train = load_data_for(&model, required(&a.data, "data")?, a.forward_fill)?;
    let test = match &a.test {
        Some(path) => load_data_for(&model, path, a.forward_fill)?,
        None => train.clone(),
    };
    let out = required(&a.out, "out")?;
    let cost = cost_spec(&a.cost)?;
    let incl = a.cost.include_censored;
    let train_paths = criterion_paths(model.model.as_ref(), &train.lifetimes, a.cost.criterion)?;
    let fit = optimize_threshold(&train_paths, &cost, incl)?;
    let test_paths = criterion_paths(model.model.as_ref(), &test.lifetimes, a.cost.criterion)?;
    let evaluation = threshold_cost(&test_paths, fit.threshold, &cost, incl)?;

    let mut rows = Vec::with_capacity(test_paths.len());
    for (life, path) in test.lifetimes.iter().zip(&test_paths) {
        let single = threshold_cost(slice::from_ref(path), fit.threshold, &cost, incl)?;
        let charged = single.n_eligible == 1;
        let warning = warning_time(&path.values, fit.threshold);
        rows.push(ReportRow {
            lifetime_id: life.id(),
            unit_id: life.unit_id(),
            length: path.len(),
            event: path.event,
            warning_step: warning,
            lead_time: path.len() - warning,
            charged,
            cost: single.total_cost,
            warn_at_failure_cost: if charged && path.event == Event::Failed {
                pinball_cost(&cost, 0)
            } else {
                0.0
            },
        });
    }
    let summary = Summary {
        model_type: model.file.model_type(),
        policy: WarningPolicy::new(a.cost.criterion, fit.threshold, cost)?,
        include_censored: incl,
        warn_at_failure: rows.iter().map(|r| r.warn_at_failure_cost).sum(),
        train: fit,
        evaluation,
    };
    write_json(out, &summary)?;
    if let Some(report) = &a.report {
        write_csv_rows(report, &rows)?;
    }
    println!(
        "threshold {:?}: cost {} against {} when warning at failure",
        summary.policy.threshold, summary.evaluation.total_cost, summary.warn_at_failure
    );
    Ok(())
}

pub fn tradeoff(a: &TradeoffArgs) -> Result<(), CliError> {
    let model = load_model(required(&a.model_file, "model-file")?)?;
    let ds = load_data_for(&model, required(&a.data, "data")?, a.forward_fill)?;
    let out = required(&a.out, "out")?;
    let paths: Vec<CriterionPath> = criterion_paths(model.model.as_ref(), &ds.lifetimes, a.criterion)?;
    let curve = tradeoff_curve(&paths, &threshold_grid(&paths))?;
    write_csv_rows(out, &curve)?;
    Ok(())
}
