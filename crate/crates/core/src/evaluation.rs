//! Diagnostics and comparisons: Cox–Snell residuals with a Kolmogorov–Smirnov
//! test against Exp(1), hazard rank percentiles, remaining-useful-life error,
//! warning-cost tables and a sign test.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decision::{
    optimize_threshold, pinball_cost, threshold_cost, warning_time, CostSpec, Criterion,
    CriterionPath,
};
use crate::error::{Error, Result};
use crate::model::{Event, HazardModel, Lifetime};

const KS_TERMS: usize = 100;

/// Criterion values of every lifetime, in input order.
pub fn criterion_paths<M: HazardModel + ?Sized>(
    model: &M,
    data: &[Lifetime],
    criterion: Criterion,
) -> Result<Vec<CriterionPath>> {
    data.par_iter()
        .map(|life| {
            Ok(CriterionPath::new(
                model.criterion_path(life, criterion)?,
                life.event(),
            ))
        })
        .collect()
}

/// Cumulative hazard at the failure step of every failed lifetime.
pub fn cox_snell_residuals<M: HazardModel + ?Sized>(
    model: &M,
    data: &[Lifetime],
) -> Result<Vec<f64>> {
    data.par_iter()
        .filter(|l| l.event().is_failure())
        .map(|l| Ok(model.hazard_path(l)?.iter().sum()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Survival function of the Kolmogorov distribution, `P(K > x)`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        // Jacobi theta form converges fast for small x
        let w = std::f64::consts::PI.powi(2) / (8.0 * x * x);
        let cdf: f64 = (1..=KS_TERMS)
            .map(|k| (-((2 * k - 1) as f64).powi(2) * w).exp())
            .sum::<f64>()
            * (2.0 * std::f64::consts::PI).sqrt()
            / x;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        for k in 1..=KS_TERMS {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sum += sign * (-2.0 * (k * k) as f64 * x * x).exp();
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

/// One-sample K–S test of `residuals` against the unit exponential.
pub fn ks_test_exp1(residuals: &[f64]) -> Result<KsResult> {
    if residuals.is_empty() {
        return Err(Error::InvalidInput(
            "K-S test needs at least one residual".into(),
        ));
    }
    if let Some(bad) = residuals.iter().find(|r| !r.is_finite()) {
        return Err(Error::InvalidInput(format!("residual {bad} is not finite")));
    }
    let mut x = residuals.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d = 0.0f64;
    for (i, &xi) in x.iter().enumerate() {
        let f = -(-xi.max(0.0)).exp_m1();
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    let sn = n.sqrt();
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d),
        n: x.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRecord {
    pub lifetime_id: String,
    pub unit_id: String,
    /// Steps before failure at which the cohort is compared.
    pub eval_offset: usize,
    pub percentile: f64,
    pub cohort_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedRank {
    pub lifetime_id: String,
    pub eval_offset: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub records: Vec<RankRecord>,
    pub skipped: Vec<SkippedRank>,
}

/// Rank of each failed lifetime's criterion value among the lifetimes still
/// running at its failure time.
///
/// For lifetime `i` failing at `T` and offset `o`, the cohort is every other
/// lifetime of length at least `T`, and values are compared at step `T − o`.
/// The percentile is the fraction of the cohort with a strictly lower value.
pub fn hazard_rank_percentile<M: HazardModel + ?Sized>(
    model: &M,
    data: &[Lifetime],
    eval_offsets: &[usize],
    criterion: Criterion,
) -> Result<RankReport> {
    let paths = criterion_paths(model, data, criterion)?;
    Ok(rank_percentiles(data, &paths, eval_offsets))
}

/// [`hazard_rank_percentile`] on precomputed paths aligned with `data`.
pub fn rank_percentiles(
    data: &[Lifetime],
    paths: &[CriterionPath],
    eval_offsets: &[usize],
) -> RankReport {
    let mut report = RankReport::default();
    for (i, life) in data.iter().enumerate() {
        if !life.event().is_failure() {
            continue;
        }
        let t = life.len();
        for &offset in eval_offsets {
            let skip = |reason: &str| SkippedRank {
                lifetime_id: life.id().to_string(),
                eval_offset: offset,
                reason: reason.to_string(),
            };
            if offset >= t {
                report
                    .skipped
                    .push(skip("offset reaches the start of the lifetime"));
                continue;
            }
            let step = t - offset;
            let own = paths[i].values[step - 1];
            let mut cohort = 0;
            let mut lower = 0;
            for (k, other) in paths.iter().enumerate() {
                if k == i || other.len() < t {
                    continue;
                }
                cohort += 1;
                if other.values[step - 1] < own {
                    lower += 1;
                }
            }
            if cohort == 0 {
                report.skipped.push(skip("empty cohort"));
                continue;
            }
            report.records.push(RankRecord {
                lifetime_id: life.id().to_string(),
                unit_id: life.unit_id().to_string(),
                eval_offset: offset,
                percentile: lower as f64 / cohort as f64,
                cohort_size: cohort,
            });
        }
    }
    report
}

/// `100·|T − (R + d)| / T`.
pub fn rul_prediction_error(actual: usize, warning: usize, d: usize) -> f64 {
    let estimate = (warning + d) as f64;
    100.0 * (actual as f64 - estimate).abs() / actual as f64
}

/// Remaining life at the evaluation time `ceil(fraction·T)`.
pub fn remaining_life_at(actual: usize, fraction: f64) -> usize {
    let at = ((fraction * actual as f64).ceil() as usize).min(actual);
    actual - at
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RulRecord {
    pub index: usize,
    pub actual: usize,
    pub d: usize,
    #[serde(with = "crate::data::extended_f64")]
    pub threshold: f64,
    pub warning: usize,
    pub error_pct: f64,
}

/// Remaining-useful-life errors on failed test lifetimes.
///
/// Each test lifetime gets its own lead time `d`, the remaining life at
/// `eval_fraction` of its length. The threshold for that `d` is trained on
/// `train` with `c1 = c2`, the warning step `R` is read off the test path and
/// the estimated lifetime is `R + d`. Lifetimes with `d = 0` or without an
/// eligible training set for their `d` are left out.
pub fn rul_errors(
    train: &[CriterionPath],
    test: &[CriterionPath],
    eval_fraction: f64,
) -> Result<Vec<RulRecord>> {
    if !(0.0..=1.0).contains(&eval_fraction) {
        return Err(Error::InvalidParameter(format!(
            "eval_fraction must be in [0, 1], got {eval_fraction}"
        )));
    }
    let mut thresholds: BTreeMap<usize, Option<f64>> = BTreeMap::new();
    let mut out = Vec::new();
    for (index, path) in test.iter().enumerate() {
        if path.event != Event::Failed || path.is_empty() {
            continue;
        }
        let actual = path.len();
        let d = remaining_life_at(actual, eval_fraction);
        if d == 0 {
            continue;
        }
        let threshold = *thresholds.entry(d).or_insert_with(|| {
            optimize_threshold(
                train,
                &CostSpec {
                    d,
                    c1: 1.0,
                    c2: 1.0,
                },
                false,
            )
            .ok()
            .map(|f| f.threshold)
        });
        let Some(threshold) = threshold else { continue };
        let warning = warning_time(&path.values, threshold);
        out.push(RulRecord {
            index,
            actual,
            d,
            threshold,
            warning,
            error_pct: rul_prediction_error(actual, warning, d),
        });
    }
    Ok(out)
}

/// Criterion paths and trained threshold of one model on the test set.
#[derive(Debug, Clone)]
pub struct ModelPolicy {
    pub name: String,
    pub paths: Vec<CriterionPath>,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub model: String,
    #[serde(with = "crate::data::extended_f64")]
    pub threshold: f64,
    pub total_cost: f64,
    pub n_lifetimes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostTable {
    pub rows: Vec<CostRow>,
    /// Cost of warning exactly at failure, `Σ C_d(0)`.
    pub warn_at_failure: f64,
}

impl CostTable {
    /// Percent reduction relative to warning at failure.
    pub fn reduction_pct(&self, row: &CostRow) -> f64 {
        if self.warn_at_failure == 0.0 {
            0.0
        } else {
            100.0 * (self.warn_at_failure - row.total_cost) / self.warn_at_failure
        }
    }
}

/// Total test cost of each model's trained threshold next to the
/// warn-at-failure benchmark. Only failed lifetimes of length at least `d`
/// are charged, as in threshold training.
pub fn cost_comparison(models: &[ModelPolicy], cost: &CostSpec) -> Result<CostTable> {
    cost.validate()?;
    let mut rows = Vec::with_capacity(models.len());
    let mut benchmark = None;
    for m in models {
        let fit = threshold_cost(&m.paths, m.threshold, cost, false)?;
        let eligible = m
            .paths
            .iter()
            .filter(|p| p.event == Event::Failed && p.len() >= cost.d)
            .count();
        let warn_at_failure = eligible as f64 * pinball_cost(cost, 0);
        match benchmark {
            None => benchmark = Some(warn_at_failure),
            Some(b) if b != warn_at_failure => {
                return Err(Error::InvalidInput(format!(
                    "model {} was evaluated on a different test set",
                    m.name
                )))
            }
            Some(_) => {}
        }
        rows.push(CostRow {
            model: m.name.clone(),
            threshold: m.threshold,
            total_cost: fit.total_cost,
            n_lifetimes: fit.n_eligible,
        });
    }
    Ok(CostTable {
        rows,
        warn_at_failure: benchmark.unwrap_or(0.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignTest {
    pub positive: usize,
    pub negative: usize,
    pub ties: usize,
    /// Two-sided exact binomial p-value; ties are dropped.
    pub p_value: f64,
}

/// Sign test of paired differences against a zero median.
pub fn sign_test(differences: &[f64]) -> SignTest {
    let positive = differences.iter().filter(|d| **d > 0.0).count();
    let negative = differences.iter().filter(|d| **d < 0.0).count();
    let ties = differences.len() - positive - negative;
    let n = positive + negative;
    let k = positive.min(negative);
    // P(X ≤ k) for X ~ Bin(n, 1/2), via log binomial coefficients
    let mut log_c = 0.0;
    let mut tail = 0.0;
    for i in 0..=k {
        if i > 0 {
            log_c += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        tail += (log_c - n as f64 * std::f64::consts::LN_2).exp();
    }
    SignTest {
        positive,
        negative,
        ties,
        p_value: (2.0 * tail).min(1.0),
    }
}
