//! Warning generation by thresholding an estimated hazard path.
//!
//! A warning for lifetime `i` is raised at the first step `R` where the
//! criterion reaches the threshold `γ`, or at the failure step `T` if it never
//! does. A warning `ξ = T - R` steps before failure costs
//! `c1·(d - ξ)` if late (`ξ < d`) and `c2·(ξ - d)` if early. The threshold is
//! chosen to minimize the average cost over training lifetimes with `T ≥ d`.
//!
//! The empirical risk is piecewise constant in `γ` and only changes at
//! observed criterion values, so the minimization is exact over that finite
//! candidate set (plus `0` and `+∞`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Event, HazardTrajectory};

/// Which quantity is compared against the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Criterion {
    /// Total hazard `λ = μ + g`.
    #[default]
    #[serde(rename = "lambda")]
    TotalHazard,
    /// Latent degradation state `μ` only.
    #[serde(rename = "mu")]
    LatentOnly,
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambda" => Ok(Criterion::TotalHazard),
            "mu" => Ok(Criterion::LatentOnly),
            other => Err(Error::InvalidInput(format!(
                "unknown criterion {other:?}, expected lambda or mu"
            ))),
        }
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Criterion::TotalHazard => "lambda",
            Criterion::LatentOnly => "mu",
        })
    }
}

/// Lead time and unit costs of the pinball cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    /// Ideal lead time in steps.
    pub d: usize,
    /// Unit cost of a late warning.
    pub c1: f64,
    /// Unit cost of an early warning.
    pub c2: f64,
}

impl CostSpec {
    pub fn new(d: usize, c1: f64, c2: f64) -> Result<Self> {
        let spec = Self { d, c1, c2 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidParameter(
                "lead time d must be at least 1".into(),
            ));
        }
        if !(self.c1 >= 0.0 && self.c2 >= 0.0 && self.c1.is_finite() && self.c2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "unit costs must be finite and nonnegative, got c1={} c2={}",
                self.c1, self.c2
            )));
        }
        Ok(())
    }

    /// Late warnings are normally at least as expensive as early ones.
    /// Violating this is allowed but worth a warning from callers.
    pub fn prefers_early_warnings(&self) -> bool {
        self.c1 >= self.c2
    }

    /// `(late units, early units)` of a warning `xi` steps before failure.
    fn units(&self, xi: usize) -> (u64, u64) {
        if xi < self.d {
            ((self.d - xi) as u64, 0)
        } else {
            (0, (xi - self.d) as u64)
        }
    }
}

/// Cost of a warning issued `xi` steps before failure.
pub fn pinball_cost(cost: &CostSpec, xi: usize) -> f64 {
    if xi < cost.d {
        cost.c1 * (cost.d - xi) as f64
    } else {
        cost.c2 * (xi - cost.d) as f64
    }
}

/// A trained warning rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WarningPolicy {
    pub criterion: Criterion,
    /// `+∞` means "never warn before failure".
    #[serde(with = "crate::data::extended_f64")]
    pub threshold: f64,
    pub cost: CostSpec,
}

impl WarningPolicy {
    pub fn new(criterion: Criterion, threshold: f64, cost: CostSpec) -> Result<Self> {
        if !(threshold >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold must be nonnegative, got {threshold}"
            )));
        }
        cost.validate()?;
        Ok(Self {
            criterion,
            threshold,
            cost,
        })
    }

    /// 1-based warning step for a lifetime's hazard trajectory.
    pub fn warning_time(&self, traj: &HazardTrajectory) -> usize {
        warning_time(traj.criterion(self.criterion), self.threshold)
    }
}

/// First 1-based step whose value reaches `threshold`, or the path length.
pub fn warning_time(values: &[f64], threshold: f64) -> usize {
    values
        .iter()
        .position(|&v| v >= threshold)
        .map_or(values.len(), |j| j + 1)
}

/// Criterion values of one lifetime together with how it ended.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionPath {
    pub values: Vec<f64>,
    pub event: Event,
}

impl CriterionPath {
    pub fn new(values: Vec<f64>, event: Event) -> Self {
        Self { values, event }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Result of threshold training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFit {
    /// Optimal threshold; `+∞` when warning at failure is optimal.
    #[serde(with = "crate::data::extended_f64")]
    pub threshold: f64,
    /// Average cost `J_d` at the optimum.
    pub risk: f64,
    /// Total cost over the eligible lifetimes.
    pub total_cost: f64,
    pub n_eligible: usize,
    pub n_lifetimes: usize,
}

fn considered(path: &CriterionPath, include_censored: bool) -> bool {
    path.event == Event::Failed || include_censored
}

fn eligible(path: &CriterionPath, cost: &CostSpec, include_censored: bool) -> bool {
    considered(path, include_censored) && path.len() >= cost.d && !path.is_empty()
}

/// Cost units of warning at step `r` for this path.
fn path_units(path: &CriterionPath, cost: &CostSpec, r: usize) -> (u64, u64) {
    let xi = path.len() - r;
    match path.event {
        Event::Failed => cost.units(xi),
        // no failure observed: only operating time lost to the warning counts
        Event::Censored => (0, xi as u64),
    }
}

/// Minimizes the empirical warning cost over thresholds.
///
/// Only failed lifetimes are used unless `include_censored` is set, in which
/// case a censored lifetime is charged `c2` per step between its warning and
/// the end of observation. Lifetimes shorter than `d` are not charged but
/// still count in the average's denominator. Among equal-cost thresholds the
/// largest is returned.
pub fn optimize_threshold(
    paths: &[CriterionPath],
    cost: &CostSpec,
    include_censored: bool,
) -> Result<ThresholdFit> {
    cost.validate()?;
    let n_lifetimes = paths
        .iter()
        .filter(|p| considered(p, include_censored))
        .count();
    let used: Vec<&CriterionPath> = paths
        .iter()
        .filter(|p| eligible(p, cost, include_censored))
        .collect();
    if used.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no training lifetime has length >= d = {}",
            cost.d
        )));
    }
    if let Some(bad) = used.iter().flat_map(|p| &p.values).find(|v| v.is_nan()) {
        return Err(Error::InvalidInput(format!(
            "criterion value {bad} is not a number"
        )));
    }

    // candidate thresholds: 0, every observed value, +∞
    let mut candidates: Vec<f64> = std::iter::once(0.0)
        .chain(used.iter().flat_map(|p| p.values.iter().copied()))
        .chain(std::iter::once(f64::INFINITY))
        .collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    // Each lifetime's warning step only changes when γ passes one of its
    // running-maximum records. Record the change in cost units at the first
    // candidate strictly above the record value.
    let n_cand = candidates.len();
    let mut late_delta = vec![0i64; n_cand + 1];
    let mut early_delta = vec![0i64; n_cand + 1];
    let mut late0 = 0i64;
    let mut early0 = 0i64;
    for path in &used {
        let mut records: Vec<(f64, usize)> = Vec::new();
        for (j, &v) in path.values.iter().enumerate() {
            if records.last().is_none_or(|&(m, _)| v > m) {
                records.push((v, j + 1));
            }
        }
        let t = path.len();
        // γ ≤ first record (including γ = 0 when values are nonnegative)
        let (l, e) = path_units(path, cost, records[0].1);
        let (mut cur_l, mut cur_e) = (l as i64, e as i64);
        late0 += cur_l;
        early0 += cur_e;
        for (k, &(value, _)) in records.iter().enumerate() {
            let next_r = records.get(k + 1).map_or(t, |r| r.1);
            let (l, e) = path_units(path, cost, next_r);
            let at = candidates.partition_point(|&c| c <= value);
            late_delta[at] += l as i64 - cur_l;
            early_delta[at] += e as i64 - cur_e;
            cur_l = l as i64;
            cur_e = e as i64;
        }
    }

    // candidates at or below zero see the state before any record is passed,
    // provided the values are nonnegative; the deltas account for the rest
    let mut late = late0;
    let mut early = early0;
    let mut best: Option<(f64, f64, f64)> = None;
    for (idx, &gamma) in candidates.iter().enumerate() {
        late += late_delta[idx];
        early += early_delta[idx];
        let total = cost.c1 * late as f64 + cost.c2 * early as f64;
        let risk = total / n_lifetimes as f64;
        if best.is_none_or(|(_, r, _)| risk <= r) {
            best = Some((gamma, risk, total));
        }
    }
    let (threshold, risk, total_cost) = best.expect("candidate set is nonempty");
    Ok(ThresholdFit {
        threshold,
        risk,
        total_cost,
        n_eligible: used.len(),
        n_lifetimes,
    })
}

/// Cost of a fixed threshold under the conventions of [`optimize_threshold`].
pub fn threshold_cost(
    paths: &[CriterionPath],
    threshold: f64,
    cost: &CostSpec,
    include_censored: bool,
) -> Result<ThresholdFit> {
    cost.validate()?;
    let n_lifetimes = paths
        .iter()
        .filter(|p| considered(p, include_censored))
        .count();
    let mut late = 0u64;
    let mut early = 0u64;
    let mut n_eligible = 0;
    for path in paths.iter().filter(|p| eligible(p, cost, include_censored)) {
        let (l, e) = path_units(path, cost, warning_time(&path.values, threshold));
        late += l;
        early += e;
        n_eligible += 1;
    }
    let total_cost = cost.c1 * late as f64 + cost.c2 * early as f64;
    Ok(ThresholdFit {
        threshold,
        risk: if n_lifetimes == 0 {
            0.0
        } else {
            total_cost / n_lifetimes as f64
        },
        total_cost,
        n_eligible,
        n_lifetimes,
    })
}

/// One point of the missed-operating-time vs unexpected-failure curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    #[serde(with = "crate::data::extended_f64")]
    pub threshold: f64,
    pub pct_missing_operating_time: f64,
    pub pct_unexpected_failures: f64,
}

/// Evaluates the operating trade-off at each threshold.
///
/// Missing operating time is `Σ(T - R) / ΣT`; a failure is unexpected when
/// the warning coincides with the failure step.
pub fn tradeoff_curve(paths: &[CriterionPath], thresholds: &[f64]) -> Result<Vec<TradeoffPoint>> {
    if paths.is_empty() || paths.iter().any(CriterionPath::is_empty) {
        return Err(Error::InvalidInput(
            "trade-off curve needs nonempty lifetimes".into(),
        ));
    }
    let total_time: usize = paths.iter().map(CriterionPath::len).sum();
    Ok(thresholds
        .iter()
        .map(|&gamma| {
            let mut missing = 0usize;
            let mut unexpected = 0usize;
            for path in paths {
                let r = warning_time(&path.values, gamma);
                missing += path.len() - r;
                if r == path.len() && path.event == Event::Failed {
                    unexpected += 1;
                }
            }
            TradeoffPoint {
                threshold: gamma,
                pct_missing_operating_time: 100.0 * missing as f64 / total_time as f64,
                pct_unexpected_failures: 100.0 * unexpected as f64 / paths.len() as f64,
            }
        })
        .collect())
}

/// Distinct criterion values plus `0` and `+∞`, ascending.
pub fn threshold_grid(paths: &[CriterionPath]) -> Vec<f64> {
    let mut grid: Vec<f64> = std::iter::once(0.0)
        .chain(paths.iter().flat_map(|p| p.values.iter().copied()))
        .chain(std::iter::once(f64::INFINITY))
        .filter(|v| !v.is_nan())
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}
