mod common;

use common::{lifetime, params};
use latent_hazard::decision::{
    optimize_threshold, pinball_cost, threshold_cost, threshold_grid, tradeoff_curve,
    warning_time,
};
use latent_hazard::evaluation::{cost_comparison, rank_percentiles, ModelPolicy};
use latent_hazard::model::trajectory;
use latent_hazard::{CostSpec, Criterion, CriterionPath, Event, Lifetime};
use proptest::prelude::*;

fn path() -> impl Strategy<Value = CriterionPath> {
    (
        prop::collection::vec(0u8..20, 1..15),
        prop_oneof![3 => Just(Event::Failed), 1 => Just(Event::Censored)],
    )
        .prop_map(|(v, e)| CriterionPath::new(v.into_iter().map(|x| x as f64 / 4.0).collect(), e))
}

fn cost() -> impl Strategy<Value = CostSpec> {
    (1usize..6, 0u8..5, 0u8..5).prop_map(|(d, c1, c2)| CostSpec::new(d, c1 as f64, c2 as f64).unwrap())
}

/// Direct evaluation of the empirical risk at one threshold.
fn brute_risk(paths: &[CriterionPath], gamma: f64, cost: &CostSpec, censored: bool) -> f64 {
    let considered: Vec<&CriterionPath> = paths
        .iter()
        .filter(|p| p.event == Event::Failed || censored)
        .collect();
    let total: f64 = considered
        .iter()
        .filter(|p| p.len() >= cost.d)
        .map(|p| {
            let xi = p.len() - warning_time(&p.values, gamma);
            match p.event {
                Event::Failed => pinball_cost(cost, xi),
                Event::Censored => cost.c2 * xi as f64,
            }
        })
        .sum();
    total / considered.len() as f64
}

proptest! {
    #[test]
    fn erm_equals_exhaustive_scan(
        paths in prop::collection::vec(path(), 1..12),
        cost in cost(),
        censored in any::<bool>(),
    ) {
        let eligible = paths
            .iter()
            .any(|p| (p.event == Event::Failed || censored) && p.len() >= cost.d);
        let fit = optimize_threshold(&paths, &cost, censored);
        prop_assume!(eligible);
        let fit = fit.unwrap();
        let mut best = (f64::NAN, f64::INFINITY);
        for gamma in threshold_grid(&paths) {
            let r = brute_risk(&paths, gamma, &cost, censored);
            if r <= best.1 {
                best = (gamma, r);
            }
        }
        prop_assert_eq!(fit.risk, best.1);
        prop_assert_eq!(fit.threshold, best.0);
        let again = threshold_cost(&paths, fit.threshold, &cost, censored).unwrap();
        prop_assert_eq!(again.risk, fit.risk);
    }

    #[test]
    fn warning_time_is_monotone_in_threshold(p in path(), a in 0u8..20, b in 0u8..20) {
        let (lo, hi) = (a.min(b) as f64 / 4.0, a.max(b) as f64 / 4.0);
        let r_lo = warning_time(&p.values, lo);
        let r_hi = warning_time(&p.values, hi);
        prop_assert!(r_lo <= r_hi);
        prop_assert!((1..=p.len()).contains(&r_lo));
    }

    #[test]
    fn pinball_is_convex_with_zero_at_d(cost in cost(), xi in 0usize..20) {
        prop_assert_eq!(pinball_cost(&cost, cost.d), 0.0);
        if xi >= 1 {
            let mid = 2.0 * pinball_cost(&cost, xi);
            prop_assert!(pinball_cost(&cost, xi - 1) + pinball_cost(&cost, xi + 1) >= mid);
        }
    }

    #[test]
    fn tradeoff_is_monotone(paths in prop::collection::vec(path(), 1..10)) {
        let grid = threshold_grid(&paths);
        let curve = tradeoff_curve(&paths, &grid).unwrap();
        for w in curve.windows(2) {
            prop_assert!(w[1].pct_missing_operating_time <= w[0].pct_missing_operating_time);
            prop_assert!(w[1].pct_unexpected_failures >= w[0].pct_unexpected_failures);
        }
        let last = curve.last().unwrap();
        prop_assert_eq!(last.pct_missing_operating_time, 0.0);
    }

    #[test]
    fn latent_criterion_ignores_alpha(
        (theta, life) in (1..=3usize).prop_flat_map(|p| (params(p), lifetime(p, 20, None))),
        shift in -2.0..2.0f64,
        gamma in 0.0..1.0f64,
    ) {
        let mut other = theta.clone();
        other.alpha0 += shift;
        for a in other.alpha.iter_mut() {
            *a -= shift;
        }
        let a = trajectory(&theta, &life).unwrap();
        let b = trajectory(&other, &life).unwrap();
        prop_assert_eq!(
            warning_time(a.criterion(Criterion::LatentOnly), gamma),
            warning_time(b.criterion(Criterion::LatentOnly), gamma)
        );
    }

    #[test]
    fn cost_table_is_sum_of_pinball_costs(
        paths in prop::collection::vec(path(), 1..10),
        cost in cost(),
        gamma in 0u8..20,
        k in 1u8..5,
    ) {
        let gamma = gamma as f64 / 4.0;
        let policy = ModelPolicy { name: "m".into(), paths: paths.clone(), threshold: gamma };
        let table = cost_comparison(std::slice::from_ref(&policy), &cost).unwrap();
        let direct: f64 = paths
            .iter()
            .filter(|p| p.event == Event::Failed && p.len() >= cost.d)
            .map(|p| pinball_cost(&cost, p.len() - warning_time(&p.values, gamma)))
            .sum();
        prop_assert_eq!(table.rows[0].total_cost, direct);
        let scaled_cost = CostSpec::new(cost.d, cost.c1 * k as f64, cost.c2 * k as f64).unwrap();
        let scaled = cost_comparison(&[policy], &scaled_cost).unwrap();
        prop_assert_eq!(scaled.rows[0].total_cost, direct * k as f64);
        prop_assert_eq!(scaled.warn_at_failure, table.warn_at_failure * k as f64);
    }

    #[test]
    fn rank_is_invariant_under_monotone_transform(
        paths in prop::collection::vec(
            prop::collection::vec(0.01..5.0f64, 1..12).prop_map(|v| CriterionPath::new(v, Event::Failed)),
            2..8,
        ),
        offset in 0usize..3,
    ) {
        let data: Vec<Lifetime> = paths
            .iter()
            .enumerate()
            .map(|(i, p)| Lifetime::new(format!("{i}"), format!("U{i}"), 1, vec![0.0; p.len()], Event::Failed).unwrap())
            .collect();
        let transformed: Vec<CriterionPath> = paths
            .iter()
            .map(|p| CriterionPath::new(p.values.iter().map(|v| v.ln() * 3.0 + v.powi(3)).collect(), p.event))
            .collect();
        let a = rank_percentiles(&data, &paths, &[offset]);
        let b = rank_percentiles(&data, &transformed, &[offset]);
        prop_assert_eq!(&a.records, &b.records);
        for r in &a.records {
            prop_assert!((0.0..=1.0).contains(&r.percentile));
            prop_assert!(r.cohort_size >= 1);
        }
    }
}

#[test]
fn warn_at_failure_on_nineteen_lifetimes() {
    let cost = CostSpec::new(5, 1.0, 1.0).unwrap();
    let paths: Vec<CriterionPath> = (0..19)
        .map(|i| CriterionPath::new(vec![0.1; 10 + i], Event::Failed))
        .collect();
    let fit = threshold_cost(&paths, f64::INFINITY, &cost, false).unwrap();
    assert_eq!(fit.total_cost, 95.0);
    let policy = ModelPolicy {
        name: "never".into(),
        paths,
        threshold: f64::INFINITY,
    };
    assert_eq!(cost_comparison(&[policy], &cost).unwrap().warn_at_failure, 95.0);
}
