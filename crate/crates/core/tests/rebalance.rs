//! Multi-period campaign behaviour checked against independent scans.

use qrebal::harness::campaign::monthly_periods;
use qrebal::harness::data::MIN_MONTH_DAYS;
use qrebal::harness::synthetic::{asx20_2017, EXPERIMENT_ASSETS};
use qrebal::harness::{
    run_rebalance_campaign, Algorithm, PenaltySetting, RebalanceScenario, SolverSettings,
};

/// Every z in {-1, 0, 1}^n with the given net sum.
fn portfolios(n: usize, net: i32) -> Vec<Vec<i8>> {
    let mut out = Vec::new();
    for code in 0..3usize.pow(n as u32) {
        let z: Vec<i8> = (0..n)
            .map(|i| ((code / 3usize.pow(i as u32)) % 3) as i8 - 1)
            .collect();
        if z.iter().map(|&v| i32::from(v)).sum::<i32>() == net {
            out.push(z);
        }
    }
    out
}

fn scenario(lambda_grid: Vec<f64>, algorithms: Vec<Algorithm>, months: usize) -> RebalanceScenario {
    let data = asx20_2017(3).select(&EXPERIMENT_ASSETS).unwrap();
    RebalanceScenario {
        periods: monthly_periods(&data, MIN_MONTH_DAYS, Some(months), true).unwrap(),
        net_lots: 4,
        trading_cost: 0.015,
        lambda_grid,
        penalty: PenaltySetting::Fixed(2.5),
        p_values: vec![1],
        algorithms,
        solver: SolverSettings::new(2, 5),
    }
}

#[test]
fn return_seeking_brute_matches_greedy_replay() {
    let sc = scenario(vec![0.0], vec![Algorithm::Brute], 6);
    let result = run_rebalance_campaign(&sc).unwrap();
    let candidates = portfolios(8, 4);

    let mut y = vec![0i8; 8];
    let mut total = 0.0;
    for period in &sc.periods {
        let adjusted = |z: &[i8]| {
            let ret: f64 = z
                .iter()
                .zip(&period.mu)
                .map(|(&v, m)| f64::from(v) * m)
                .sum();
            let traded = z.iter().zip(&y).filter(|(a, b)| a != b).count();
            ret - sc.trading_cost * traded as f64
        };
        let best = candidates
            .iter()
            .max_by(|a, b| adjusted(a).total_cmp(&adjusted(b)))
            .unwrap()
            .clone();
        total += adjusted(&best);
        y = best;
    }
    let summary = &result.summary[0];
    assert!(
        (summary.total_adjusted_return - total).abs() < 1e-9,
        "{} vs {total}",
        summary.total_adjusted_return
    );
}

#[test]
fn trade_counts_respect_structural_bound() {
    let sc = scenario(
        vec![0.0, 0.5, 1.0],
        vec![Algorithm::Brute, Algorithm::Hard],
        4,
    );
    let result = run_rebalance_campaign(&sc).unwrap();
    let bound = 8 + 2 * 4 * (sc.periods.len() as u32 - 1);
    for s in &result.summary {
        assert!(s.total_trades <= bound, "{s:?}");
        assert_eq!(s.infeasible_periods, 0, "{s:?}");
    }
    for r in &result.periods {
        assert_eq!(r.z.net(), 4);
        let recount: u32 =
            r.z.as_slice()
                .iter()
                .zip(r.previous.as_slice())
                .map(|(a, b)| (i32::from(*a) - i32::from(*b)).unsigned_abs())
                .sum();
        assert_eq!(r.trade_count, recount);
    }
}

#[test]
fn largest_single_move_between_feasible_portfolios() {
    let candidates = portfolios(8, 4);
    let widest = candidates
        .iter()
        .flat_map(|z| {
            candidates.iter().map(move |y| {
                z.iter()
                    .zip(y)
                    .map(|(a, b)| (a - b).unsigned_abs() as u32)
                    .sum::<u32>()
            })
        })
        .max()
        .unwrap();
    assert_eq!(widest, 8);
}

#[test]
fn hard_trajectory_is_feasible_every_period() {
    let sc = scenario(vec![0.5], vec![Algorithm::Hard], 3);
    let result = run_rebalance_campaign(&sc).unwrap();
    assert_eq!(result.periods.len(), 3);
    for r in &result.periods {
        assert!(r.feasible);
        assert!((r.feasible_probability - 1.0).abs() < 1e-9);
        assert!((r.band_occupancy.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
