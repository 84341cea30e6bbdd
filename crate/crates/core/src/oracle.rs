//! Exhaustive enumeration over all `2^(2N)` encoded states.
//!
//! Everything here is a plain full scan. Ties always resolve to the lowest
//! basis index so results do not depend on evaluation order.

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::ising::IsingModel;
use crate::portfolio::{
    build_hard, compute_penalty_coefficient, metrics, quadratic, PortfolioProblem, PositionVector,
    SpinLayout,
};

/// Largest spin count the oracle will scan.
pub const MAX_ORACLE_SPINS: usize = 24;

fn check_spins(n_spins: usize) -> Result<()> {
    if n_spins == 0 || n_spins > MAX_ORACLE_SPINS {
        return Err(Error::Capacity {
            what: "oracle spin count",
            value: n_spins,
            min: 1,
            max: MAX_ORACLE_SPINS,
        });
    }
    Ok(())
}

/// Every basis index in ascending order with its decoded positions.
pub fn enumerate(n_assets: usize) -> Result<impl Iterator<Item = (usize, PositionVector)>> {
    let layout = SpinLayout::new(n_assets);
    check_spins(layout.n_spins())?;
    Ok((0..1usize << layout.n_spins()).map(move |x| (x, layout.decode_index(x))))
}

/// Number of bit patterns whose decoded positions net to `net_lots`.
pub fn feasible_count(n_assets: usize, net_lots: i32) -> Result<u64> {
    let layout = SpinLayout::new(n_assets);
    check_spins(layout.n_spins())?;
    Ok((0..1usize << layout.n_spins())
        .filter(|&x| layout.net_of_index(x) == net_lots)
        .count() as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrema {
    pub min: f64,
    pub argmin_bits: usize,
    pub max: f64,
    pub argmax_bits: usize,
}

/// Extrema of precomputed energies over states accepted by `keep`.
pub fn extrema_where(energies: &[f64], keep: impl Fn(usize) -> bool) -> Option<Extrema> {
    let mut out: Option<Extrema> = None;
    for (x, &e) in energies.iter().enumerate().filter(|(x, _)| keep(*x)) {
        match out.as_mut() {
            None => {
                out = Some(Extrema {
                    min: e,
                    argmin_bits: x,
                    max: e,
                    argmax_bits: x,
                })
            }
            Some(ex) => {
                if e < ex.min {
                    ex.min = e;
                    ex.argmin_bits = x;
                }
                if e > ex.max {
                    ex.max = e;
                    ex.argmax_bits = x;
                }
            }
        }
    }
    out
}

/// Global extrema of `model` over every spin state.
pub fn extrema(model: &IsingModel) -> Result<Extrema> {
    check_spins(model.n_spins())?;
    Ok(extrema_where(&model.energies(), |_| true).expect("state space is non-empty"))
}

/// Penalty scale derived from the spread of the unpenalised objective over
/// all states.
pub fn auto_penalty(problem: &PortfolioProblem) -> Result<f64> {
    let ex = extrema(&build_hard(problem)?)?;
    compute_penalty_coefficient(ex.min, ex.max)
}

/// Lowest-cost feasible state of `model`, lowest index on ties.
pub fn feasible_minimum(
    model: &IsingModel,
    layout: SpinLayout,
    net_lots: i32,
) -> Result<(usize, f64)> {
    check_spins(model.n_spins())?;
    if model.n_spins() != layout.n_spins() {
        return Err(validation("model and layout disagree on spin count"));
    }
    let ex = extrema_where(&model.energies(), |x| layout.net_of_index(x) == net_lots)
        .ok_or_else(|| validation(format!("no state nets to D = {net_lots}")))?;
    Ok((ex.argmin_bits, ex.min))
}

/// Feasible positions, each once, in order of their non-degenerate encoding.
pub fn feasible_positions(n_assets: usize, net_lots: i32) -> Result<Vec<PositionVector>> {
    let layout = SpinLayout::new(n_assets);
    check_spins(layout.n_spins())?;
    let short_bits: usize = layout.short_register().iter().map(|q| 1usize << q).sum();
    Ok((0..1usize << layout.n_spins())
        .filter(|&x| x & (x >> 1) & short_bits == 0)
        .filter(|&x| layout.net_of_index(x) == net_lots)
        .map(|x| layout.decode_index(x))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub lambda: f64,
    pub z: PositionVector,
    pub expected_return: f64,
    pub risk: f64,
}

/// A feasible portfolio in the return/risk plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudPoint {
    pub z: PositionVector,
    pub expected_return: f64,
    pub risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    pub points: Vec<FrontierPoint>,
    pub cloud: Vec<CloudPoint>,
}

/// Discrete efficient frontier: for each `lambda` the feasible positions
/// minimising `lambda z^T sigma z - (1 - lambda) mu . z`, ignoring trading
/// cost. Repeated optima along the grid are kept once, at their first lambda.
pub fn efficient_frontier(problem: &PortfolioProblem, lambda_grid: &[f64]) -> Result<Frontier> {
    problem.validate()?;
    if lambda_grid.is_empty() {
        return Err(validation("lambda grid is empty"));
    }
    if let Some(l) = lambda_grid.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(validation(format!("lambda {l} outside [0, 1]")));
    }
    let positions = feasible_positions(problem.n_assets, problem.net_lots)?;
    let cloud: Vec<CloudPoint> = positions
        .iter()
        .map(|z| {
            let m = metrics(z, problem)?;
            Ok(CloudPoint {
                z: z.clone(),
                expected_return: m.expected_return,
                risk: m.risk,
            })
        })
        .collect::<Result<_>>()?;
    let variances: Vec<f64> = positions
        .iter()
        .map(|z| {
            let zf: Vec<f64> = z.as_slice().iter().map(|&v| f64::from(v)).collect();
            quadratic(&problem.sigma, &zf)
        })
        .collect();

    let mut points: Vec<FrontierPoint> = Vec::new();
    for &lambda in lambda_grid {
        let best = cloud
            .iter()
            .zip(&variances)
            .map(|(c, v)| lambda * v - (1.0 - lambda) * c.expected_return)
            .enumerate()
            .fold(None::<(usize, f64)>, |acc, (i, cost)| match acc {
                Some((_, c)) if c <= cost => acc,
                _ => Some((i, cost)),
            })
            .map(|(i, _)| i)
            .ok_or_else(|| validation("no feasible portfolio"))?;
        let chosen = &cloud[best];
        if points.iter().any(|p| p.z == chosen.z) {
            continue;
        }
        points.push(FrontierPoint {
            lambda,
            z: chosen.z.clone(),
            expected_return: chosen.expected_return,
            risk: chosen.risk,
        });
    }
    Ok(Frontier { points, cloud })
}

/// Cumulative distribution of `costs` under `weights` (renormalised over the
/// states with positive weight), as ascending `(cost, cumulative)` pairs with
/// equal costs merged.
pub fn cumulative_distribution(costs: &[f64], weights: &[f64]) -> Vec<(f64, f64)> {
    let mut support: Vec<(f64, f64)> = costs
        .iter()
        .zip(weights)
        .filter(|(_, w)| **w > 0.0)
        .map(|(c, w)| (*c, *w))
        .collect();
    support.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = support.iter().map(|(_, w)| w).sum();
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut acc = 0.0;
    for (c, w) in support {
        acc += w;
        match out.last_mut() {
            Some(last) if last.0 == c => last.1 = acc / total,
            _ => out.push((c, acc / total)),
        }
    }
    if let Some(last) = out.last_mut() {
        last.1 = 1.0;
    }
    out
}

/// Uniform-draw baseline: cost distribution of `model` over all states, or
/// over the feasible states only.
pub fn baseline_cumulative(
    model: &IsingModel,
    restrict_feasible: bool,
    problem: &PortfolioProblem,
) -> Result<Vec<(f64, f64)>> {
    check_spins(model.n_spins())?;
    let layout = problem.layout();
    if model.n_spins() != layout.n_spins() {
        return Err(validation("model and problem disagree on spin count"));
    }
    let energies = model.energies();
    let weights: Vec<f64> = (0..energies.len())
        .map(|x| {
            if !restrict_feasible || layout.net_of_index(x) == problem.net_lots {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(cumulative_distribution(&energies, &weights))
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::ising::IsingBuilder;

    fn factorial(n: u64) -> u64 {
        (1..=n).product()
    }

    /// Count of encodings with `D + k` longs, `k` shorts and the rest flat,
    /// each flat asset having two encodings.
    fn closed_form_count(n: u64, d: u64) -> u64 {
        (0..=n)
            .take_while(|k| d + 2 * k <= n)
            .map(|k| {
                let flat = n - d - 2 * k;
                factorial(n) / (factorial(d + k) * factorial(k) * factorial(flat)) * (1 << flat)
            })
            .sum()
    }

    #[test]
    fn enumeration_sizes() {
        assert_eq!(enumerate(1).unwrap().count(), 4);
        assert_eq!(enumerate(2).unwrap().count(), 16);
        assert_eq!(enumerate(8).unwrap().count(), 65536);
        let indices: Vec<usize> = enumerate(2).unwrap().map(|(x, _)| x).collect();
        assert_eq!(indices, (0..16).collect::<Vec<_>>());
        assert!(enumerate(13).is_err());
        assert!(enumerate(0).is_err());
    }

    #[test]
    fn feasible_counts() {
        assert_eq!(feasible_count(8, 4).unwrap(), 1820);
        assert_eq!(feasible_count(2, 1).unwrap(), 4);
        assert_eq!(feasible_count(1, 1).unwrap(), 1);
        for n in 1..=6u64 {
            for d in 0..=n {
                assert_eq!(
                    feasible_count(n as usize, d as i32).unwrap(),
                    closed_form_count(n, d),
                    "N={n} D={d}"
                );
            }
        }
    }

    #[test]
    fn extrema_examples() {
        let zero = extrema(&IsingModel::zero(3)).unwrap();
        assert_eq!((zero.min, zero.max), (0.0, 0.0));

        let mut b = IsingBuilder::new(1);
        b.add_term(&[0], 1.0).unwrap();
        let ex = extrema(&b.build()).unwrap();
        assert_eq!(
            (ex.min, ex.argmin_bits, ex.max, ex.argmax_bits),
            (-1.0, 0, 1.0, 1)
        );
    }

    #[test]
    fn extrema_match_direct_evaluation() {
        let mut b = IsingBuilder::new(4);
        for (k, (idx, v)) in [
            (vec![], 0.3),
            (vec![0], -1.2),
            (vec![3], 0.8),
            (vec![0, 2], 0.5),
            (vec![1, 3], -0.9),
            (vec![2, 3], 1.4),
        ]
        .into_iter()
        .enumerate()
        {
            b.add_term(&idx, v + 0.01 * k as f64).unwrap();
        }
        let m = b.build();
        let direct: Vec<f64> = (0..16)
            .map(|x| {
                let s: Vec<i8> = (0..4)
                    .map(|q| if (x >> q) & 1 == 1 { 1 } else { -1 })
                    .collect();
                m.evaluate(&s).unwrap()
            })
            .collect();
        let ex = extrema(&m).unwrap();
        let min = direct.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = direct.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(ex.min, min);
        assert_eq!(ex.max, max);
        assert_eq!(direct[ex.argmin_bits], min);
    }

    fn problem() -> PortfolioProblem {
        let mu = vec![0.3, 0.1, -0.2, 0.25];
        let sigma = vec![
            vec![0.5, 0.1, 0.0, 0.2],
            vec![0.1, 0.3, -0.1, 0.0],
            vec![0.0, -0.1, 0.4, 0.05],
            vec![0.2, 0.0, 0.05, 0.6],
        ];
        PortfolioProblem::new(2, 0.5, 0.0, 1.0, mu, sigma).unwrap()
    }

    #[test]
    fn feasible_positions_are_unique() {
        let zs = feasible_positions(4, 2).unwrap();
        let mut sorted = zs.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), zs.len());
        assert!(zs.iter().all(|z| z.net() == 2));
        // k shorts: C(4,2) + 4!/(3!1!0!) = 6 + 4
        assert_eq!(zs.len(), 10);
    }

    #[test]
    fn frontier_extremes() {
        let p = problem();
        let f = efficient_frontier(&p, &[0.0, 0.5, 1.0]).unwrap();
        assert!(f.points.len() <= 3);
        let max_ret = f
            .cloud
            .iter()
            .map(|c| c.expected_return)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_abs_diff_eq!(f.points[0].expected_return, max_ret, epsilon = 1e-12);
        let min_risk = f.cloud.iter().map(|c| c.risk).fold(f64::INFINITY, f64::min);
        let at_one = efficient_frontier(&p, &[1.0]).unwrap();
        assert_abs_diff_eq!(at_one.points[0].risk, min_risk, epsilon = 1e-12);
        assert!(efficient_frontier(&p, &[]).is_err());
    }

    #[test]
    fn cumulative_shapes() {
        let single = cumulative_distribution(&[2.0, 5.0], &[0.0, 1.0]);
        assert_eq!(single, vec![(5.0, 1.0)]);
        let merged = cumulative_distribution(&[1.0, 0.0, 1.0, 3.0], &[1.0; 4]);
        assert_eq!(merged, vec![(0.0, 0.25), (1.0, 0.75), (3.0, 1.0)]);

        let p = problem();
        let model = build_hard(&p).unwrap();
        let all = baseline_cumulative(&model, false, &p).unwrap();
        assert_eq!(all.last().unwrap().1, 1.0);
    }

    #[test]
    fn auto_penalty_exceeds_spread() {
        let p = problem();
        let ex = extrema(&build_hard(&p).unwrap()).unwrap();
        assert!(auto_penalty(&p).unwrap() > ex.max - ex.min);
    }
}
