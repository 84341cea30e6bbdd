//! Experiment campaigns: angle sweeps, single-period optimisation with
//! cumulative cost curves, and multi-period rebalancing.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{derive_statistics, ReturnsDataset};
use crate::error::{validation, Result};
use crate::ising::IsingModel;
use crate::optimizer::{multi_start, MultiStartResult, OptimizerConfig};
use crate::oracle::{auto_penalty, cumulative_distribution, feasible_minimum};
use crate::portfolio::{annualize, build_hard, metrics, PortfolioProblem, PositionVector};
use crate::qaoa::{band_occupancy, select_solution, QaoaCircuit, QaoaParams, Variant};

/// Trade bound for the first period from zero holdings.
pub const FIRST_PERIOD_TRADE_BOUND: u32 = 8;
/// Trade bound for every later period.
pub const LATER_PERIOD_TRADE_BOUND: u32 = 4;

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// `{0.0, 0.1, ..., 1.0}`.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

/// How the classical outer loop is run for every circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub n_seeds: usize,
    pub seed: u64,
    /// Overrides the `500 p` evaluation budget when set.
    pub max_evaluations: Option<usize>,
}

impl SolverSettings {
    pub fn new(n_seeds: usize, seed: u64) -> Self {
        Self {
            n_seeds,
            seed,
            max_evaluations: None,
        }
    }

    pub fn optimizer_config(&self, p: usize, seed: u64) -> OptimizerConfig {
        let mut config = OptimizerConfig::for_depth(p, seed);
        config.n_starts = self.n_seeds;
        if let Some(max) = self.max_evaluations {
            config.max_evaluations = max;
        }
        config
    }
}

/// Every seeded optimisation of one circuit, with the final distribution of
/// each start.
#[derive(Debug, Clone)]
pub struct SeededRuns {
    pub starts: MultiStartResult,
    pub distributions: Vec<Vec<f64>>,
    pub expectations: Vec<f64>,
}

impl SeededRuns {
    pub fn best_distribution(&self) -> &[f64] {
        &self.distributions[self.starts.best_index]
    }

    /// Seed-averaged final distribution.
    pub fn mean_distribution(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.distributions[0].len()];
        for d in &self.distributions {
            for (m, p) in mean.iter_mut().zip(d) {
                *m += p;
            }
        }
        let n = self.distributions.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    pub fn mean_expectation(&self) -> f64 {
        self.expectations.iter().sum::<f64>() / self.expectations.len() as f64
    }
}

/// Minimises `<C>` over depth-`p` angles from `settings.n_seeds` random starts.
pub fn optimize_circuit(
    circuit: &QaoaCircuit,
    p: usize,
    settings: &SolverSettings,
    seed: u64,
) -> Result<SeededRuns> {
    if p == 0 {
        return Err(validation("circuit depth p must be at least 1"));
    }
    let config = settings.optimizer_config(p, seed);
    let starts = multi_start(
        |angles| {
            QaoaParams::from_flat(angles)
                .and_then(|params| circuit.expectation(&params))
                .unwrap_or(f64::NAN)
        },
        &config,
    )?;
    let runs = starts
        .starts
        .par_iter()
        .map(|s| circuit.run(&QaoaParams::from_flat(&s.best_angles)?))
        .collect::<Result<Vec<_>>>()?;
    let expectations = runs.iter().map(|r| r.expectation).collect();
    let distributions = runs.into_iter().map(|r| r.distribution).collect();
    Ok(SeededRuns {
        starts,
        distributions,
        expectations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub beta: f64,
    pub gamma: f64,
    pub expectation: f64,
}

/// `<psi_1| C_soft |psi_1>` of the depth-1 soft circuit over a `beta x gamma`
/// grid, beta-major.
pub fn sweep_beta_gamma(
    problem: &PortfolioProblem,
    grid_beta: &[f64],
    grid_gamma: &[f64],
) -> Result<Vec<SweepPoint>> {
    let circuit = QaoaCircuit::soft(problem)?;
    let cells: Vec<(f64, f64)> = grid_beta
        .iter()
        .flat_map(|&b| grid_gamma.iter().map(move |&g| (b, g)))
        .collect();
    cells
        .into_par_iter()
        .map(|(beta, gamma)| {
            let expectation = circuit.expectation(&QaoaParams::new(vec![beta], vec![gamma])?)?;
            Ok(SweepPoint {
                beta,
                gamma,
                expectation,
            })
        })
        .collect()
}

/// Which solver produced a curve or trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Soft,
    Hard,
    Brute,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Soft => "soft",
            Algorithm::Hard => "hard",
            Algorithm::Brute => "brute",
        }
    }

    pub fn variant(self) -> Option<Variant> {
        match self {
            Algorithm::Soft => Some(Variant::Soft),
            Algorithm::Hard => Some(Variant::Hard),
            Algorithm::Brute => None,
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "soft" => Ok(Algorithm::Soft),
            "hard" => Ok(Algorithm::Hard),
            "brute" => Ok(Algorithm::Brute),
            other => Err(validation(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// One step of a cumulative cost curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub algorithm: Algorithm,
    /// Circuit depth, zero for baselines.
    pub p: usize,
    /// `all` or `feasible`.
    pub domain: String,
    pub cost: f64,
    pub cumulative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub algorithm: Algorithm,
    pub p: usize,
    pub start: usize,
    pub expectation: f64,
    pub evaluations: usize,
    pub feasible_probability: f64,
    pub angles: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub algorithm: Algorithm,
    pub p: usize,
    /// Mean over seeds of the optimised `<C>` under the variant's own model.
    pub mean_expectation: f64,
    pub best_expectation: f64,
    /// Uniform mean of the variant's model: all states for soft, feasible
    /// states for hard.
    pub baseline_mean: f64,
    /// Feasible mass of the seed-averaged distribution.
    pub feasible_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleCampaignResult {
    pub curves: Vec<CurvePoint>,
    pub seeds: Vec<SeedRecord>,
    pub summaries: Vec<VariantSummary>,
}

fn curve(
    algorithm: Algorithm,
    p: usize,
    domain: &str,
    costs: &[f64],
    weights: &[f64],
) -> Vec<CurvePoint> {
    cumulative_distribution(costs, weights)
        .into_iter()
        .map(|(cost, cumulative)| CurvePoint {
            algorithm,
            p,
            domain: domain.to_string(),
            cost,
            cumulative,
        })
        .collect()
}

fn restrict(weights: &[f64], feasible: &[bool]) -> Vec<f64> {
    weights
        .iter()
        .zip(feasible)
        .map(|(w, &ok)| if ok { *w } else { 0.0 })
        .collect()
}

fn mean_where(values: &[f64], keep: impl Fn(usize) -> bool) -> f64 {
    let (sum, n) = values
        .iter()
        .enumerate()
        .filter(|(x, _)| keep(*x))
        .fold((0.0, 0usize), |(s, n), (_, v)| (s + v, n + 1));
    sum / n as f64
}

/// Optimises both variants at every depth in `p_list` and reports cumulative
/// distributions of the unpenalised cost for the seed-averaged final states,
/// with uniform baselines over all and over feasible states.
pub fn run_single_period_campaign(
    problem: &PortfolioProblem,
    p_list: &[usize],
    settings: &SolverSettings,
) -> Result<SingleCampaignResult> {
    let soft = QaoaCircuit::soft(problem)?;
    let hard = QaoaCircuit::hard(problem)?;
    let cost = hard.diagonal().energies().to_vec();
    let feasible: Vec<bool> = (0..cost.len()).map(|x| hard.is_feasible(x)).collect();

    let uniform = vec![1.0; cost.len()];
    let mut curves = curve(Algorithm::Brute, 0, "all", &cost, &uniform);
    curves.extend(curve(
        Algorithm::Brute,
        0,
        "feasible",
        &cost,
        &restrict(&uniform, &feasible),
    ));

    let mut seeds = Vec::new();
    let mut summaries = Vec::new();
    for &p in p_list {
        for (algorithm, circuit) in [(Algorithm::Soft, &soft), (Algorithm::Hard, &hard)] {
            let runs = optimize_circuit(circuit, p, settings, settings.seed)?;
            let mean = runs.mean_distribution();
            curves.extend(curve(algorithm, p, "all", &cost, &mean));
            curves.extend(curve(
                algorithm,
                p,
                "feasible",
                &cost,
                &restrict(&mean, &feasible),
            ));
            for (k, (start, dist)) in runs
                .starts
                .starts
                .iter()
                .zip(&runs.distributions)
                .enumerate()
            {
                seeds.push(SeedRecord {
                    algorithm,
                    p,
                    start: k,
                    expectation: runs.expectations[k],
                    evaluations: start.evaluations,
                    feasible_probability: circuit.feasible_mass(dist),
                    angles: start.best_angles.clone(),
                });
            }
            let energies = circuit.diagonal().energies();
            let baseline_mean = match algorithm {
                Algorithm::Soft => mean_where(energies, |_| true),
                _ => mean_where(energies, |x| feasible[x]),
            };
            summaries.push(VariantSummary {
                algorithm,
                p,
                mean_expectation: runs.mean_expectation(),
                best_expectation: runs.starts.best().best_value,
                baseline_mean,
                feasible_probability: circuit.feasible_mass(&mean),
            });
        }
    }
    Ok(SingleCampaignResult {
        curves,
        seeds,
        summaries,
    })
}

/// Penalty scale for the soft variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltySetting {
    Fixed(f64),
    /// Recomputed per period from the oracle spread of the unpenalised cost.
    Auto,
}

/// Return statistics for one rebalancing period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Period {
    pub label: String,
    pub mu: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
}

/// Monthly periods of `dataset`, optionally annualised, truncated to
/// `max_periods` when given.
pub fn monthly_periods(
    dataset: &ReturnsDataset,
    min_days: usize,
    max_periods: Option<usize>,
    annualized: bool,
) -> Result<Vec<Period>> {
    let windows = dataset.monthly_windows(min_days);
    let take = max_periods.unwrap_or(windows.len());
    windows
        .into_iter()
        .take(take)
        .map(|w| {
            let (mu, sigma) = derive_statistics(dataset, w.days.clone())?;
            let (mu, sigma) = if annualized {
                annualize(&mu, &sigma)
            } else {
                (mu, sigma)
            };
            Ok(Period {
                label: w.label(),
                mu,
                sigma,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RebalanceScenario {
    pub periods: Vec<Period>,
    pub net_lots: i32,
    pub trading_cost: f64,
    pub lambda_grid: Vec<f64>,
    pub penalty: PenaltySetting,
    pub p_values: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    pub solver: SolverSettings,
}

impl RebalanceScenario {
    fn validate(&self) -> Result<()> {
        if self.periods.is_empty() {
            return Err(validation("scenario has no periods"));
        }
        if self.lambda_grid.is_empty() || self.algorithms.is_empty() {
            return Err(validation(
                "scenario needs at least one lambda and one algorithm",
            ));
        }
        let quantum = self.algorithms.iter().any(|a| a.variant().is_some());
        if quantum && (self.p_values.is_empty() || self.p_values.contains(&0)) {
            return Err(validation("QAOA algorithms need depths p >= 1"));
        }
        if quantum && self.solver.n_seeds == 0 {
            return Err(validation("QAOA algorithms need at least one seed"));
        }
        Ok(())
    }
}

/// Outcome of one rebalancing step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodResult {
    pub lambda: f64,
    pub algorithm: Algorithm,
    pub p: usize,
    pub period: usize,
    pub label: String,
    pub penalty: f64,
    pub previous: PositionVector,
    pub z: PositionVector,
    pub selected_bits: usize,
    pub feasible: bool,
    pub trade_count: u32,
    pub trading_cost: f64,
    pub expected_return: f64,
    pub adjusted_return: f64,
    pub risk: f64,
    /// Trade count above the per-period bound for this period.
    pub exceeds_trade_bound: bool,
    /// Probability by number of shorted assets in the selected distribution.
    pub band_occupancy: Vec<f64>,
    /// Optimised expectation of each seeded start.
    pub seed_expectations: Vec<f64>,
    pub selected_probability: f64,
    pub feasible_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSummary {
    pub lambda: f64,
    pub algorithm: Algorithm,
    pub p: usize,
    pub total_trades: u32,
    pub total_adjusted_return: f64,
    pub mean_risk: f64,
    pub infeasible_periods: usize,
    pub flagged_periods: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RebalanceResult {
    pub periods: Vec<PeriodResult>,
    pub summary: Vec<LambdaSummary>,
}

fn period_seed(master: u64, period: usize) -> u64 {
    master.wrapping_add(1_000_003u64.wrapping_mul(period as u64))
}

fn trade_bound(period: usize) -> u32 {
    if period == 0 {
        FIRST_PERIOD_TRADE_BOUND
    } else {
        LATER_PERIOD_TRADE_BOUND
    }
}

struct Choice {
    bits: usize,
    feasible: bool,
    bands: Vec<f64>,
    seed_expectations: Vec<f64>,
    selected_probability: f64,
    feasible_probability: f64,
}

fn brute_choice(problem: &PortfolioProblem, model: &IsingModel) -> Result<Choice> {
    let (bits, _) = feasible_minimum(model, problem.layout(), problem.net_lots)?;
    Ok(Choice {
        bits,
        feasible: true,
        bands: Vec::new(),
        seed_expectations: Vec::new(),
        selected_probability: 1.0,
        feasible_probability: 1.0,
    })
}

fn quantum_choice(
    circuit: &QaoaCircuit,
    p: usize,
    settings: &SolverSettings,
    seed: u64,
    net_lots: i32,
) -> Result<Choice> {
    let runs = optimize_circuit(circuit, p, settings, seed)?;
    let dist = runs.best_distribution();
    let energies = circuit.diagonal().energies();
    let (bits, feasible) = match select_solution(dist, energies, |x| circuit.is_feasible(x)) {
        Ok(bits) => (bits, true),
        Err(_) => {
            // nothing feasible was observed; fall back to the overall mode
            let bits = select_solution(dist, energies, |_| true)?;
            (bits, false)
        }
    };
    Ok(Choice {
        bits,
        feasible,
        bands: band_occupancy(dist, circuit.layout(), net_lots),
        seed_expectations: runs.expectations.clone(),
        selected_probability: dist[bits],
        feasible_probability: circuit.feasible_mass(dist),
    })
}

fn run_trajectory(
    scenario: &RebalanceScenario,
    lambda: f64,
    algorithm: Algorithm,
    p: usize,
) -> Result<Vec<PeriodResult>> {
    let n_assets = scenario.periods[0].mu.len();
    let mut previous = PositionVector::flat(n_assets);
    let mut out = Vec::with_capacity(scenario.periods.len());
    for (t, period) in scenario.periods.iter().enumerate() {
        let base = PortfolioProblem::new(
            scenario.net_lots,
            lambda,
            scenario.trading_cost,
            0.0,
            period.mu.clone(),
            period.sigma.clone(),
        )?
        .with_previous(previous.as_slice().to_vec())?;
        let penalty = match (algorithm, scenario.penalty) {
            (Algorithm::Soft, PenaltySetting::Fixed(a)) => a,
            (Algorithm::Soft, PenaltySetting::Auto) => auto_penalty(&base)?,
            _ => 0.0,
        };
        let problem = base.with_penalty(penalty)?;
        let seed = period_seed(scenario.solver.seed, t);
        let choice = match algorithm {
            Algorithm::Brute => brute_choice(&problem, &build_hard(&problem)?)?,
            Algorithm::Soft => quantum_choice(
                &QaoaCircuit::soft(&problem)?,
                p,
                &scenario.solver,
                seed,
                problem.net_lots,
            )?,
            Algorithm::Hard => quantum_choice(
                &QaoaCircuit::hard(&problem)?,
                p,
                &scenario.solver,
                seed,
                problem.net_lots,
            )?,
        };
        let z = problem.layout().decode_index(choice.bits);
        let m = metrics(&z, &problem)?;
        out.push(PeriodResult {
            lambda,
            algorithm,
            p,
            period: t,
            label: period.label.clone(),
            penalty,
            previous: previous.clone(),
            z: z.clone(),
            selected_bits: choice.bits,
            feasible: choice.feasible && z.net() == scenario.net_lots,
            trade_count: m.trade_count,
            trading_cost: m.trading_cost,
            expected_return: m.expected_return,
            adjusted_return: m.adjusted_return,
            risk: m.risk,
            exceeds_trade_bound: m.trade_count > trade_bound(t),
            band_occupancy: choice.bands,
            seed_expectations: choice.seed_expectations,
            selected_probability: choice.selected_probability,
            feasible_probability: choice.feasible_probability,
        });
        previous = z;
    }
    Ok(out)
}

fn summarise(rows: &[PeriodResult]) -> LambdaSummary {
    let first = &rows[0];
    LambdaSummary {
        lambda: first.lambda,
        algorithm: first.algorithm,
        p: first.p,
        total_trades: rows.iter().map(|r| r.trade_count).sum(),
        total_adjusted_return: rows.iter().map(|r| r.adjusted_return).sum(),
        mean_risk: rows.iter().map(|r| r.risk).sum::<f64>() / rows.len() as f64,
        infeasible_periods: rows.iter().filter(|r| !r.feasible).count(),
        flagged_periods: rows.iter().filter(|r| r.exceeds_trade_bound).count(),
    }
}

/// Runs every `(lambda, algorithm, p)` trajectory. Each period is solved
/// independently with the previous period's chosen positions as `y`,
/// starting from zero holdings.
pub fn run_rebalance_campaign(scenario: &RebalanceScenario) -> Result<RebalanceResult> {
    scenario.validate()?;
    let mut cells = Vec::new();
    for &lambda in &scenario.lambda_grid {
        for &algorithm in &scenario.algorithms {
            if algorithm == Algorithm::Brute {
                cells.push((lambda, algorithm, 0));
            } else {
                cells.extend(scenario.p_values.iter().map(|&p| (lambda, algorithm, p)));
            }
        }
    }
    let trajectories = cells
        .into_par_iter()
        .map(|(lambda, algorithm, p)| run_trajectory(scenario, lambda, algorithm, p))
        .collect::<Result<Vec<_>>>()?;
    let summary = trajectories.iter().map(|t| summarise(t)).collect();
    Ok(RebalanceResult {
        periods: trajectories.into_iter().flatten().collect(),
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        assert_eq!(linspace(2.0, 5.0, 1), vec![2.0]);
        assert!(linspace(0.0, 1.0, 0).is_empty());
        let g = default_lambda_grid();
        assert_eq!(g.len(), 11);
        assert_eq!(g[3], 0.3);
        assert_eq!(g[10], 1.0);
    }

    #[test]
    fn algorithm_parsing() {
        assert_eq!("hard".parse::<Algorithm>().unwrap(), Algorithm::Hard);
        assert!("quantum".parse::<Algorithm>().is_err());
    }

    fn periods() -> Vec<Period> {
        let sigma = vec![
            vec![0.04, 0.01, -0.01],
            vec![0.01, 0.09, 0.0],
            vec![-0.01, 0.0, 0.05],
        ];
        vec![
            Period {
                label: "a".into(),
                mu: vec![0.2, -0.1, 0.05],
                sigma: sigma.clone(),
            },
            Period {
                label: "b".into(),
                mu: vec![-0.1, 0.3, 0.0],
                sigma: sigma.clone(),
            },
            Period {
                label: "c".into(),
                mu: vec![0.0, 0.1, 0.25],
                sigma,
            },
        ]
    }

    fn scenario(algorithms: Vec<Algorithm>) -> RebalanceScenario {
        RebalanceScenario {
            periods: periods(),
            net_lots: 1,
            trading_cost: 0.015,
            lambda_grid: vec![0.0, 1.0],
            penalty: PenaltySetting::Auto,
            p_values: vec![1],
            algorithms,
            solver: SolverSettings {
                n_seeds: 2,
                seed: 3,
                max_evaluations: Some(30),
            },
        }
    }

    #[test]
    fn trajectories_carry_positions_forward() {
        let result = run_rebalance_campaign(&scenario(vec![
            Algorithm::Soft,
            Algorithm::Hard,
            Algorithm::Brute,
        ]))
        .unwrap();
        assert_eq!(result.summary.len(), 6);
        for chunk in result.periods.chunks(3) {
            assert_eq!(chunk[0].previous, PositionVector::flat(3));
            for w in chunk.windows(2) {
                assert_eq!(w[1].previous, w[0].z);
            }
        }
        for r in result
            .periods
            .iter()
            .filter(|r| r.algorithm != Algorithm::Soft)
        {
            assert!(r.feasible);
            assert_eq!(r.z.net(), 1);
        }
    }

    #[test]
    fn scenario_validation() {
        let mut s = scenario(vec![Algorithm::Hard]);
        s.p_values = vec![0];
        assert!(run_rebalance_campaign(&s).is_err());
        let mut s = scenario(vec![Algorithm::Brute]);
        s.periods.clear();
        assert!(run_rebalance_campaign(&s).is_err());
        // brute needs no depth
        let mut s = scenario(vec![Algorithm::Brute]);
        s.p_values.clear();
        assert!(run_rebalance_campaign(&s).is_ok());
    }

    #[test]
    fn sweep_origin_is_uniform_mean() {
        let p = PortfolioProblem::new(
            1,
            0.9,
            0.0,
            0.5,
            periods()[0].mu.clone(),
            periods()[0].sigma.clone(),
        )
        .unwrap();
        let pts = sweep_beta_gamma(&p, &[0.0, 1.0], &[0.0, 2.0, 3.0]).unwrap();
        assert_eq!(pts.len(), 6);
        assert_eq!((pts[1].beta, pts[1].gamma), (0.0, 2.0));
        let diag = QaoaCircuit::soft(&p)
            .unwrap()
            .diagonal()
            .energies()
            .to_vec();
        let mean = diag.iter().sum::<f64>() / diag.len() as f64;
        assert!((pts[0].expectation - mean).abs() < 1e-12);
    }
}
