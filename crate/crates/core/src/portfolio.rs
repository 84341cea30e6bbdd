//! Two-spin long/short encoding of a discrete rebalancing instance.
//!
//! Asset `i` owns two spins: the short decision at index `2i` and the long
//! decision at index `2i + 1`. The held position is `z_i = x_i^+ - x_i^-`,
//! so `(x^-, x^+) = (1, 1)` is a degenerate netted-off flat position.

use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::ising::{IsingBuilder, IsingModel};

/// Trading days per year used to annualise daily statistics.
pub const ANNUALIZATION_FACTOR: f64 = 250.0;

/// Discrete rebalancing instance over `n_assets` assets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioProblem {
    #[serde(rename = "N")]
    pub n_assets: usize,
    /// Net number of lots to hold.
    #[serde(rename = "D")]
    pub net_lots: i32,
    pub lambda: f64,
    /// Fixed cost charged per traded asset.
    #[serde(rename = "T")]
    pub trading_cost: f64,
    /// Penalty scale for the soft investment constraint.
    #[serde(rename = "A", default)]
    pub penalty: f64,
    pub mu: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
    /// Previous positions.
    #[serde(rename = "y")]
    pub previous: Vec<i8>,
}

impl PortfolioProblem {
    /// Instance with zero previous holdings.
    pub fn new(
        net_lots: i32,
        lambda: f64,
        trading_cost: f64,
        penalty: f64,
        mu: Vec<f64>,
        sigma: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n_assets = mu.len();
        let problem = Self {
            n_assets,
            net_lots,
            lambda,
            trading_cost,
            penalty,
            mu,
            sigma,
            previous: vec![0; n_assets],
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn with_previous(mut self, previous: Vec<i8>) -> Result<Self> {
        self.previous = previous;
        self.validate()?;
        Ok(self)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        self.lambda = lambda;
        self.validate()?;
        Ok(self)
    }

    pub fn with_penalty(mut self, penalty: f64) -> Result<Self> {
        self.penalty = penalty;
        self.validate()?;
        Ok(self)
    }

    pub fn n_spins(&self) -> usize {
        2 * self.n_assets
    }

    pub fn layout(&self) -> SpinLayout {
        SpinLayout::new(self.n_assets)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_assets;
        if n == 0 {
            return Err(validation("problem has no assets"));
        }
        if self.mu.len() != n || self.previous.len() != n {
            return Err(validation(format!(
                "mu has {} entries and y has {}, expected {n}",
                self.mu.len(),
                self.previous.len()
            )));
        }
        if self.sigma.len() != n || self.sigma.iter().any(|row| row.len() != n) {
            return Err(validation(format!("sigma must be {n}x{n}")));
        }
        for i in 0..n {
            for j in i + 1..n {
                if (self.sigma[i][j] - self.sigma[j][i]).abs() > 1e-12 {
                    return Err(validation(format!("sigma is not symmetric at ({i}, {j})")));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(validation(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        if self.net_lots.unsigned_abs() as usize > n {
            return Err(validation(format!(
                "|D| = {} exceeds N = {n}",
                self.net_lots.abs()
            )));
        }
        if !(self.trading_cost >= 0.0) {
            return Err(validation(format!(
                "trading cost {} is negative",
                self.trading_cost
            )));
        }
        if !(self.penalty >= 0.0) || !self.penalty.is_finite() {
            return Err(validation(format!(
                "penalty {} must be non-negative",
                self.penalty
            )));
        }
        check_positions(&self.previous)?;
        let finite = self
            .mu
            .iter()
            .chain(self.sigma.iter().flatten())
            .all(|v| v.is_finite());
        if !finite {
            return Err(validation("mu and sigma must be finite"));
        }
        Ok(())
    }
}

fn check_positions(z: &[i8]) -> Result<()> {
    if let Some(bad) = z.iter().find(|v| !(-1..=1).contains(*v)) {
        return Err(validation(format!(
            "position {bad} is not one of -1, 0, +1"
        )));
    }
    Ok(())
}

/// Held positions, one of `-1` (short), `0` (flat) or `+1` (long) per asset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct PositionVector(Vec<i8>);

impl PositionVector {
    pub fn new(z: Vec<i8>) -> Result<Self> {
        check_positions(&z)?;
        Ok(Self(z))
    }

    pub fn flat(n_assets: usize) -> Self {
        Self(vec![0; n_assets])
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn net(&self) -> i32 {
        self.0.iter().map(|&v| i32::from(v)).sum()
    }

    pub fn longs(&self) -> usize {
        self.0.iter().filter(|&&v| v == 1).count()
    }

    pub fn shorts(&self) -> usize {
        self.0.iter().filter(|&&v| v == -1).count()
    }
}

impl TryFrom<Vec<i8>> for PositionVector {
    type Error = crate::Error;

    fn try_from(z: Vec<i8>) -> Result<Self> {
        Self::new(z)
    }
}

impl From<PositionVector> for Vec<i8> {
    fn from(z: PositionVector) -> Self {
        z.0
    }
}

impl std::fmt::Display for PositionVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Asset to spin index mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpinLayout {
    n_assets: usize,
}

impl SpinLayout {
    pub fn new(n_assets: usize) -> Self {
        Self { n_assets }
    }

    pub fn n_assets(&self) -> usize {
        self.n_assets
    }

    pub fn n_spins(&self) -> usize {
        2 * self.n_assets
    }

    pub fn short(&self, asset: usize) -> usize {
        2 * asset
    }

    pub fn long(&self, asset: usize) -> usize {
        2 * asset + 1
    }

    /// Long-decision qubits in asset order.
    pub fn long_register(&self) -> Vec<usize> {
        (0..self.n_assets).map(|i| self.long(i)).collect()
    }

    /// Short-decision qubits in asset order.
    pub fn short_register(&self) -> Vec<usize> {
        (0..self.n_assets).map(|i| self.short(i)).collect()
    }

    /// Decodes basis index `index` into held positions.
    pub fn decode_index(&self, index: usize) -> PositionVector {
        PositionVector(
            (0..self.n_assets)
                .map(|i| {
                    let short = ((index >> self.short(i)) & 1) as i8;
                    let long = ((index >> self.long(i)) & 1) as i8;
                    long - short
                })
                .collect(),
        )
    }

    /// `sum_i z_i` for basis index `index`.
    #[inline]
    pub fn net_of_index(&self, index: usize) -> i32 {
        // long bits sit on odd positions, short bits on even ones
        let mask = (1usize << self.n_spins()) - 1;
        let long = index & mask & 0xAAAA_AAAA_AAAA_AAAA;
        let short = index & mask & 0x5555_5555_5555_5555;
        long.count_ones() as i32 - short.count_ones() as i32
    }
}

/// Decodes a bit vector laid out as `[x_0^-, x_0^+, x_1^-, x_1^+, ...]`.
pub fn decode(bits: &[u8]) -> Result<PositionVector> {
    if !bits.len().is_multiple_of(2) {
        return Err(validation(format!(
            "bit vector length {} is odd",
            bits.len()
        )));
    }
    if bits.iter().any(|&b| b > 1) {
        return Err(validation("bit entries must be 0 or 1"));
    }
    Ok(PositionVector(
        bits.chunks_exact(2)
            .map(|pair| pair[1] as i8 - pair[0] as i8)
            .collect(),
    ))
}

/// Adds `coef * sum_ij w_ij z_i z_j` with `z_i = (s_i^+ - s_i^-) / 2`.
fn add_quadratic_form(
    builder: &mut IsingBuilder,
    layout: SpinLayout,
    weight: impl Fn(usize, usize) -> f64,
) -> Result<()> {
    let n = layout.n_assets();
    for i in 0..n {
        for j in 0..n {
            let w = weight(i, j) / 4.0;
            if w == 0.0 {
                continue;
            }
            let (lp, sp) = (layout.long(i), layout.short(i));
            let (lq, sq) = (layout.long(j), layout.short(j));
            builder.add_term(&[lp, lq], w)?;
            builder.add_term(&[lp, sq], -w)?;
            builder.add_term(&[sp, lq], -w)?;
            builder.add_term(&[sp, sq], w)?;
        }
    }
    Ok(())
}

/// Risk-return cost `lambda * z^T sigma z - (1 - lambda) * mu . z` in spin form.
pub fn encode_risk_return(problem: &PortfolioProblem) -> Result<IsingModel> {
    problem.validate()?;
    let layout = problem.layout();
    let lambda = problem.lambda;
    let mut b = IsingBuilder::new(layout.n_spins());
    add_quadratic_form(&mut b, layout, |i, j| lambda * problem.sigma[i][j])?;
    for (i, &mu) in problem.mu.iter().enumerate() {
        let w = (1.0 - lambda) * mu / 2.0;
        if w != 0.0 {
            b.add_term(&[layout.long(i)], -w)?;
            b.add_term(&[layout.short(i)], w)?;
        }
    }
    Ok(b.build())
}

/// Fixed trading cost relative to the previous positions, in the
/// unconditional coefficient form valid for every `y_i` in `{-1, 0, +1}`.
pub fn encode_trading_cost(problem: &PortfolioProblem) -> Result<IsingModel> {
    problem.validate()?;
    let layout = problem.layout();
    let quarter = problem.trading_cost / 4.0;
    let mut b = IsingBuilder::new(layout.n_spins());
    if quarter == 0.0 {
        return Ok(b.build());
    }
    for (i, &y) in problem.previous.iter().enumerate() {
        let y = f64::from(y);
        let y2 = y * y;
        let (long, short) = (layout.long(i), layout.short(i));
        b.add_term(&[], 3.0 * quarter)?;
        b.add_term(&[long], quarter * (1.0 - y2 - y))?;
        b.add_term(&[short], quarter * (1.0 - y2 + y))?;
        b.add_term(&[long, short], quarter * (2.0 * y2 - 1.0))?;
    }
    Ok(b.build())
}

/// Soft investment penalty `A * (sum z - D)^2` in spin form.
pub fn encode_penalty(problem: &PortfolioProblem) -> Result<IsingModel> {
    problem.validate()?;
    let a = problem.penalty;
    if !(a > 0.0) {
        return Err(validation(format!("penalty A = {a} must be positive")));
    }
    let layout = problem.layout();
    let d = f64::from(problem.net_lots);
    let mut b = IsingBuilder::new(layout.n_spins());
    add_quadratic_form(&mut b, layout, |_, _| a)?;
    for i in 0..layout.n_assets() {
        b.add_term(&[layout.long(i)], -a * d)?;
        b.add_term(&[layout.short(i)], a * d)?;
    }
    b.add_term(&[], a * d * d)?;
    Ok(b.build())
}

/// Penalised objective: risk-return + trading cost + investment penalty.
pub fn build_soft(problem: &PortfolioProblem) -> Result<IsingModel> {
    build_hard(problem)?.add_scaled(&encode_penalty(problem)?, 1.0)
}

/// Objective for the constraint-preserving circuit: risk-return + trading cost.
pub fn build_hard(problem: &PortfolioProblem) -> Result<IsingModel> {
    encode_risk_return(problem)?.add_scaled(&encode_trading_cost(problem)?, 1.0)
}

/// Penalty scale strictly above the spread `max - min` of the unconstrained
/// cost: `1.01 * (max - min)` rounded up to two significant figures. A
/// degenerate spread yields `1e-6`.
pub fn compute_penalty_coefficient(oracle_min: f64, oracle_max: f64) -> Result<f64> {
    if !(oracle_max >= oracle_min) || !oracle_min.is_finite() || !oracle_max.is_finite() {
        return Err(validation(format!(
            "invalid cost range [{oracle_min}, {oracle_max}]"
        )));
    }
    let spread = oracle_max - oracle_min;
    if spread <= 0.0 {
        return Ok(1e-6);
    }
    let target = spread * 1.01;
    let exp = target.log10().floor() as i32 - 1;
    let digits = (target / 10f64.powi(exp) - 1e-9).ceil();
    // dividing by an exact power of ten keeps e.g. 3.8 free of trailing noise
    let rounded = if exp < 0 {
        digits / 10f64.powi(-exp)
    } else {
        digits * 10f64.powi(exp)
    };
    // guard against representation error in the product above
    Ok(if rounded > spread { rounded } else { target })
}

/// Classical metrics of a held portfolio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortfolioMetrics {
    pub expected_return: f64,
    pub risk: f64,
    pub trading_cost: f64,
    pub trade_count: u32,
    /// `expected_return - trading_cost`.
    pub adjusted_return: f64,
}

pub fn metrics(z: &PositionVector, problem: &PortfolioProblem) -> Result<PortfolioMetrics> {
    if z.len() != problem.n_assets {
        return Err(validation(format!(
            "position vector has {} assets, problem has {}",
            z.len(),
            problem.n_assets
        )));
    }
    let zf: Vec<f64> = z.as_slice().iter().map(|&v| f64::from(v)).collect();
    let expected_return: f64 = problem.mu.iter().zip(&zf).map(|(m, v)| m * v).sum();
    let variance = quadratic(&problem.sigma, &zf);
    let traded = z
        .as_slice()
        .iter()
        .zip(&problem.previous)
        .filter(|(a, b)| a != b)
        .count();
    let trade_count = z
        .as_slice()
        .iter()
        .zip(&problem.previous)
        .map(|(a, b)| (i32::from(*a) - i32::from(*b)).unsigned_abs())
        .sum();
    let trading_cost = problem.trading_cost * traded as f64;
    Ok(PortfolioMetrics {
        expected_return,
        risk: variance.max(0.0).sqrt(),
        trading_cost,
        trade_count,
        adjusted_return: expected_return - trading_cost,
    })
}

/// `z^T sigma z`.
pub fn quadratic(sigma: &[Vec<f64>], z: &[f64]) -> f64 {
    sigma
        .iter()
        .zip(z)
        .map(|(row, zi)| zi * row.iter().zip(z).map(|(s, zj)| s * zj).sum::<f64>())
        .sum()
}

/// Scales daily mean returns and covariances to annual figures.
pub fn annualize(mu_daily: &[f64], sigma_daily: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mu = mu_daily.iter().map(|v| v * ANNUALIZATION_FACTOR).collect();
    let sigma = sigma_daily
        .iter()
        .map(|row| row.iter().map(|v| v * ANNUALIZATION_FACTOR).collect())
        .collect();
    (mu, sigma)
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;

    fn toy(n: usize, d: i32, lambda: f64, t: f64, a: f64) -> PortfolioProblem {
        let mu: Vec<f64> = (0..n).map(|i| 0.1 * (i as f64) - 0.05).collect();
        let sigma: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            0.2 + 0.05 * i as f64
                        } else {
                            0.03 * ((i + j) % 3) as f64 - 0.02
                        }
                    })
                    .collect()
            })
            .collect();
        PortfolioProblem::new(d, lambda, t, a, mu, sigma).unwrap()
    }

    /// Table of the trading cost by previous position and `(s^-, s^+)`.
    fn table_cost(y: i8, s_short: i8, s_long: i8, t: f64) -> f64 {
        match (y, s_short, s_long) {
            (-1, 1, -1) => 0.0,
            (0, -1, -1) => 0.0,
            (1, -1, 1) => 0.0,
            _ => t,
        }
    }

    fn spins_for(problem: &PortfolioProblem, index: usize) -> Vec<i8> {
        (0..problem.n_spins())
            .map(|k| if (index >> k) & 1 == 1 { 1 } else { -1 })
            .collect()
    }

    #[test]
    fn decode_table() {
        assert_eq!(decode(&[0, 1]).unwrap().as_slice(), &[1]);
        assert_eq!(decode(&[1, 0]).unwrap().as_slice(), &[-1]);
        assert_eq!(decode(&[1, 1]).unwrap().as_slice(), &[0]);
        assert_eq!(decode(&[0; 8]).unwrap(), PositionVector::flat(4));
        assert!(decode(&[0, 1, 1]).is_err());
    }

    #[test]
    fn layout_indices() {
        let layout = SpinLayout::new(3);
        assert_eq!(layout.short_register(), vec![0, 2, 4]);
        assert_eq!(layout.long_register(), vec![1, 3, 5]);
        // asset 0 long, asset 2 short
        let index = (1 << 1) | (1 << 4);
        assert_eq!(layout.decode_index(index).as_slice(), &[1, 0, -1]);
        assert_eq!(layout.net_of_index(index), 0);
    }

    #[test]
    fn risk_return_single_asset_at_zero_lambda() {
        let p = PortfolioProblem::new(0, 0.0, 0.0, 1.0, vec![0.4], vec![vec![0.9]]).unwrap();
        let m = encode_risk_return(&p).unwrap();
        assert_abs_diff_eq!(m.bias()[1], -0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(m.bias()[0], 0.2, epsilon = 1e-15);
        assert_eq!(m.couplings().count(), 0);
        assert_eq!(m.constant(), 0.0);
    }

    #[test]
    fn risk_return_zero_inputs() {
        let p =
            PortfolioProblem::new(1, 0.5, 0.0, 1.0, vec![0.0; 3], vec![vec![0.0; 3]; 3]).unwrap();
        assert!(encode_risk_return(&p).unwrap().is_zero());
    }

    #[test]
    fn risk_return_matches_markowitz_at_unit_lambda() {
        let p = toy(3, 1, 1.0, 0.0, 1.0);
        let m = encode_risk_return(&p).unwrap();
        let layout = p.layout();
        for x in 0..1usize << 6 {
            let z: Vec<f64> = layout
                .decode_index(x)
                .as_slice()
                .iter()
                .map(|&v| v as f64)
                .collect();
            assert_abs_diff_eq!(
                m.evaluate_index(x),
                quadratic(&p.sigma, &z),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn trading_cost_table_all_cases() {
        let t = 0.7;
        for y in [-1i8, 0, 1] {
            let p = PortfolioProblem::new(0, 0.5, t, 1.0, vec![0.0], vec![vec![0.0]])
                .unwrap()
                .with_previous(vec![y])
                .unwrap();
            let m = encode_trading_cost(&p).unwrap();
            for (s_short, s_long) in [(-1, -1), (-1, 1), (1, -1), (1, 1)] {
                let v = m.evaluate(&[s_short, s_long]).unwrap();
                assert!(
                    (v - table_cost(y, s_short, s_long, t)).abs() < 1e-12,
                    "y={y} s=({s_short},{s_long})"
                );
            }
        }
    }

    #[test]
    fn penalty_examples() {
        let p = toy(2, 1, 0.5, 0.0, 1.0);
        let m = encode_penalty(&p).unwrap();
        let layout = p.layout();
        for x in 0..16 {
            let k = layout.net_of_index(x) - 1;
            assert_abs_diff_eq!(m.evaluate_index(x), f64::from(k * k), epsilon = 1e-12);
        }
        // z = (-1, -1): both short bits set
        assert_abs_diff_eq!(m.evaluate_index(0b0101), 9.0, epsilon = 1e-12);
        assert!(encode_penalty(&p.clone().with_penalty(0.0).unwrap()).is_err());
    }

    #[test]
    fn soft_requires_positive_penalty() {
        let p = toy(2, 1, 0.5, 0.0, 1.0).with_penalty(0.0).unwrap();
        assert!(build_soft(&p).is_err());
        assert!(build_hard(&p).is_ok());
    }

    #[test]
    fn hard_model_special_cases() {
        let p = toy(3, 1, 0.3, 0.0, 1.0);
        assert_eq!(build_hard(&p).unwrap(), encode_risk_return(&p).unwrap());

        let mut a = toy(3, 1, 1.0, 0.1, 1.0);
        let ma = build_hard(&a).unwrap();
        a.mu = vec![5.0, -3.0, 2.0];
        assert_eq!(build_hard(&a).unwrap(), ma);
    }

    #[test]
    fn soft_equals_hard_on_feasible_states() {
        let p = toy(3, 1, 0.4, 0.2, 2.0);
        let soft = build_soft(&p).unwrap();
        let hard = build_hard(&p).unwrap();
        let layout = p.layout();
        for x in (0..64).filter(|&x| layout.net_of_index(x) == 1) {
            assert_abs_diff_eq!(
                soft.evaluate_index(x),
                hard.evaluate_index(x),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn penalty_coefficient_rule() {
        assert_eq!(compute_penalty_coefficient(3.0, 3.0).unwrap(), 1e-6);
        assert_abs_diff_eq!(
            compute_penalty_coefficient(0.0, 1.0).unwrap(),
            1.1,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            compute_penalty_coefficient(-0.2, 0.5).unwrap(),
            0.71,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            compute_penalty_coefficient(0.0, 0.0297).unwrap(),
            0.030,
            epsilon = 1e-12
        );
        assert!(compute_penalty_coefficient(1.0, 0.0).is_err());
    }

    #[test]
    fn metric_examples() {
        let p = toy(8, 4, 0.5, 0.015, 1.0);
        let z = PositionVector::new(vec![1, 1, 1, 1, 1, 1, -1, -1]).unwrap();
        let m = metrics(&z, &p).unwrap();
        assert_eq!(m.trade_count, 8);
        assert_abs_diff_eq!(m.trading_cost, 8.0 * 0.015, epsilon = 1e-15);

        let same = p.clone().with_previous(z.as_slice().to_vec()).unwrap();
        let m = metrics(&z, &same).unwrap();
        assert_eq!((m.trade_count, m.trading_cost), (0, 0.0));

        let flat = metrics(&PositionVector::flat(8), &p).unwrap();
        assert_eq!((flat.expected_return, flat.risk), (0.0, 0.0));

        // a reversal counts two lots
        let rev = p.with_previous(vec![-1, 0, 0, 0, 0, 0, 0, 0]).unwrap();
        let z = PositionVector::new(vec![1, 0, 0, 0, 0, 0, 0, 0]).unwrap();
        assert_eq!(metrics(&z, &rev).unwrap().trade_count, 2);
    }

    #[test]
    fn annualize_examples() {
        let (mu, sigma) = annualize(
            &[0.001477, 0.0],
            &[vec![0.009988f64.powi(2), 0.0], vec![0.0, 0.0]],
        );
        assert_abs_diff_eq!(mu[0], 0.36925, epsilon = 1e-12);
        assert_eq!(mu[1], 0.0);
        assert_abs_diff_eq!(sigma[0][0], 250.0 * 0.009988f64.powi(2), epsilon = 1e-15);
        assert_eq!(sigma[1][1], 0.0);
    }

    #[test]
    fn problem_validation() {
        let p = toy(3, 1, 0.5, 0.0, 1.0);
        assert!(p.clone().with_lambda(1.5).is_err());
        assert!(p.clone().with_previous(vec![2, 0, 0]).is_err());
        let mut bad = p.clone();
        bad.sigma[0][1] += 1e-6;
        assert!(bad.validate().is_err());
        let mut bad = p.clone();
        bad.net_lots = 4;
        assert!(bad.validate().is_err());
        let mut bad = p;
        bad.trading_cost = -1.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn problem_json_schema() {
        let p = toy(2, 1, 0.5, 0.01, 1.5);
        let v = serde_json::to_value(&p).unwrap();
        for key in ["N", "D", "lambda", "T", "A", "mu", "sigma", "y"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        let back: PortfolioProblem = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
    }

    proptest! {
        #[test]
        fn soft_is_sum_of_components(
            y in prop::collection::vec(-1i8..=1, 4),
            lambda in 0.0..=1.0f64,
            t in 0.0..0.5f64,
            a in 0.01..3.0f64,
            index in 0usize..256,
        ) {
            let p = toy(4, 2, lambda, t, a).with_previous(y).unwrap();
            let parts = encode_risk_return(&p).unwrap().evaluate_index(index)
                + encode_trading_cost(&p).unwrap().evaluate_index(index)
                + encode_penalty(&p).unwrap().evaluate_index(index);
            let soft = build_soft(&p).unwrap().evaluate_index(index);
            let hard = build_hard(&p).unwrap().evaluate_index(index);
            prop_assert!((soft - parts).abs() < 1e-10);
            prop_assert!((hard + encode_penalty(&p).unwrap().evaluate_index(index) - soft).abs() < 1e-10);
        }

        #[test]
        fn soft_matches_direct_formulas(
            y in prop::collection::vec(-1i8..=1, 3),
            lambda in 0.0..=1.0f64,
            t in 0.0..0.5f64,
            a in 0.01..3.0f64,
        ) {
            let p = toy(3, 1, lambda, t, a).with_previous(y.clone()).unwrap();
            let soft = build_soft(&p).unwrap();
            let layout = p.layout();
            for x in 0..64usize {
                let s = spins_for(&p, x);
                let z: Vec<f64> = layout.decode_index(x).as_slice().iter().map(|&v| v as f64).collect();
                let rr = lambda * quadratic(&p.sigma, &z)
                    - (1.0 - lambda) * p.mu.iter().zip(&z).map(|(m, v)| m * v).sum::<f64>();
                let tc: f64 = (0..3).map(|i| table_cost(y[i], s[2 * i], s[2 * i + 1], t)).sum();
                let k = z.iter().sum::<f64>() - 1.0;
                let expected = rr + tc + a * k * k;
                prop_assert!((soft.evaluate(&s).unwrap() - expected).abs() < 1e-9);
            }
        }
    }
}
