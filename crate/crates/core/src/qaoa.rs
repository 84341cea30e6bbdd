//! Soft- and hard-constraint QAOA circuits on the statevector simulator.
//!
//! The soft variant starts from `|+>^2N`, alternates the penalised cost with
//! the transverse-field X mixer. The hard variant starts from the entangled
//! feasible state (long lots for the first `D` assets, Bell pairs elsewhere)
//! and mixes with two XY parity rings, one over the long qubits and one over
//! the short qubits. Each ring conserves its register's Hamming weight, and
//! the start state fixes `weight(long) - weight(short) = D`, so every
//! amplitude outside the feasible subspace stays exactly zero.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::ising::IsingModel;
use crate::portfolio::{build_hard, build_soft, PortfolioProblem, SpinLayout};
use crate::statevector::StateVector;

/// Probability below which a state is treated as never observed.
pub const NEGLIGIBLE_PROBABILITY: f64 = 1e-12;

/// Circuit angles for depth `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaParams {
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl QaoaParams {
    pub fn new(beta: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        if beta.len() != gamma.len() {
            return Err(validation(format!(
                "beta has {} angles and gamma has {}",
                beta.len(),
                gamma.len()
            )));
        }
        if let Some(b) = beta.iter().find(|b| !(0.0..=PI).contains(*b)) {
            return Err(validation(format!("beta angle {b} outside [0, pi]")));
        }
        if let Some(g) = gamma.iter().find(|g| !(0.0..=2.0 * PI).contains(*g)) {
            return Err(validation(format!("gamma angle {g} outside [0, 2pi]")));
        }
        Ok(Self { beta, gamma })
    }

    /// Zero angles at depth `p`, the identity circuit.
    pub fn zeros(p: usize) -> Self {
        Self {
            beta: vec![0.0; p],
            gamma: vec![0.0; p],
        }
    }

    /// Splits an optimizer point laid out as `[beta_1..beta_p, gamma_1..gamma_p]`.
    pub fn from_flat(angles: &[f64]) -> Result<Self> {
        if !angles.len().is_multiple_of(2) {
            return Err(validation(format!(
                "odd angle vector length {}",
                angles.len()
            )));
        }
        let (beta, gamma) = angles.split_at(angles.len() / 2);
        Self::new(beta.to_vec(), gamma.to_vec())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.beta.iter().chain(&self.gamma).copied().collect()
    }

    pub fn depth(&self) -> usize {
        self.beta.len()
    }

    /// Box `[0, pi]^p x [0, 2pi]^p` matching [`QaoaParams::to_flat`].
    pub fn bounds(p: usize) -> Vec<(f64, f64)> {
        let mut bounds = vec![(0.0, PI); p];
        bounds.extend(std::iter::repeat_n((0.0, 2.0 * PI), p));
        bounds
    }
}

/// Cost of every basis state, precomputed once per model so that a cost
/// layer is a single diagonal phase sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CostDiagonal {
    energies: Vec<f64>,
    constant: f64,
}

impl CostDiagonal {
    pub fn new(model: &IsingModel) -> Self {
        Self {
            energies: model.energies(),
            constant: model.constant(),
        }
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn n_qubits(&self) -> usize {
        self.energies.len().trailing_zeros() as usize
    }

    /// `exp(-i * gamma * (C - c))`. Zero amplitudes are left untouched.
    pub fn apply_phase(&self, state: &mut StateVector, gamma: f64) -> Result<()> {
        if state.dim() != self.energies.len() {
            return Err(validation(format!(
                "cost diagonal covers {} states, state has {}",
                self.energies.len(),
                state.dim()
            )));
        }
        let zero = Complex64::new(0.0, 0.0);
        for (amp, &e) in state.amplitudes_mut().iter_mut().zip(&self.energies) {
            if *amp != zero {
                *amp *= Complex64::from_polar(1.0, -gamma * (e - self.constant));
            }
        }
        Ok(())
    }

    /// `sum_x |a_x|^2 C(x)`.
    pub fn expectation(&self, probabilities: &[f64]) -> f64 {
        probabilities
            .iter()
            .zip(&self.energies)
            .map(|(p, e)| p * e)
            .sum()
    }

    /// `Re <psi| C |psi>` contracted directly on amplitudes.
    pub fn expectation_direct(&self, state: &StateVector) -> f64 {
        state
            .amplitudes()
            .iter()
            .zip(&self.energies)
            .map(|(a, e)| (a.conj() * *e * a).re)
            .sum()
    }
}

/// Gate-by-gate cost unitary: `exp(-i gamma h_i Z_i)` for each non-zero bias
/// and `exp(-i gamma J_ij Z_i Z_j)` for each non-zero coupling. The constant
/// term is a global phase and is skipped.
pub fn cost_layer(state: &mut StateVector, model: &IsingModel, gamma: f64) -> Result<()> {
    if model.n_spins() != state.n_qubits() {
        return Err(validation(format!(
            "model has {} spins, state has {} qubits",
            model.n_spins(),
            state.n_qubits()
        )));
    }
    for (i, &h) in model.bias().iter().enumerate() {
        if h != 0.0 {
            state.apply_exp_z(i, gamma * h)?;
        }
    }
    for (i, j, coupling) in model.couplings() {
        state.apply_exp_zz(i, j, gamma * coupling)?;
    }
    Ok(())
}

/// `exp(-i beta X_q)` on every qubit.
pub fn x_mixer_layer(state: &mut StateVector, beta: f64) -> Result<()> {
    for q in 0..state.n_qubits() {
        state.apply_exp_x(q, beta)?;
    }
    Ok(())
}

/// Register positions touched by one parity ring pass, in application order:
/// odd-start pairs, then even-start pairs with modular wrap, then the closing
/// `(R, 1)` pair only when `R` is odd.
pub fn parity_ring_pairs(size: usize) -> Result<Vec<(usize, usize)>> {
    if size < 2 {
        return Err(validation(format!(
            "parity ring needs at least 2 qubits, got {size}"
        )));
    }
    // 1-based a as in the ring definition; a + 1 wraps modulo size
    let next = |a: usize| a % size + 1;
    let mut pairs = Vec::with_capacity(size);
    for a in (1..size).step_by(2) {
        pairs.push((a - 1, next(a) - 1));
    }
    let even_end = if size.is_multiple_of(2) {
        size
    } else {
        size - 1
    };
    for a in (2..=even_end).step_by(2) {
        pairs.push((a - 1, next(a) - 1));
    }
    if size % 2 == 1 {
        pairs.push((size - 1, 0));
    }
    Ok(pairs)
}

/// One XY parity ring pass over `register` at angle `beta`.
pub fn parity_mixer_layer(state: &mut StateVector, register: &[usize], beta: f64) -> Result<()> {
    for (i, a) in register.iter().enumerate() {
        if register[..i].contains(a) {
            return Err(validation(format!("qubit {a} repeated in parity register")));
        }
    }
    for (a, b) in parity_ring_pairs(register.len())? {
        state.apply_exp_xxyy(register[a], register[b], beta)?;
    }
    Ok(())
}

/// Feasible start state: assets `0..D` hold `|x^- x^+> = |01>`, assets
/// `D..N` hold `(|00> + |11>) / sqrt 2`.
pub fn init_hard_constrained(n_assets: usize, net_lots: i32) -> Result<StateVector> {
    if net_lots < 0 || net_lots as usize > n_assets {
        return Err(validation(format!(
            "net lots D = {net_lots} must lie in 0..={n_assets}"
        )));
    }
    let d = net_lots as usize;
    let layout = SpinLayout::new(n_assets);
    let mut state = StateVector::basis(layout.n_spins(), 0)?;
    let free = n_assets - d;
    let mut base = 0usize;
    for i in 0..d {
        base |= 1 << layout.long(i);
    }
    let amp = Complex64::new((0.5f64).powf(free as f64 / 2.0), 0.0);
    let amps = state.amplitudes_mut();
    amps[0] = Complex64::new(0.0, 0.0);
    for netted in 0..1usize << free {
        let mut index = base;
        for k in 0..free {
            if (netted >> k) & 1 == 1 {
                let asset = d + k;
                index |= (1 << layout.long(asset)) | (1 << layout.short(asset));
            }
        }
        amps[index] = amp;
    }
    Ok(state)
}

/// Probability mass by number of short bits set, `0..=N-D`.
pub fn band_occupancy(probabilities: &[f64], layout: SpinLayout, net_lots: i32) -> Vec<f64> {
    let bands = (layout.n_assets() as i32 - net_lots).max(0) as usize + 1;
    let short_mask: usize = layout.short_register().iter().map(|q| 1usize << q).sum();
    let mut occupancy = vec![0.0; bands];
    for (x, p) in probabilities.iter().enumerate() {
        let k = (x & short_mask).count_ones() as usize;
        if k < bands {
            occupancy[k] += p;
        }
    }
    occupancy
}

/// Which circuit family a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Soft,
    Hard,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Soft => "soft",
            Variant::Hard => "hard",
        }
    }
}

/// Outcome of one circuit execution.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub final_state: StateVector,
    pub expectation: f64,
    pub distribution: Vec<f64>,
    /// Most probable feasible state, if any feasible state was observed.
    pub selected_bits: Option<usize>,
}

/// A prepared circuit: problem layout, cost model and its diagonal.
#[derive(Debug, Clone)]
pub struct QaoaCircuit {
    variant: Variant,
    layout: SpinLayout,
    net_lots: i32,
    model: IsingModel,
    diagonal: CostDiagonal,
    initial: StateVector,
}

impl QaoaCircuit {
    pub fn new(variant: Variant, problem: &PortfolioProblem, model: IsingModel) -> Result<Self> {
        problem.validate()?;
        let layout = problem.layout();
        if model.n_spins() != layout.n_spins() {
            return Err(validation(format!(
                "model has {} spins, problem needs {}",
                model.n_spins(),
                layout.n_spins()
            )));
        }
        let initial = match variant {
            Variant::Soft => StateVector::init_uniform(layout.n_spins())?,
            Variant::Hard => {
                if layout.n_assets() < 2 {
                    return Err(validation("parity ring mixers need at least 2 assets"));
                }
                init_hard_constrained(layout.n_assets(), problem.net_lots)?
            }
        };
        Ok(Self {
            variant,
            layout,
            net_lots: problem.net_lots,
            diagonal: CostDiagonal::new(&model),
            model,
            initial,
        })
    }

    /// Soft circuit over the penalised objective built from `problem`.
    pub fn soft(problem: &PortfolioProblem) -> Result<Self> {
        Self::new(Variant::Soft, problem, build_soft(problem)?)
    }

    /// Hard circuit over the unpenalised objective built from `problem`.
    pub fn hard(problem: &PortfolioProblem) -> Result<Self> {
        Self::new(Variant::Hard, problem, build_hard(problem)?)
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn model(&self) -> &IsingModel {
        &self.model
    }

    pub fn diagonal(&self) -> &CostDiagonal {
        &self.diagonal
    }

    pub fn layout(&self) -> SpinLayout {
        self.layout
    }

    pub fn initial_state(&self) -> &StateVector {
        &self.initial
    }

    pub fn is_feasible(&self, index: usize) -> bool {
        self.layout.net_of_index(index) == self.net_lots
    }

    /// Evolves the initial state through `p` cost/mixer layers, in order
    /// `alpha = 1..p`.
    pub fn evolve(&self, params: &QaoaParams) -> Result<StateVector> {
        let mut state = self.initial.clone();
        let long = self.layout.long_register();
        let short = self.layout.short_register();
        for (&beta, &gamma) in params.beta.iter().zip(&params.gamma) {
            self.diagonal.apply_phase(&mut state, gamma)?;
            match self.variant {
                Variant::Soft => x_mixer_layer(&mut state, beta)?,
                Variant::Hard => {
                    parity_mixer_layer(&mut state, &long, beta)?;
                    parity_mixer_layer(&mut state, &short, beta)?;
                }
            }
        }
        Ok(state)
    }

    /// `<psi_1| C |psi_1>` without materialising a [`RunResult`].
    pub fn expectation(&self, params: &QaoaParams) -> Result<f64> {
        let state = self.evolve(params)?;
        Ok(self.diagonal.expectation_direct(&state))
    }

    pub fn run(&self, params: &QaoaParams) -> Result<RunResult> {
        let final_state = self.evolve(params)?;
        let distribution = final_state.probabilities();
        let expectation = self.diagonal.expectation(&distribution);
        let selected_bits = select_solution(&distribution, self.diagonal.energies(), |x| {
            self.is_feasible(x)
        })
        .ok();
        Ok(RunResult {
            final_state,
            expectation,
            distribution,
            selected_bits,
        })
    }

    /// Probability mass on states satisfying the investment constraint.
    pub fn feasible_mass(&self, distribution: &[f64]) -> f64 {
        distribution
            .iter()
            .enumerate()
            .filter(|(x, _)| self.is_feasible(*x))
            .map(|(_, p)| p)
            .sum()
    }
}

pub fn run_soft(
    problem: &PortfolioProblem,
    params: &QaoaParams,
    model_soft: &IsingModel,
) -> Result<RunResult> {
    QaoaCircuit::new(Variant::Soft, problem, model_soft.clone())?.run(params)
}

pub fn run_hard(
    problem: &PortfolioProblem,
    params: &QaoaParams,
    model_hard: &IsingModel,
) -> Result<RunResult> {
    QaoaCircuit::new(Variant::Hard, problem, model_hard.clone())?.run(params)
}

/// Most probable state accepted by `feasible`; ties (within
/// [`NEGLIGIBLE_PROBABILITY`]) go to the lower cost, then the lower index.
pub fn select_solution(
    distribution: &[f64],
    energies: &[f64],
    feasible: impl Fn(usize) -> bool,
) -> Result<usize> {
    let best = distribution
        .iter()
        .enumerate()
        .filter(|(x, _)| feasible(*x))
        .map(|(_, &p)| p)
        .fold(0.0f64, f64::max);
    if best <= NEGLIGIBLE_PROBABILITY {
        return Err(Error::NoSolution {
            threshold: NEGLIGIBLE_PROBABILITY,
        });
    }
    let mut chosen: Option<usize> = None;
    for (x, &p) in distribution.iter().enumerate() {
        if p < best - NEGLIGIBLE_PROBABILITY || !feasible(x) {
            continue;
        }
        match chosen {
            Some(c) if energies[c] <= energies[x] => {}
            _ => chosen = Some(x),
        }
    }
    Ok(chosen.expect("at least one feasible state reaches the maximum"))
}
