//! Dense statevector simulator.
//!
//! Basis index bit `k` is qubit `k` (qubit 0 is least significant). A bit value
//! `b` corresponds to the spin `2b - 1`, so bit 0 is spin -1 and bit 1 is
//! spin +1. Every rotation is `exp(-i * angle * P)` for a Pauli string `P`
//! whose Z factors act with eigenvalue `2b - 1` on each qubit.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{validation, Error, Result};

/// Largest register the simulator will allocate.
pub const MAX_QUBITS: usize = 24;

const NORM_TOLERANCE: f64 = 1e-10;

/// Spin value of `qubit` in basis state `index`.
#[inline]
pub fn spin_of(index: usize, qubit: usize) -> f64 {
    if (index >> qubit) & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    fn check_capacity(n_qubits: usize) -> Result<()> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Capacity {
                what: "n_qubits",
                value: n_qubits,
                min: 1,
                max: MAX_QUBITS,
            });
        }
        Ok(())
    }

    /// `|+>^n`: every amplitude is `2^(-n/2)`.
    pub fn init_uniform(n_qubits: usize) -> Result<Self> {
        Self::check_capacity(n_qubits)?;
        let dim = 1usize << n_qubits;
        let amp = Complex64::new((dim as f64).sqrt().recip(), 0.0);
        Ok(Self {
            n_qubits,
            amplitudes: vec![amp; dim],
        })
    }

    /// Computational basis state `|index>`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        Self::check_capacity(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::Index(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes. The length must be a power of two and the vector
    /// must be normalised to within `1e-10`.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() {
            return Err(validation(format!(
                "amplitude count {len} is not a power of two"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        Self::check_capacity(n_qubits)?;
        let state = Self {
            n_qubits,
            amplitudes,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(validation(format!("state norm {norm} is not 1")));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Mutable access for diagonal phase kernels elsewhere in the crate.
    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::Index(format!(
                "qubit {qubit} out of range for {} qubits",
                self.n_qubits
            )));
        }
        Ok(())
    }

    fn check_pair(&self, a: usize, b: usize) -> Result<()> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if a == b {
            return Err(Error::Index(format!(
                "two-qubit gate on repeated qubit {a}"
            )));
        }
        Ok(())
    }

    /// `exp(-i * angle * Z_qubit)`.
    pub fn apply_exp_z(&mut self, qubit: usize, angle: f64) -> Result<&mut Self> {
        self.check_qubit(qubit)?;
        // spin +1 picks up exp(-i angle), spin -1 picks up exp(+i angle)
        let up = Complex64::from_polar(1.0, -angle);
        let down = up.conj();
        let mask = 1usize << qubit;
        for (index, amp) in self.amplitudes.iter_mut().enumerate() {
            *amp *= if index & mask != 0 { up } else { down };
        }
        Ok(self)
    }

    /// `exp(-i * angle * Z_a Z_b)`.
    pub fn apply_exp_zz(
        &mut self,
        qubit_a: usize,
        qubit_b: usize,
        angle: f64,
    ) -> Result<&mut Self> {
        self.check_pair(qubit_a, qubit_b)?;
        let aligned = Complex64::from_polar(1.0, -angle);
        let anti = aligned.conj();
        for (index, amp) in self.amplitudes.iter_mut().enumerate() {
            let parity = ((index >> qubit_a) ^ (index >> qubit_b)) & 1;
            *amp *= if parity == 0 { aligned } else { anti };
        }
        Ok(self)
    }

    /// `exp(-i * angle * X_qubit)`.
    pub fn apply_exp_x(&mut self, qubit: usize, angle: f64) -> Result<&mut Self> {
        self.check_qubit(qubit)?;
        let (sin, cos) = angle.sin_cos();
        let mix = Complex64::new(0.0, -sin);
        let stride = 1usize << qubit;
        for block in self.amplitudes.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = x0 * cos + x1 * mix;
                *a1 = x1 * cos + x0 * mix;
            }
        }
        Ok(self)
    }

    /// `exp(-i * angle * (X_a X_b + Y_a Y_b))`.
    ///
    /// Only the single-excitation pair `{|01>, |10>}` is rotated; `|00>` and
    /// `|11>` are fixed points.
    pub fn apply_exp_xxyy(
        &mut self,
        qubit_a: usize,
        qubit_b: usize,
        angle: f64,
    ) -> Result<&mut Self> {
        self.check_pair(qubit_a, qubit_b)?;
        let (sin, cos) = (2.0 * angle).sin_cos();
        let mix = Complex64::new(0.0, -sin);
        let mask_a = 1usize << qubit_a;
        let mask_b = 1usize << qubit_b;
        for index in 0..self.amplitudes.len() {
            // visit each pair once, from the member with a=1, b=0
            if index & mask_a == 0 || index & mask_b != 0 {
                continue;
            }
            let partner = index ^ mask_a ^ mask_b;
            let (x, y) = (self.amplitudes[index], self.amplitudes[partner]);
            if x == Complex64::new(0.0, 0.0) && y == Complex64::new(0.0, 0.0) {
                continue;
            }
            self.amplitudes[index] = x * cos + y * mix;
            self.amplitudes[partner] = y * cos + x * mix;
        }
        Ok(self)
    }

    /// `|amplitude_x|^2` for every basis state.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Draws `shots` measurements in the computational basis.
    pub fn sample(&self, shots: usize, seed: u64) -> Result<BTreeMap<usize, usize>> {
        if shots == 0 {
            return Err(validation("shots must be at least 1"));
        }
        let dist = WeightedIndex::new(self.probabilities())
            .map_err(|e| validation(format!("cannot sample from state: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = BTreeMap::new();
        for _ in 0..shots {
            *counts.entry(dist.sample(&mut rng)).or_insert(0) += 1;
        }
        Ok(counts)
    }
}
