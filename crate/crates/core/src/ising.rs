//! Quadratic spin cost functions `C(s) = c + sum h_i s_i + sum_{i<j} J_ij s_i s_j`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{validation, Result};
use crate::statevector::spin_of;

/// Canonical Ising model with dense bias and upper-triangular coupling storage.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    n_spins: usize,
    constant: f64,
    bias: Vec<f64>,
    // row-major n x n; only entries with i < j are ever non-zero
    coupling: Vec<f64>,
}

impl IsingModel {
    pub fn zero(n_spins: usize) -> Self {
        Self {
            n_spins,
            constant: 0.0,
            bias: vec![0.0; n_spins],
            coupling: vec![0.0; n_spins * n_spins],
        }
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// `J_ij` for `i < j`, zero otherwise.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        if i < j && j < self.n_spins {
            self.coupling[i * self.n_spins + j]
        } else {
            0.0
        }
    }

    /// Non-zero couplings as `(i, j, J_ij)` with `i < j`, in row-major order.
    pub fn couplings(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n_spins;
        (0..n).flat_map(move |i| {
            (i + 1..n).filter_map(move |j| {
                let v = self.coupling[i * n + j];
                (v != 0.0).then_some((i, j, v))
            })
        })
    }

    /// Evaluates the cost on an explicit `±1` spin vector.
    pub fn evaluate(&self, spins: &[i8]) -> Result<f64> {
        if spins.len() != self.n_spins {
            return Err(validation(format!(
                "spin vector has length {}, model has {} spins",
                spins.len(),
                self.n_spins
            )));
        }
        if let Some(bad) = spins.iter().find(|s| **s != 1 && **s != -1) {
            return Err(validation(format!("spin value {bad} is not ±1")));
        }
        let s: Vec<f64> = spins.iter().map(|&v| f64::from(v)).collect();
        Ok(self.evaluate_unchecked(|i| s[i]))
    }

    /// Cost of computational basis state `index` under the bit/spin
    /// convention `s = 2b - 1`.
    pub fn evaluate_index(&self, index: usize) -> f64 {
        self.evaluate_unchecked(|i| spin_of(index, i))
    }

    fn evaluate_unchecked(&self, spin: impl Fn(usize) -> f64) -> f64 {
        let n = self.n_spins;
        let mut total = self.constant;
        for i in 0..n {
            let si = spin(i);
            total += self.bias[i] * si;
            let row = &self.coupling[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for (j, &v) in row.iter().enumerate().skip(i + 1) {
                if v != 0.0 {
                    acc += v * spin(j);
                }
            }
            total += si * acc;
        }
        total
    }

    /// Cost of every basis state, indexed by basis index.
    pub fn energies(&self) -> Vec<f64> {
        (0..1usize << self.n_spins)
            .map(|x| self.evaluate_index(x))
            .collect()
    }

    /// `a + scale * b`, coefficient by coefficient.
    pub fn add_scaled(&self, other: &IsingModel, scale: f64) -> Result<IsingModel> {
        if self.n_spins != other.n_spins {
            return Err(validation(format!(
                "cannot combine models over {} and {} spins",
                self.n_spins, other.n_spins
            )));
        }
        let zip = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| x + scale * y).collect()
        };
        Ok(IsingModel {
            n_spins: self.n_spins,
            constant: self.constant + scale * other.constant,
            bias: zip(&self.bias, &other.bias),
            coupling: zip(&self.coupling, &other.coupling),
        })
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0
            && self.bias.iter().all(|v| *v == 0.0)
            && self.coupling.iter().all(|v| *v == 0.0)
    }
}

/// Accumulates polynomial terms of degree at most two into an [`IsingModel`].
#[derive(Debug, Clone)]
pub struct IsingBuilder {
    model: IsingModel,
}

impl IsingBuilder {
    pub fn new(n_spins: usize) -> Self {
        Self {
            model: IsingModel::zero(n_spins),
        }
    }

    /// Adds `coefficient * prod_{k in indices} s_k`.
    ///
    /// A repeated pair `(i, i)` folds into the constant since `s_i^2 = 1`.
    pub fn add_term(&mut self, indices: &[usize], coefficient: f64) -> Result<&mut Self> {
        let n = self.model.n_spins;
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(validation(format!(
                "spin index {bad} out of range for {n} spins"
            )));
        }
        match *indices {
            [] => self.model.constant += coefficient,
            [i] => self.model.bias[i] += coefficient,
            [i, j] if i == j => self.model.constant += coefficient,
            [i, j] => {
                let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                self.model.coupling[lo * n + hi] += coefficient;
            }
            _ => {
                return Err(validation(format!(
                    "terms of degree {} are not supported",
                    indices.len()
                )))
            }
        }
        Ok(self)
    }

    pub fn build(&self) -> IsingModel {
        self.model.clone()
    }
}

#[derive(Serialize, Deserialize)]
struct IsingDocument {
    n_spins: usize,
    c: f64,
    h: Vec<f64>,
    #[serde(rename = "J")]
    couplings: Vec<(usize, usize, f64)>,
}

impl Serialize for IsingModel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        IsingDocument {
            n_spins: self.n_spins,
            c: self.constant,
            h: self.bias.clone(),
            couplings: self.couplings().collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IsingModel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = IsingDocument::deserialize(deserializer)?;
        if doc.h.len() != doc.n_spins {
            return Err(D::Error::custom("h length does not match n_spins"));
        }
        let mut builder = IsingBuilder::new(doc.n_spins);
        builder.add_term(&[], doc.c).map_err(D::Error::custom)?;
        for (i, v) in doc.h.iter().enumerate() {
            builder.add_term(&[i], *v).map_err(D::Error::custom)?;
        }
        for (i, j, v) in doc.couplings {
            if i == j {
                return Err(D::Error::custom("diagonal coupling entry"));
            }
            builder.add_term(&[i, j], v).map_err(D::Error::custom)?;
        }
        Ok(builder.build())
    }
}
