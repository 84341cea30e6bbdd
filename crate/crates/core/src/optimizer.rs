//! Bounded Nelder-Mead with seeded multi-start.
//!
//! Proposals leaving the box are folded back in by mirror reflection at the
//! violated face. Each start draws its initial point uniformly inside the
//! box from its own seed; start `k` of a multi-start run uses `seed + k`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_evaluations: usize,
    /// Stop once every vertex lies within this distance of the best one.
    pub simplex_tolerance: f64,
    pub bounds: Vec<(f64, f64)>,
    pub n_starts: usize,
    pub seed: u64,
    /// Initial simplex edge as a fraction of each dimension's range.
    pub initial_step: f64,
}

impl OptimizerConfig {
    /// Defaults for a depth-`p` circuit: `500 p` evaluations, diameter
    /// `1e-4`, 20 starts, 10% initial edges.
    pub fn for_depth(p: usize, seed: u64) -> Self {
        Self {
            max_evaluations: 500 * p.max(1),
            simplex_tolerance: 1e-4,
            bounds: crate::qaoa::QaoaParams::bounds(p),
            n_starts: 20,
            seed,
            initial_step: 0.1,
        }
    }

    pub fn with_bounds(bounds: Vec<(f64, f64)>, seed: u64) -> Self {
        Self {
            max_evaluations: 1000 * bounds.len().max(1),
            simplex_tolerance: 1e-8,
            bounds,
            n_starts: 1,
            seed,
            initial_step: 0.1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_evaluations == 0 {
            return Err(validation("max_evaluations must be at least 1"));
        }
        if !(self.simplex_tolerance > 0.0) {
            return Err(validation("simplex tolerance must be positive"));
        }
        if self.bounds.is_empty() {
            return Err(validation("optimizer needs at least one dimension"));
        }
        if let Some((lo, hi)) = self
            .bounds
            .iter()
            .find(|(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite())
        {
            return Err(validation(format!("invalid bound [{lo}, {hi}]")));
        }
        if !(self.initial_step > 0.0) {
            return Err(validation("initial step must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerResult {
    pub best_angles: Vec<f64>,
    pub best_value: f64,
    pub evaluations: usize,
    pub initial_point: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiStartResult {
    pub starts: Vec<OptimizerResult>,
    pub best_index: usize,
}

impl MultiStartResult {
    pub fn best(&self) -> &OptimizerResult {
        &self.starts[self.best_index]
    }
}

/// Mirrors `x` back into `[lo, hi]`.
pub fn reflect_into(x: f64, lo: f64, hi: f64) -> f64 {
    let width = hi - lo;
    let period = 2.0 * width;
    let mut t = (x - lo) % period;
    if t < 0.0 {
        t += period;
    }
    let folded = if t > width { period - t } else { t };
    (lo + folded).clamp(lo, hi)
}

fn random_point(bounds: &[(f64, f64)], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    bounds
        .iter()
        .map(|&(lo, hi)| rng.gen_range(lo..hi))
        .collect()
}

struct Budgeted<'a, F> {
    objective: &'a F,
    bounds: &'a [(f64, f64)],
    evaluations: usize,
}

impl<F: Fn(&[f64]) -> f64> Budgeted<'_, F> {
    fn eval(&mut self, x: &mut [f64]) -> Result<f64> {
        for (v, &(lo, hi)) in x.iter_mut().zip(self.bounds) {
            *v = reflect_into(*v, lo, hi);
        }
        self.evaluations += 1;
        let value = (self.objective)(x);
        if !value.is_finite() {
            return Err(Error::NonFinite {
                value,
                point: x.to_vec(),
            });
        }
        Ok(value)
    }
}

/// Minimises `objective` from a uniform random start drawn with `config.seed`.
pub fn minimize<F>(objective: F, config: &OptimizerConfig) -> Result<OptimizerResult>
where
    F: Fn(&[f64]) -> f64,
{
    config.validate()?;
    let start = random_point(&config.bounds, config.seed);
    minimize_from(&objective, start, config)
}

/// Minimises `objective` from an explicit starting point.
pub fn minimize_from<F>(
    objective: &F,
    start: Vec<f64>,
    config: &OptimizerConfig,
) -> Result<OptimizerResult>
where
    F: Fn(&[f64]) -> f64,
{
    config.validate()?;
    let dim = config.bounds.len();
    if start.len() != dim {
        return Err(validation(format!(
            "start point has {} coordinates, bounds have {dim}",
            start.len()
        )));
    }
    let mut f = Budgeted {
        objective,
        bounds: &config.bounds,
        evaluations: 0,
    };

    let mut initial_point = start;
    let first = f.eval(&mut initial_point)?;
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(initial_point.clone(), first)];
    for k in 0..dim {
        if f.evaluations >= config.max_evaluations {
            break;
        }
        let (lo, hi) = config.bounds[k];
        let step = config.initial_step * (hi - lo);
        let mut vertex = initial_point.clone();
        // step inward from whichever face is closer
        vertex[k] += if vertex[k] + step <= hi { step } else { -step };
        let value = f.eval(&mut vertex)?;
        simplex.push((vertex, value));
    }

    let mut converged = false;
    while f.evaluations < config.max_evaluations && simplex.len() == dim + 1 {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0].0;
        let diameter = simplex[1..]
            .iter()
            .map(|(v, _)| {
                v.iter()
                    .zip(best)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < config.simplex_tolerance {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|k| simplex[..dim].iter().map(|(v, _)| v[k]).sum::<f64>() / dim as f64)
            .collect();
        let toward = |t: f64, worst: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(worst)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let worst = simplex[dim].0.clone();
        let f_best = simplex[0].1;
        let f_second = simplex[dim - 1].1;
        let f_worst = simplex[dim].1;

        let mut reflected = toward(-1.0, &worst);
        let f_reflected = f.eval(&mut reflected)?;
        if f_reflected < f_best {
            let mut expanded = toward(-2.0, &worst);
            if f.evaluations < config.max_evaluations {
                let f_expanded = f.eval(&mut expanded)?;
                simplex[dim] = if f_expanded < f_reflected {
                    (expanded, f_expanded)
                } else {
                    (reflected, f_reflected)
                };
            } else {
                simplex[dim] = (reflected, f_reflected);
            }
            continue;
        }
        if f_reflected < f_second {
            simplex[dim] = (reflected, f_reflected);
            continue;
        }
        if f.evaluations >= config.max_evaluations {
            break;
        }
        // outside contraction accepts ties with the reflection, inside must improve
        let outside = f_reflected < f_worst;
        let mut contracted = toward(if outside { -0.5 } else { 0.5 }, &worst);
        let f_contracted = f.eval(&mut contracted)?;
        if (outside && f_contracted <= f_reflected) || (!outside && f_contracted < f_worst) {
            simplex[dim] = (contracted, f_contracted);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            if f.evaluations >= config.max_evaluations {
                break;
            }
            let mut shrunk: Vec<f64> = anchor
                .iter()
                .zip(&vertex.0)
                .map(|(a, v)| a + 0.5 * (v - a))
                .collect();
            let value = f.eval(&mut shrunk)?;
            *vertex = (shrunk, value);
        }
    }

    let (best_angles, best_value) = simplex
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("simplex is never empty");
    Ok(OptimizerResult {
        best_angles,
        best_value,
        evaluations: f.evaluations,
        initial_point,
        converged,
    })
}

/// Runs `config.n_starts` independent minimisations; start `k` uses seed
/// `config.seed + k`. Starts run in parallel, results keep start order.
pub fn multi_start<F>(objective: F, config: &OptimizerConfig) -> Result<MultiStartResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    if config.n_starts == 0 {
        return Err(validation("n_starts must be at least 1"));
    }
    let starts = (0..config.n_starts as u64)
        .into_par_iter()
        .map(|k| {
            let start = random_point(&config.bounds, config.seed.wrapping_add(k));
            minimize_from(&objective, start, config)
        })
        .collect::<Result<Vec<_>>>()?;
    let best_index = starts
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.best_value.total_cmp(&b.1.best_value))
        .map(|(i, _)| i)
        .expect("at least one start");
    Ok(MultiStartResult { starts, best_index })
}
