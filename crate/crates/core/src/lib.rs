//! Discrete portfolio rebalancing as Ising-model QAOA.
//!
//! The crate is organised bottom-up:
//!
//! - [`statevector`]: dense noiseless simulator with the handful of unitaries QAOA needs.
//! - [`ising`]: quadratic spin cost functions and a canonicalising builder.
//! - [`portfolio`]: the long/short two-spin encoding of a rebalancing instance.
//! - [`qaoa`]: soft (penalty + X mixer) and hard (Bell start + parity ring mixers) circuits.
//! - [`optimizer`]: bounded Nelder-Mead with seeded multi-start.
//! - [`oracle`]: exhaustive enumeration used as the reference for everything above.
//! - [`harness`]: data ingestion, experiment campaigns and result persistence.

// validation is written as `!(x > 0.0)` so NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod ising;
pub mod optimizer;
pub mod oracle;
pub mod portfolio;
pub mod qaoa;
pub mod statevector;

pub use error::{Error, Result};
pub use ising::{IsingBuilder, IsingModel};
pub use optimizer::{MultiStartResult, OptimizerConfig, OptimizerResult};
pub use oracle::{Extrema, FrontierPoint};
pub use portfolio::{PortfolioMetrics, PortfolioProblem, PositionVector, SpinLayout};
pub use qaoa::{CostDiagonal, QaoaCircuit, QaoaParams, RunResult, Variant};
pub use statevector::StateVector;
