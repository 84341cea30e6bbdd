//! Data ingestion, experiment campaigns and result persistence.

pub mod campaign;
pub mod data;
pub mod output;
pub mod synthetic;

pub use campaign::{
    run_rebalance_campaign, run_single_period_campaign, sweep_beta_gamma, Algorithm,
    PenaltySetting, PeriodResult, RebalanceResult, RebalanceScenario, SingleCampaignResult,
    SolverSettings,
};
pub use data::{derive_statistics, ReturnsDataset};
pub use output::{emit_results, Format, RunManifest};
