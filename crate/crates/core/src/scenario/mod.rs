//! Stress, rejuvenation and post-rejuvenation runs over the scenario matrix.

mod config;
mod report;
mod runner;

use rayon::prelude::*;
use thiserror::Error;

use crate::cloud::CloudError;
use crate::stats::StatsError;
use crate::workload::WorkloadError;

pub use config::{
    early_failure_policy, paper_matrix, ConfigFormat, PhaseKind, PhaseSpec, PolicyDecision,
    RejuvenationPolicy, ScenarioConfig, PAPER_CONCURRENCY,
};
pub use report::{
    disk_series_name, ErrorLogEntry, HourOutcome, OutcomeTotals, PhaseWindow, ScenarioReport,
    DISK_USED_SUFFIX, MEMORY_AVAILABLE, SWAP_USED, WORKLOAD_DURATION,
};
pub use runner::run_scenario;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("invalid scenario configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Cloud(#[from] CloudError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

impl ScenarioError {
    /// Whether the error comes from the configuration rather than the run.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            ScenarioError::Config(_)
                | ScenarioError::Cloud(CloudError::Config(_))
                | ScenarioError::Workload(WorkloadError::InvalidDefinition(_))
                | ScenarioError::Workload(WorkloadError::InvalidService(_))
                | ScenarioError::Workload(WorkloadError::Cloud(CloudError::Config(_)))
        )
    }
}

/// Runs every scenario, in parallel, keeping results in input order. A
/// failing scenario does not stop the others.
pub fn run_suite(configs: &[ScenarioConfig]) -> Vec<Result<ScenarioReport, ScenarioError>> {
    configs.par_iter().map(run_scenario).collect()
}
