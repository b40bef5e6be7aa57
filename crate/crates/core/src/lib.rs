//! Deterministic simulation of software ageing in a quota-limited cloud, and
//! the trend statistics used to detect it.
//!
//! A scenario runs a stress phase of back-to-back workloads, a rejuvenation
//! (redeploy) and a short post-rejuvenation phase on virtual time, sampling
//! resource gauges throughout. [`stats`] turns the sampled series into
//! Mann-Kendall verdicts, Sen's slopes and ageing/rejuvenation deltas.

pub mod cloud;
pub mod ingest;
pub mod report;
pub mod scenario;
pub mod stats;
pub mod time;
pub mod workload;

pub use cloud::{CloudError, CloudSnapshot, CloudState, EntityKind, FaultConfig, ResourceParams, Topology};
pub use ingest::{ingest, ingest_workload_report, write_series_csv, IngestError};
pub use report::ReportBundle;
pub use scenario::{
    paper_matrix, run_scenario, run_suite, ConfigFormat, PhaseKind, PhaseSpec, RejuvenationPolicy,
    ScenarioConfig, ScenarioError, ScenarioReport,
};
pub use stats::{
    analyze_indicator, mann_kendall, sens_slope, AgeingSummary, IndicatorAnalysis, IndicatorSeries,
    StatsError, TrendTestResult, TrendVerdict, Unit,
};
pub use time::SimTime;
pub use workload::{ServiceParams, WorkloadDefinition, WorkloadError, WorkloadResult};
