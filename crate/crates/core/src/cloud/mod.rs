//! Quota-limited cloud model: entity ledger, resource gauges, fault injection
//! and redeployment.

mod entity;
mod fault;
mod params;
mod rng;
mod state;

use thiserror::Error;

pub use entity::{default_quotas, EntityCounts, EntityKind, DEFAULT_QUOTA};
pub use fault::{
    default_catalog, AgeingRule, ErrorSpec, FaultConfig, FaultModel, FaultProbability,
    StepSignature, CLOUD_UNAVAILABLE, EXTERNAL_NETWORK_UNREACHABLE, INSUFFICIENT_DISK_SPACE,
    NODE_UNREACHABLE, REBUILD_SERVER_ERROR, SERVER_ERROR_STATUS, VOLUME_ERROR_STATUS,
};
pub use params::{default_nodes, NodeRole, NodeSpec, ResourceParams, Topology};
pub use rng::{stream_rng, RngStream};
pub use state::{CacheImage, CloudSnapshot, CloudState, CreateOutcome, NodeGauges, ResourceEvent};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CloudError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("ledger underflow: no live {0} to remove")]
    LedgerUnderflow(EntityKind),
}
