//! The workload: a sequence of create/operate steps whose cleanup commands
//! are replayed from a LIFO stack, executed by a virtual-clock event loop.

mod definition;
mod exec;
mod service;
mod stream;

use thiserror::Error;

use crate::cloud::CloudError;

pub use definition::{ActionType, Module, StepSpec, WorkloadDefinition};
pub use exec::{
    run_workload, unavailable_result, Classification, Engine, StepOutcome, StepRecord,
    WorkloadExec, WorkloadFailure, WorkloadResult,
};
pub use service::{Contention, InFlight, ServiceModel, ServiceParams};
pub use stream::{run_stream, WorkloadStream};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkloadError {
    #[error("invalid workload definition: {0}")]
    InvalidDefinition(String),
    #[error("invalid service parameters: {0}")]
    InvalidService(String),
    #[error(transparent)]
    Cloud(#[from] CloudError),
}
