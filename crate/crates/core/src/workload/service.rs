use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::WorkloadError;
use crate::cloud::{CloudState, Topology};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contention {
    /// Requests share the service slots: `max(1, in_flight / slots)`.
    Linear,
    /// No slowdown from concurrency.
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InFlight {
    /// Every running workload loads the cloud.
    #[default]
    Running,
    /// Only workloads holding a quota-limited entity load the cloud.
    HoldingQuota,
}

/// Per-step service times. The base values are illustrative; only their
/// shape (slower with ageing and with contention) matters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceParams {
    pub default_base_secs: f64,
    pub base_secs: BTreeMap<String, f64>,
    /// Relative slowdown per GB of accumulated ageing.
    pub ageing_rate_per_gb: f64,
    /// Requests the cloud serves without slowing down. Defaults to 8 for a
    /// multi-node deployment and 2 for all-in-one.
    pub service_slots: Option<u32>,
    pub contention: Contention,
    pub in_flight: InFlight,
    /// Time taken by a launch against a failed cloud.
    pub failed_attempt_secs: f64,
}

impl Default for ServiceParams {
    fn default() -> Self {
        ServiceParams {
            default_base_secs: 2.0,
            base_secs: [("boot server".to_string(), 10.0), ("create volume".to_string(), 5.0)]
                .into_iter()
                .collect(),
            ageing_rate_per_gb: 0.1,
            service_slots: None,
            contention: Contention::Linear,
            in_flight: InFlight::Running,
            failed_attempt_secs: 60.0,
        }
    }
}

impl ServiceParams {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        let bad = |m: String| Err(WorkloadError::InvalidService(m));
        let positive = std::iter::once(("default_base_secs", self.default_base_secs))
            .chain(self.base_secs.iter().map(|(k, &v)| (k.as_str(), v)))
            .chain(std::iter::once(("failed_attempt_secs", self.failed_attempt_secs)));
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be a positive number of seconds, got {v}"));
            }
        }
        if !(self.ageing_rate_per_gb.is_finite() && self.ageing_rate_per_gb >= 0.0) {
            return bad(format!("ageing_rate_per_gb must be non-negative, got {}", self.ageing_rate_per_gb));
        }
        if self.service_slots == Some(0) {
            return bad("service_slots must be at least 1".into());
        }
        Ok(())
    }

    pub fn base(&self, step: &str) -> f64 {
        self.base_secs.get(step).copied().unwrap_or(self.default_base_secs)
    }
}

/// Service parameters bound to a topology.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceModel {
    params: ServiceParams,
    slots: u32,
}

impl ServiceModel {
    pub fn new(params: &ServiceParams, topology: Topology) -> Result<Self, WorkloadError> {
        params.validate()?;
        let slots = params.service_slots.unwrap_or(match topology {
            Topology::MultiNode => 8,
            Topology::AllInOne => 2,
        });
        Ok(ServiceModel { params: params.clone(), slots })
    }

    pub fn params(&self) -> &ServiceParams {
        &self.params
    }

    pub fn slots(&self) -> u32 {
        self.slots
    }

    pub fn ageing_multiplier(&self, ageing_units: f64) -> f64 {
        1.0 + self.params.ageing_rate_per_gb * ageing_units
    }

    pub fn contention_multiplier(&self, in_flight: usize) -> f64 {
        match self.params.contention {
            Contention::Linear => (in_flight as f64 / f64::from(self.slots)).max(1.0),
            Contention::Off => 1.0,
        }
    }

    pub fn service_secs(&self, step: &str, ageing_units: f64, in_flight: usize) -> f64 {
        self.params.base(step)
            * self.ageing_multiplier(ageing_units)
            * self.contention_multiplier(in_flight.max(1))
    }

    /// Service time for one step, at least one millisecond.
    pub fn service_time(&self, step: &str, cloud: &CloudState, in_flight: usize) -> SimTime {
        let secs = self.service_secs(step, cloud.ageing_units(), in_flight);
        SimTime::from_secs_f64(secs).max(SimTime::from_millis(1))
    }

    pub fn failed_attempt(&self) -> SimTime {
        SimTime::from_secs_f64(self.params.failed_attempt_secs).max(SimTime::from_millis(1))
    }
}
