use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::{PhaseKind, RejuvenationPolicy};
use crate::cloud::{CloudSnapshot, EntityCounts, Topology};
use crate::stats::{IndicatorAnalysis, IndicatorSeries};

pub const WORKLOAD_DURATION: &str = "workload_duration_seconds";
pub const MEMORY_AVAILABLE: &str = "memory_available_gigabytes";
pub const SWAP_USED: &str = "swap_used_gigabytes";
pub const DISK_USED_SUFFIX: &str = "_disk_used_gigabytes";

pub fn disk_series_name(node: &str) -> String {
    format!("{node}{DISK_USED_SUFFIX}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseWindow {
    pub kind: PhaseKind,
    pub start_secs: f64,
    pub end_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorLogEntry {
    pub time_secs: f64,
    pub step: Arc<str>,
    pub error: Arc<str>,
    pub ageing: bool,
    /// Marked as an overload symptom; still listed.
    pub excluded_as_overload: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HourOutcome {
    pub hour: u32,
    pub successes: u32,
    pub non_ageing_failures: u32,
    pub ageing_failures: u32,
    /// Failures whose error is marked as overload.
    pub overload_failures: u32,
}

impl HourOutcome {
    pub fn failures(&self) -> u32 {
        self.non_ageing_failures + self.ageing_failures
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeTotals {
    pub workloads: u64,
    pub successes: u64,
    pub non_ageing_failures: u64,
    pub ageing_failures: u64,
    pub leftovers: EntityCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario_id: u32,
    pub name: String,
    pub topology: Topology,
    pub concurrency: u32,
    pub seed: u64,
    pub policy: RejuvenationPolicy,
    pub phases: Vec<PhaseWindow>,
    /// Start of the rejuvenation and of the post-rejuvenation phase, in
    /// seconds; empty when the run has no rejuvenation.
    pub phase_boundaries_secs: Vec<f64>,
    pub series: Vec<IndicatorSeries>,
    pub analyses: Vec<IndicatorAnalysis>,
    pub error_log: Vec<ErrorLogEntry>,
    pub hourly_outcomes: Vec<HourOutcome>,
    /// First time the cloud was seen in the failed state.
    pub failure_point_secs: Option<f64>,
    pub totals: OutcomeTotals,
    pub final_state: CloudSnapshot,
}

impl ScenarioReport {
    pub fn series(&self, name: &str) -> Option<&IndicatorSeries> {
        self.series.iter().find(|s| s.name() == name)
    }

    pub fn analysis(&self, name: &str) -> Option<&IndicatorAnalysis> {
        self.analyses.iter().find(|a| a.indicator == name)
    }

    pub fn phase(&self, kind: PhaseKind) -> Option<&PhaseWindow> {
        self.phases.iter().find(|p| p.kind == kind)
    }

    /// Occurrences per error name.
    pub fn error_counts(&self) -> BTreeMap<&str, u64> {
        let mut counts = BTreeMap::new();
        for e in &self.error_log {
            *counts.entry(&*e.error).or_default() += 1;
        }
        counts
    }

    pub fn hour(&self, hour: u32) -> Option<&HourOutcome> {
        self.hourly_outcomes.iter().find(|h| h.hour == hour)
    }
}
