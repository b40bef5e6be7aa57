use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::cloud::{FaultConfig, ResourceParams, Topology};
use crate::workload::{ServiceParams, WorkloadDefinition};

pub const PAPER_CONCURRENCY: [u32; 6] = [1, 2, 4, 8, 16, 64];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseKind {
    Stress,
    /// Idle time: no workloads and no sampling.
    Wait,
    Rejuvenation,
    PostRejuvenation,
}

impl PhaseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseKind::Stress => "stress",
            PhaseKind::Wait => "wait",
            PhaseKind::Rejuvenation => "rejuvenation",
            PhaseKind::PostRejuvenation => "post_rejuvenation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    pub kind: PhaseKind,
    pub hours: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejuvenationPolicy {
    /// Rejuvenate only when the stress phase is over.
    #[default]
    WaitForSchedule,
    /// Cut the stress phase short at the first hour boundary that finds the
    /// cloud failed.
    RejuvenateOnFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyDecision {
    Continue,
    TriggerRejuvenationNow,
}

/// Called at every completed stress hour.
pub fn early_failure_policy(policy: RejuvenationPolicy, cloud_failed: bool) -> PolicyDecision {
    match policy {
        RejuvenationPolicy::RejuvenateOnFailure if cloud_failed => PolicyDecision::TriggerRejuvenationNow,
        _ => PolicyDecision::Continue,
    }
}

fn default_stress_hours() -> f64 {
    24.0
}

fn default_post_hours() -> f64 {
    1.0
}

fn default_sample_interval() -> f64 {
    30.0
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigFormat {
    Toml,
    Json,
}

impl ConfigFormat {
    /// Picks the format from a file extension; anything but `.json` is TOML.
    pub fn from_extension(ext: Option<&str>) -> Self {
        match ext {
            Some(e) if e.eq_ignore_ascii_case("json") => ConfigFormat::Json,
            _ => ConfigFormat::Toml,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario_id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub topology: Topology,
    pub concurrency: u32,
    #[serde(default = "default_stress_hours")]
    pub stress_hours: f64,
    #[serde(default = "default_post_hours")]
    pub post_rejuvenation_hours: f64,
    /// Replaces the stress / rejuvenation / post-rejuvenation sequence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases: Option<Vec<PhaseSpec>>,
    #[serde(default)]
    pub policy: RejuvenationPolicy,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_sample_interval")]
    pub sample_interval_secs: f64,
    /// Mark SecurityGroup quota errors as overload rather than ageing.
    #[serde(default = "default_true")]
    pub exclude_overload_errors: bool,
    #[serde(default)]
    pub faults: FaultConfig,
    /// Fault table used after rejuvenation; defaults to `faults`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_rejuvenation_faults: Option<FaultConfig>,
    #[serde(default)]
    pub resources: ResourceParams,
    #[serde(default)]
    pub service: ServiceParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workload: Option<WorkloadDefinition>,
}

impl ScenarioConfig {
    pub fn new(scenario_id: u32, topology: Topology, concurrency: u32) -> Self {
        ScenarioConfig {
            scenario_id,
            name: None,
            topology,
            concurrency,
            stress_hours: default_stress_hours(),
            post_rejuvenation_hours: default_post_hours(),
            phases: None,
            policy: RejuvenationPolicy::default(),
            seed: u64::from(scenario_id),
            sample_interval_secs: default_sample_interval(),
            exclude_overload_errors: true,
            faults: FaultConfig::default(),
            post_rejuvenation_faults: None,
            resources: ResourceParams::default(),
            service: ServiceParams::default(),
            workload: None,
        }
    }

    /// Scenario `id` of the 12-scenario matrix: 1-6 multi-node, 7-12
    /// all-in-one, each over concurrency 1, 2, 4, 8, 16, 64.
    pub fn paper(id: u32) -> Result<Self, ScenarioError> {
        if !(1..=12).contains(&id) {
            return Err(ScenarioError::Config(format!("scenario {id} is not in the 1-12 matrix")));
        }
        let topology = if id <= 6 { Topology::MultiNode } else { Topology::AllInOne };
        let concurrency = PAPER_CONCURRENCY[((id - 1) % 6) as usize];
        Ok(ScenarioConfig::new(id, topology, concurrency))
    }

    pub fn parse(text: &str, format: ConfigFormat) -> Result<Self, ScenarioError> {
        let cfg: ScenarioConfig = match format {
            ConfigFormat::Toml => toml::from_str(text).map_err(|e| ScenarioError::Config(e.to_string()))?,
            ConfigFormat::Json => serde_json::from_str(text).map_err(|e| ScenarioError::Config(e.to_string()))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| format!("scenario-{}", self.scenario_id))
    }

    pub fn phase_list(&self) -> Vec<PhaseSpec> {
        self.phases.clone().unwrap_or_else(|| {
            vec![
                PhaseSpec { kind: PhaseKind::Stress, hours: self.stress_hours },
                PhaseSpec { kind: PhaseKind::Rejuvenation, hours: self.resources.rejuvenation_hours },
                PhaseSpec { kind: PhaseKind::PostRejuvenation, hours: self.post_rejuvenation_hours },
            ]
        })
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Config(m));
        if self.concurrency == 0 {
            return bad("concurrency must be at least 1".into());
        }
        for (name, h) in [("stress_hours", self.stress_hours), ("post_rejuvenation_hours", self.post_rejuvenation_hours)] {
            if !(h.is_finite() && h >= 0.0) {
                return bad(format!("{name} must be a non-negative number, got {h}"));
            }
        }
        let interval_ms = self.sample_interval_secs * 1000.0;
        if !(interval_ms.is_finite() && interval_ms >= 1.0 && interval_ms.fract() == 0.0)
            || 3_600_000 % (interval_ms as u64) != 0
        {
            return bad(format!(
                "sample_interval_secs must divide an hour into whole milliseconds, got {}",
                self.sample_interval_secs
            ));
        }
        let phases = self.phase_list();
        let mut seen_rejuvenation = false;
        let mut seen_stress = false;
        for p in &phases {
            if !(p.hours.is_finite() && p.hours >= 0.0) {
                return bad(format!("{} phase has invalid length {}", p.kind.as_str(), p.hours));
            }
            match p.kind {
                PhaseKind::Stress if seen_rejuvenation => {
                    return bad("stress phases must come before rejuvenation".into());
                }
                PhaseKind::Stress => seen_stress = true,
                PhaseKind::Rejuvenation if seen_rejuvenation => {
                    return bad("only one rejuvenation phase is supported".into());
                }
                PhaseKind::Rejuvenation => seen_rejuvenation = true,
                PhaseKind::PostRejuvenation if !seen_rejuvenation => {
                    return bad("post-rejuvenation phase needs a rejuvenation before it".into());
                }
                _ => {}
            }
        }
        if !seen_stress {
            return bad("the phase list needs a stress phase".into());
        }
        self.resources.validate(self.topology)?;
        self.service.validate()?;
        Ok(())
    }
}

pub fn paper_matrix() -> Vec<ScenarioConfig> {
    (1..=12).map(|id| ScenarioConfig::paper(id).expect("id in range")).collect()
}
