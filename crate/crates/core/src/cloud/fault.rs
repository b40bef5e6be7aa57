use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::entity::EntityKind;
use super::CloudError;

pub const SERVER_ERROR_STATUS: &str = "ServerErrorStatus";
pub const VOLUME_ERROR_STATUS: &str = "VolumeErrorStatus";
pub const NODE_UNREACHABLE: &str = "NodeUnreachable";
pub const REBUILD_SERVER_ERROR: &str = "RebuildServerError";
pub const EXTERNAL_NETWORK_UNREACHABLE: &str = "ExternalNetworkUnreachable";
pub const INSUFFICIENT_DISK_SPACE: &str = "InsufficientDiskSpace";
pub const CLOUD_UNAVAILABLE: &str = "CloudUnavailable";

/// How an error affects the cloud when it strikes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "entity", rename_all = "snake_case")]
pub enum AgeingRule {
    NonAgeing,
    /// The entity being created is left behind in an error state.
    LeavesEntity(EntityKind),
    /// Ageing once the workload holds a live entity: the most recently created
    /// one is abandoned. Non-ageing before that.
    DependsOnProgress,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSpec {
    pub name: String,
    #[serde(flatten)]
    pub rule: AgeingRule,
    /// Errors that signal an overloaded cloud rather than ageing.
    #[serde(default)]
    pub overload_indicator: bool,
}

impl ErrorSpec {
    pub fn new(name: impl Into<String>, rule: AgeingRule) -> Self {
        ErrorSpec { name: name.into(), rule, overload_indicator: false }
    }

    pub fn overload(mut self) -> Self {
        self.overload_indicator = true;
        self
    }
}

pub fn default_catalog() -> Vec<ErrorSpec> {
    let mut catalog = vec![
        ErrorSpec::new(SERVER_ERROR_STATUS, AgeingRule::LeavesEntity(EntityKind::Server)),
        ErrorSpec::new(VOLUME_ERROR_STATUS, AgeingRule::LeavesEntity(EntityKind::Volume)),
        ErrorSpec::new(NODE_UNREACHABLE, AgeingRule::DependsOnProgress),
        ErrorSpec::new(REBUILD_SERVER_ERROR, AgeingRule::NonAgeing),
        ErrorSpec::new(EXTERNAL_NETWORK_UNREACHABLE, AgeingRule::NonAgeing),
        ErrorSpec::new(INSUFFICIENT_DISK_SPACE, AgeingRule::NonAgeing),
        ErrorSpec::new(CLOUD_UNAVAILABLE, AgeingRule::NonAgeing),
    ];
    for kind in [
        EntityKind::SecurityGroup,
        EntityKind::Router,
        EntityKind::Server,
        EntityKind::Volume,
    ] {
        let spec = ErrorSpec::new(kind.quota_error_name(), AgeingRule::NonAgeing);
        catalog.push(if kind == EntityKind::SecurityGroup { spec.overload() } else { spec });
    }
    catalog
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultProbability {
    pub step: String,
    pub error: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultConfig {
    #[serde(default = "default_catalog")]
    pub catalog: Vec<ErrorSpec>,
    #[serde(default)]
    pub probabilities: Vec<FaultProbability>,
}

impl Default for FaultConfig {
    fn default() -> Self {
        FaultConfig { catalog: default_catalog(), probabilities: Vec::new() }
    }
}

impl FaultConfig {
    pub fn with_probability(mut self, step: &str, error: &str, probability: f64) -> Self {
        self.probabilities.push(FaultProbability {
            step: step.to_string(),
            error: error.to_string(),
            probability,
        });
        self
    }

    pub fn error(&self, name: &str) -> Option<&ErrorSpec> {
        self.catalog.iter().find(|e| e.name == name)
    }
}

/// What the fault model needs to know about a workload step.
#[derive(Debug, Clone, Copy)]
pub struct StepSignature<'a> {
    pub name: &'a str,
    pub creates: Option<EntityKind>,
    pub deletes: Option<EntityKind>,
}

/// Per-step error sampler. One uniform draw per attempt of a step that has
/// any configured error; steps without entries consume no randomness.
#[derive(Debug, Clone)]
pub struct FaultModel {
    catalog: Vec<ErrorSpec>,
    table: BTreeMap<String, Vec<(usize, f64)>>,
    known_steps: BTreeSet<String>,
    rng: ChaCha8Rng,
    draws: u64,
}

impl FaultModel {
    pub fn new(
        config: &FaultConfig,
        steps: &[StepSignature<'_>],
        rng: ChaCha8Rng,
    ) -> Result<Self, CloudError> {
        let mut names = BTreeSet::new();
        for e in &config.catalog {
            if !names.insert(e.name.as_str()) {
                return Err(CloudError::Config(format!("duplicate error {:?} in catalog", e.name)));
            }
        }
        let known_steps: BTreeSet<String> = steps.iter().map(|s| s.name.to_string()).collect();
        let mut table: BTreeMap<String, Vec<(usize, f64)>> = BTreeMap::new();
        for p in &config.probabilities {
            if !(0.0..=1.0).contains(&p.probability) {
                return Err(CloudError::Config(format!(
                    "probability {} for {:?}/{:?} is outside [0, 1]",
                    p.probability, p.step, p.error
                )));
            }
            let step = steps
                .iter()
                .find(|s| s.name == p.step)
                .ok_or_else(|| CloudError::Config(format!("unknown step {:?}", p.step)))?;
            let idx = config
                .catalog
                .iter()
                .position(|e| e.name == p.error)
                .ok_or_else(|| CloudError::Config(format!("unknown error {:?}", p.error)))?;
            if let AgeingRule::LeavesEntity(kind) = config.catalog[idx].rule {
                if step.creates != Some(kind) && step.deletes != Some(kind) {
                    return Err(CloudError::Config(format!(
                        "error {:?} leaves a {kind} but step {:?} does not manage one",
                        p.error, p.step
                    )));
                }
            }
            table.entry(p.step.clone()).or_default().push((idx, p.probability));
        }
        for (step, entries) in &table {
            let total: f64 = entries.iter().map(|&(_, p)| p).sum();
            if total > 1.0 + 1e-12 {
                return Err(CloudError::Config(format!(
                    "error probabilities for step {step:?} sum to {total} > 1"
                )));
            }
        }
        Ok(FaultModel { catalog: config.catalog.clone(), table, known_steps, rng, draws: 0 })
    }

    pub fn sample_fault(&mut self, step: &str) -> Result<Option<&ErrorSpec>, CloudError> {
        let Some(entries) = self.table.get(step) else {
            if self.known_steps.contains(step) {
                return Ok(None);
            }
            return Err(CloudError::Config(format!("unknown step {step:?}")));
        };
        let u: f64 = self.rng.random();
        self.draws += 1;
        let mut acc = 0.0;
        for &(idx, p) in entries {
            acc += p;
            if u < acc {
                return Ok(Some(&self.catalog[idx]));
            }
        }
        Ok(None)
    }

    pub fn error(&self, name: &str) -> Option<&ErrorSpec> {
        self.catalog.iter().find(|e| e.name == name)
    }

    pub fn is_overload_indicator(&self, name: &str) -> bool {
        self.error(name).is_some_and(|e| e.overload_indicator)
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn has_faults(&self) -> bool {
        self.table.values().flatten().any(|&(_, p)| p > 0.0)
    }
}
