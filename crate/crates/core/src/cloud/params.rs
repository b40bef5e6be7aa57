use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::entity::{default_quotas, EntityKind};
use super::CloudError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Control, monitoring and two compute nodes.
    MultiNode,
    /// Every role on one host.
    AllInOne,
}

impl Topology {
    pub fn as_str(self) -> &'static str {
        match self {
            Topology::MultiNode => "multi_node",
            Topology::AllInOne => "all_in_one",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Control,
    Monitoring,
    Compute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    pub roles: Vec<NodeRole>,
    /// Available memory right after deployment, before the warm-up allocation.
    pub memory_available_gb: f64,
    pub swap_capacity_gb: f64,
    pub disk_capacity_gb: f64,
    /// Disk in use that is not image cache.
    #[serde(default)]
    pub disk_baseline_gb: f64,
}

impl NodeSpec {
    pub fn has_role(&self, role: NodeRole) -> bool {
        self.roles.contains(&role)
    }
}

pub fn default_nodes(topology: Topology) -> Vec<NodeSpec> {
    let node = |name: &str, roles: Vec<NodeRole>, mem: f64, disk: f64| NodeSpec {
        name: name.to_string(),
        roles,
        memory_available_gb: mem,
        swap_capacity_gb: 8.0,
        disk_capacity_gb: disk,
        disk_baseline_gb: 0.0,
    };
    match topology {
        Topology::MultiNode => vec![
            node("control", vec![NodeRole::Control], 1.5, 100.0),
            node("monitoring", vec![NodeRole::Monitoring], 4.0, 100.0),
            node("compute1", vec![NodeRole::Compute], 4.0, 146.0),
            node("compute2", vec![NodeRole::Compute], 4.0, 146.0),
        ],
        Topology::AllInOne => vec![node(
            "aio",
            vec![NodeRole::Control, NodeRole::Monitoring, NodeRole::Compute],
            1.5,
            150.0,
        )],
    }
}

/// Resource and ageing parameters of the simulated cloud.
///
/// Only the quota values and the 40 MB image size are grounded in
/// measurements; the memory figures are illustrative defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourceParams {
    pub quotas: BTreeMap<EntityKind, u32>,
    /// Empty means the topology's default node layout.
    pub nodes: Vec<NodeSpec>,
    /// Overrides the disk capacity of every compute node.
    pub compute_disk_capacity_gb: Option<f64>,
    pub cache_image_gb: f64,
    pub cache_max_age_hours: f64,
    pub memory_leak_per_workload_gb: f64,
    pub memory_per_leftover_gb: f64,
    pub swap_threshold_gb: f64,
    pub warmup_allocation_gb: f64,
    pub warmup_noise_gb: f64,
    pub warmup_after_rejuvenation: bool,
    /// Share of cloud-level memory ageing that survives a redeployment.
    pub host_retention_fraction: f64,
    pub rejuvenation_hours: f64,
    pub deploy_failure_probability: f64,
}

impl Default for ResourceParams {
    fn default() -> Self {
        ResourceParams {
            quotas: default_quotas(),
            nodes: Vec::new(),
            compute_disk_capacity_gb: None,
            cache_image_gb: 0.040,
            cache_max_age_hours: 24.0,
            memory_leak_per_workload_gb: 0.0005,
            memory_per_leftover_gb: 0.01,
            swap_threshold_gb: 1.0,
            warmup_allocation_gb: 0.2,
            warmup_noise_gb: 0.3,
            warmup_after_rejuvenation: true,
            host_retention_fraction: 0.1,
            rejuvenation_hours: 1.0,
            deploy_failure_probability: 0.0,
        }
    }
}

impl ResourceParams {
    pub fn resolved_nodes(&self, topology: Topology) -> Vec<NodeSpec> {
        let mut nodes = if self.nodes.is_empty() { default_nodes(topology) } else { self.nodes.clone() };
        if let Some(cap) = self.compute_disk_capacity_gb {
            for n in nodes.iter_mut().filter(|n| n.has_role(NodeRole::Compute)) {
                n.disk_capacity_gb = cap;
            }
        }
        nodes
    }

    pub fn validate(&self, topology: Topology) -> Result<(), CloudError> {
        let bad = |msg: String| Err(CloudError::Config(msg));
        for (kind, &q) in &self.quotas {
            if q < 1 {
                return bad(format!("quota for {kind} must be at least 1"));
            }
        }
        let non_negative = [
            ("cache_image_gb", self.cache_image_gb),
            ("cache_max_age_hours", self.cache_max_age_hours),
            ("memory_leak_per_workload_gb", self.memory_leak_per_workload_gb),
            ("memory_per_leftover_gb", self.memory_per_leftover_gb),
            ("swap_threshold_gb", self.swap_threshold_gb),
            ("warmup_allocation_gb", self.warmup_allocation_gb),
            ("warmup_noise_gb", self.warmup_noise_gb),
            ("rejuvenation_hours", self.rejuvenation_hours),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be a non-negative number, got {v}"));
            }
        }
        for (name, v) in [
            ("host_retention_fraction", self.host_retention_fraction),
            ("deploy_failure_probability", self.deploy_failure_probability),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        let nodes = self.resolved_nodes(topology);
        if !nodes.iter().any(|n| n.has_role(NodeRole::Compute)) {
            return bad("at least one node needs the compute role".into());
        }
        for n in &nodes {
            let values = [n.memory_available_gb, n.swap_capacity_gb, n.disk_capacity_gb, n.disk_baseline_gb];
            if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return bad(format!("node {:?} has a negative or non-finite size", n.name));
            }
            if n.disk_baseline_gb > n.disk_capacity_gb {
                return bad(format!("node {:?} baseline disk exceeds its capacity", n.name));
            }
        }
        Ok(())
    }
}
