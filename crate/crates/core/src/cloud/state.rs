use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::entity::{EntityCounts, EntityKind};
use super::params::{NodeRole, NodeSpec, ResourceParams, Topology};
use super::rng::{stream_rng, RngStream};
use super::CloudError;
use crate::time::SimTime;

const KB_PER_GB: f64 = 1_000_000.0;
const WARMUP_WINDOW: SimTime = SimTime::from_secs(3600);

fn gb_to_kb(gb: f64) -> u64 {
    (gb * KB_PER_GB).round().max(0.0) as u64
}

fn kb_to_gb(kb: u64) -> f64 {
    kb as f64 / KB_PER_GB
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CreateOutcome {
    Created,
    QuotaExceeded(EntityKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResourceEvent {
    /// A step finished; a completed server boot leaves an image in the cache.
    StepCompleted { created: Option<EntityKind> },
    WorkloadFinished,
    HourElapsed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeGauges {
    pub node: String,
    pub memory_available_gb: f64,
    pub swap_used_gb: f64,
    pub disk_used_gb: f64,
    pub disk_capacity_gb: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheImage {
    pub node: usize,
    pub size_kb: u64,
    pub created_at: SimTime,
}

#[derive(Debug, Clone)]
struct NodeState {
    spec: NodeSpec,
    ages: bool,
    disk_capacity_kb: u64,
    disk_baseline_kb: u64,
    cache_kb: u64,
    memory_available_gb: f64,
    swap_used_gb: f64,
}

impl NodeState {
    fn disk_used_kb(&self) -> u64 {
        self.disk_baseline_kb + self.cache_kb
    }

    fn disk_free_kb(&self) -> u64 {
        self.disk_capacity_kb.saturating_sub(self.disk_used_kb())
    }

    fn gauges(&self) -> NodeGauges {
        NodeGauges {
            node: self.spec.name.clone(),
            memory_available_gb: self.memory_available_gb,
            swap_used_gb: self.swap_used_gb,
            disk_used_gb: kb_to_gb(self.disk_used_kb()),
            disk_capacity_gb: kb_to_gb(self.disk_capacity_kb),
        }
    }
}

/// Everything needed to compare two trajectories for equality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudSnapshot {
    pub clock: SimTime,
    pub live: EntityCounts,
    pub leftover: EntityCounts,
    pub nodes: Vec<NodeGauges>,
    pub cache_images: usize,
    pub cloud_ageing_gb: f64,
    pub host_residual_gb: f64,
    pub failed: bool,
}

/// The simulated cloud: entity ledger, node gauges and image cache.
#[derive(Debug, Clone)]
pub struct CloudState {
    params: ResourceParams,
    quotas: [Option<u32>; EntityKind::COUNT],
    live: EntityCounts,
    leftover: EntityCounts,
    nodes: Vec<NodeState>,
    cache: VecDeque<CacheImage>,
    clock: SimTime,
    finished_workloads: u64,
    leftovers_recorded: u64,
    host_residual_gb: f64,
    deployments: u32,
    deployed_at: SimTime,
    deploy_failed: bool,
    failed: bool,
    noise_rng: ChaCha8Rng,
    deploy_rng: ChaCha8Rng,
}

impl CloudState {
    pub fn new(topology: Topology, params: &ResourceParams, seed: u64) -> Result<Self, CloudError> {
        params.validate(topology)?;
        let mut quotas = [None; EntityKind::COUNT];
        for (&kind, &q) in &params.quotas {
            quotas[kind.index()] = Some(q);
        }
        let nodes = params
            .resolved_nodes(topology)
            .into_iter()
            .map(|spec| NodeState {
                ages: spec.has_role(NodeRole::Control),
                disk_capacity_kb: gb_to_kb(spec.disk_capacity_gb),
                disk_baseline_kb: gb_to_kb(spec.disk_baseline_gb),
                cache_kb: 0,
                memory_available_gb: 0.0,
                swap_used_gb: 0.0,
                spec,
            })
            .collect();
        let mut state = CloudState {
            params: params.clone(),
            quotas,
            live: EntityCounts::default(),
            leftover: EntityCounts::default(),
            nodes,
            cache: VecDeque::new(),
            clock: SimTime::ZERO,
            finished_workloads: 0,
            leftovers_recorded: 0,
            host_residual_gb: 0.0,
            deployments: 0,
            deployed_at: SimTime::ZERO,
            deploy_failed: false,
            failed: false,
            noise_rng: stream_rng(seed, RngStream::GaugeNoise),
            deploy_rng: stream_rng(seed, RngStream::Deploy),
        };
        state.deploy(SimTime::ZERO);
        Ok(state)
    }

    pub fn params(&self) -> &ResourceParams {
        &self.params
    }

    pub fn clock(&self) -> SimTime {
        self.clock
    }

    /// Moves the clock forward; earlier times are ignored.
    pub fn advance_to(&mut self, t: SimTime) {
        self.clock = self.clock.max(t);
    }

    pub fn quota(&self, kind: EntityKind) -> Option<u32> {
        self.quotas[kind.index()]
    }

    pub fn is_quota_limited(&self, kind: EntityKind) -> bool {
        self.quota(kind).is_some()
    }

    pub fn live(&self) -> &EntityCounts {
        &self.live
    }

    pub fn leftover(&self) -> &EntityCounts {
        &self.leftover
    }

    /// Number of workloads that can hold their entities at the same time:
    /// the tightest quota after subtracting leftovers.
    pub fn capacity(&self) -> u32 {
        EntityKind::ALL
            .into_iter()
            .filter_map(|k| self.quota(k).map(|q| q.saturating_sub(self.leftover.get(k))))
            .min()
            .unwrap_or(u32::MAX)
    }

    pub fn fresh_capacity(&self) -> u32 {
        self.quotas.iter().flatten().copied().min().unwrap_or(u32::MAX)
    }

    pub fn can_create(&self, kind: EntityKind) -> bool {
        match self.quota(kind) {
            Some(q) => self.live.get(kind) + self.leftover.get(kind) < q,
            None => true,
        }
    }

    pub fn try_create(&mut self, kind: EntityKind) -> CreateOutcome {
        if !self.can_create(kind) {
            return CreateOutcome::QuotaExceeded(kind);
        }
        self.live.increment(kind);
        CreateOutcome::Created
    }

    pub fn try_delete(&mut self, kind: EntityKind) -> Result<(), CloudError> {
        if self.live.decrement(kind) {
            Ok(())
        } else {
            Err(CloudError::LedgerUnderflow(kind))
        }
    }

    /// Turns one live entity into a leftover that no workload will delete.
    pub fn record_leftover(&mut self, kind: EntityKind) -> Result<(), CloudError> {
        if !self.live.decrement(kind) {
            return Err(CloudError::LedgerUnderflow(kind));
        }
        self.leftover.increment(kind);
        self.leftovers_recorded += 1;
        self.update_memory();
        Ok(())
    }

    pub fn apply_resource_effects(&mut self, event: ResourceEvent) {
        match event {
            ResourceEvent::StepCompleted { created: Some(EntityKind::Server) } => {
                self.deposit_cache_image();
            }
            ResourceEvent::StepCompleted { .. } => {}
            ResourceEvent::WorkloadFinished => {
                self.finished_workloads += 1;
                self.update_memory();
            }
            ResourceEvent::HourElapsed => {
                self.cache_cleanup();
            }
        }
    }

    fn cache_target(&self) -> Option<usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.spec.has_role(NodeRole::Compute))
            .max_by(|(ia, a), (ib, b)| a.disk_free_kb().cmp(&b.disk_free_kb()).then(ib.cmp(ia)))
            .map(|(i, _)| i)
    }

    /// Whether the compute node with the most free disk can take another image.
    pub fn cache_has_room(&self) -> bool {
        let need = gb_to_kb(self.params.cache_image_gb);
        self.cache_target().is_some_and(|i| self.nodes[i].disk_free_kb() >= need)
    }

    /// Stores one image on the compute node with the most free disk. When it
    /// does not fit, the partial download fills the node and false is returned.
    pub fn deposit_cache_image(&mut self) -> bool {
        let Some(i) = self.cache_target() else { return false };
        let need = gb_to_kb(self.params.cache_image_gb);
        let free = self.nodes[i].disk_free_kb();
        let size_kb = need.min(free);
        if size_kb > 0 {
            self.nodes[i].cache_kb += size_kb;
            self.cache.push_back(CacheImage { node: i, size_kb, created_at: self.clock });
        }
        size_kb == need
    }

    /// Removes images older than the configured age and returns the GB freed.
    pub fn cache_cleanup(&mut self) -> f64 {
        let max_age = SimTime::from_hours_f64(self.params.cache_max_age_hours);
        let mut freed = 0u64;
        while let Some(img) = self.cache.front() {
            if self.clock.saturating_sub(img.created_at) <= max_age {
                break;
            }
            let img = self.cache.pop_front().expect("front exists");
            self.nodes[img.node].cache_kb -= img.size_kb;
            freed += img.size_kb;
        }
        kb_to_gb(freed)
    }

    pub fn cache_images(&self) -> impl Iterator<Item = &CacheImage> {
        self.cache.iter()
    }

    pub fn cache_used_gb(&self) -> f64 {
        kb_to_gb(self.nodes.iter().map(|n| n.cache_kb).sum())
    }

    /// Cloud-level memory lost since the last deployment.
    pub fn cloud_ageing_gb(&self) -> f64 {
        self.finished_workloads as f64 * self.params.memory_leak_per_workload_gb
            + self.leftovers_recorded as f64 * self.params.memory_per_leftover_gb
    }

    pub fn host_residual_gb(&self) -> f64 {
        self.host_residual_gb
    }

    /// Accumulated ageing that slows request handling.
    pub fn ageing_units(&self) -> f64 {
        self.cloud_ageing_gb() + self.host_residual_gb
    }

    fn update_memory(&mut self) {
        let ageing = self.cloud_ageing_gb();
        let threshold = self.params.swap_threshold_gb;
        let allocation = self.params.warmup_allocation_gb;
        let residual = self.host_residual_gb;
        for n in self.nodes.iter_mut() {
            let base = n.spec.memory_available_gb - allocation;
            if !n.ages {
                n.memory_available_gb = base.max(0.0);
                n.swap_used_gb = 0.0;
                continue;
            }
            let raw = base - residual - ageing;
            // Only pressure from the current deployment spills into swap.
            let overflow = (threshold - raw).clamp(0.0, ageing);
            let swap = overflow.min(n.spec.swap_capacity_gb);
            n.swap_used_gb = swap;
            n.memory_available_gb = (raw + swap).max(0.0);
        }
    }

    pub fn gauges(&self) -> Vec<NodeGauges> {
        self.nodes.iter().map(NodeState::gauges).collect()
    }

    pub fn in_warmup(&self) -> bool {
        (self.deployments == 1 || self.params.warmup_after_rejuvenation)
            && self.clock.saturating_sub(self.deployed_at) < WARMUP_WINDOW
            && self.clock >= self.deployed_at
    }

    /// Gauge readings at the current clock. Memory on ageing nodes carries
    /// uniform noise during the first hour after a deployment.
    pub fn sample_gauges(&mut self) -> Vec<NodeGauges> {
        let mut out = self.gauges();
        let amp = self.params.warmup_noise_gb;
        if amp > 0.0 && self.in_warmup() {
            for (g, n) in out.iter_mut().zip(&self.nodes) {
                if n.ages {
                    let noise: f64 = self.noise_rng.random_range(-amp..=amp);
                    g.memory_available_gb = (g.memory_available_gb + noise).max(0.0);
                }
            }
        }
        out
    }

    pub fn node_names(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|n| n.spec.name.as_str())
    }

    pub fn node_roles(&self, idx: usize) -> &[NodeRole] {
        &self.nodes[idx].spec.roles
    }

    /// Index of the first node carrying the control role.
    pub fn control_node(&self) -> Option<usize> {
        self.nodes.iter().position(|n| n.spec.has_role(NodeRole::Control))
    }

    pub fn is_failed(&self) -> bool {
        self.failed
    }

    pub fn check_failed(&mut self) -> bool {
        let disk_full = self.nodes.iter().any(|n| n.disk_used_kb() >= n.disk_capacity_kb);
        let memory_exhausted = self.nodes.iter().any(|n| {
            n.memory_available_gb + (n.spec.swap_capacity_gb - n.swap_used_gb) <= 0.0
        });
        self.failed = self.deploy_failed || self.capacity() == 0 || disk_full || memory_exhausted;
        self.failed
    }

    fn deploy(&mut self, at: SimTime) {
        self.clock = at;
        self.deployments += 1;
        self.deployed_at = at;
        self.live = EntityCounts::default();
        self.leftover = EntityCounts::default();
        self.cache.clear();
        for n in self.nodes.iter_mut() {
            n.cache_kb = 0;
        }
        self.finished_workloads = 0;
        self.leftovers_recorded = 0;
        let p = self.params.deploy_failure_probability;
        self.deploy_failed = p > 0.0 && self.deploy_rng.random::<f64>() < p;
        self.update_memory();
        self.check_failed();
    }

    /// Redeploys the cloud, finishing at `end`.
    pub fn rejuvenate_until(&mut self, end: SimTime) {
        self.host_residual_gb += self.params.host_retention_fraction * self.cloud_ageing_gb();
        let end = end.max(self.clock);
        self.deploy(end);
    }

    /// Redeploys the cloud; the clock advances by the configured duration.
    pub fn rejuvenate(&mut self) {
        let end = self.clock + SimTime::from_hours_f64(self.params.rejuvenation_hours);
        self.rejuvenate_until(end);
    }

    pub fn deployments(&self) -> u32 {
        self.deployments
    }

    pub fn snapshot(&self) -> CloudSnapshot {
        CloudSnapshot {
            clock: self.clock,
            live: self.live,
            leftover: self.leftover,
            nodes: self.gauges(),
            cache_images: self.cache.len(),
            cloud_ageing_gb: self.cloud_ageing_gb(),
            host_residual_gb: self.host_residual_gb,
            failed: self.failed,
        }
    }
}
