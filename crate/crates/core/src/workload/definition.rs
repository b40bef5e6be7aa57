use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::WorkloadError;
use crate::cloud::{EntityKind, StepSignature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Module {
    Keystone,
    Neutron,
    Glance,
    Cinder,
    Nova,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionType {
    Create,
    Operate,
    Delete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSpec {
    pub name: String,
    pub module: Module,
    pub action: ActionType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub creates_kind: Option<EntityKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deletes_kind: Option<EntityKind>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub depends_on: Vec<String>,
    /// Step that reverses this one during cleanup. Steps named here are
    /// cleanup-only; everything else runs in the forward pass.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub undo: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDefinition {
    steps: Vec<StepSpec>,
}

/// A validated workload: forward steps, each optionally paired with the
/// cleanup step that a LIFO stack replays in reverse.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawDefinition", into = "RawDefinition")]
pub struct WorkloadDefinition {
    steps: Vec<StepSpec>,
    names: Vec<Arc<str>>,
    forward: Vec<usize>,
    undo: Vec<Option<usize>>,
}

impl PartialEq for WorkloadDefinition {
    fn eq(&self, other: &Self) -> bool {
        self.steps == other.steps
    }
}

impl From<WorkloadDefinition> for RawDefinition {
    fn from(d: WorkloadDefinition) -> Self {
        RawDefinition { steps: d.steps }
    }
}

impl TryFrom<RawDefinition> for WorkloadDefinition {
    type Error = WorkloadError;
    fn try_from(raw: RawDefinition) -> Result<Self, Self::Error> {
        WorkloadDefinition::new(raw.steps)
    }
}

impl Default for WorkloadDefinition {
    fn default() -> Self {
        Self::paper_default()
    }
}

fn invalid(msg: impl Into<String>) -> WorkloadError {
    WorkloadError::InvalidDefinition(msg.into())
}

impl WorkloadDefinition {
    pub fn new(steps: Vec<StepSpec>) -> Result<Self, WorkloadError> {
        if steps.is_empty() {
            return Err(invalid("workload has no steps"));
        }
        let mut index = BTreeMap::new();
        for (i, s) in steps.iter().enumerate() {
            if s.name.trim().is_empty() {
                return Err(invalid(format!("step {i} has an empty name")));
            }
            if index.insert(s.name.as_str(), i).is_some() {
                return Err(invalid(format!("duplicate step {:?}", s.name)));
            }
        }

        let mut undo = vec![None; steps.len()];
        let mut targeted = vec![false; steps.len()];
        for (i, s) in steps.iter().enumerate() {
            if let Some(u) = &s.undo {
                let &j = index
                    .get(u.as_str())
                    .ok_or_else(|| invalid(format!("{:?} names unknown undo step {u:?}", s.name)))?;
                if j == i {
                    return Err(invalid(format!("{:?} cannot undo itself", s.name)));
                }
                if targeted[j] {
                    return Err(invalid(format!("{u:?} is the undo of more than one step")));
                }
                targeted[j] = true;
                undo[i] = Some(j);
            }
        }
        for (i, s) in steps.iter().enumerate() {
            if targeted[i] && s.undo.is_some() {
                return Err(invalid(format!("cleanup step {:?} cannot have its own undo", s.name)));
            }
        }

        for (i, s) in steps.iter().enumerate() {
            match s.action {
                ActionType::Create => {
                    if s.deletes_kind.is_some() {
                        return Err(invalid(format!("create step {:?} has deletes_kind", s.name)));
                    }
                    if let Some(kind) = s.creates_kind {
                        let pair = undo[i].map(|j| &steps[j]);
                        let ok = pair.is_some_and(|p| {
                            p.action == ActionType::Delete && p.deletes_kind == Some(kind)
                        });
                        if !ok {
                            return Err(invalid(format!(
                                "{:?} creates a {kind} but its undo is not a delete of that kind",
                                s.name
                            )));
                        }
                    }
                }
                ActionType::Delete => {
                    if !targeted[i] {
                        return Err(invalid(format!("delete step {:?} is not the undo of any step", s.name)));
                    }
                    if s.creates_kind.is_some() {
                        return Err(invalid(format!("delete step {:?} has creates_kind", s.name)));
                    }
                }
                ActionType::Operate => {
                    if s.creates_kind.is_some() || s.deletes_kind.is_some() {
                        return Err(invalid(format!("operate step {:?} names an entity kind", s.name)));
                    }
                }
            }
        }
        for (i, s) in steps.iter().enumerate() {
            if let (ActionType::Delete, Some(kind)) = (s.action, s.deletes_kind) {
                let owner = undo.iter().position(|&u| u == Some(i)).expect("delete is targeted");
                if steps[owner].creates_kind != Some(kind) {
                    return Err(invalid(format!(
                        "{:?} deletes a {kind} that {:?} does not create",
                        s.name, steps[owner].name
                    )));
                }
            }
        }

        let forward: Vec<usize> = (0..steps.len()).filter(|&i| !targeted[i]).collect();
        let expected: Vec<usize> = forward
            .iter()
            .copied()
            .chain(forward.iter().rev().filter_map(|&i| undo[i]))
            .collect();
        if expected != (0..steps.len()).collect::<Vec<_>>() {
            let order: Vec<&str> = expected.iter().map(|&i| steps[i].name.as_str()).collect();
            return Err(invalid(format!(
                "steps must list forward steps followed by their cleanup in reverse order: {order:?}"
            )));
        }

        // From here on a step's index is also its execution position.
        for (i, s) in steps.iter().enumerate() {
            for d in &s.depends_on {
                let &j = index
                    .get(d.as_str())
                    .ok_or_else(|| invalid(format!("{:?} depends on unknown step {d:?}", s.name)))?;
                if targeted[j] {
                    return Err(invalid(format!("{:?} depends on cleanup step {d:?}", s.name)));
                }
                if !targeted[i] && j >= i {
                    return Err(invalid(format!("{:?} runs before its dependency {d:?}", s.name)));
                }
                if targeted[i] {
                    if let Some(k) = undo[j] {
                        if k < i {
                            return Err(invalid(format!(
                                "{:?} needs {d:?}, which is already cleaned up",
                                s.name
                            )));
                        }
                    }
                }
            }
        }

        let names = steps.iter().map(|s| Arc::from(s.name.as_str())).collect();
        Ok(WorkloadDefinition { steps, names, forward, undo })
    }

    /// The 29-step create/operate/delete sequence over keystone, neutron,
    /// glance, cinder and nova.
    pub fn paper_default() -> Self {
        use ActionType::*;
        use EntityKind as K;
        use Module::*;
        let step = |name: &str, module, action, kind: Option<EntityKind>, deps: &[&str], undo: Option<&str>| StepSpec {
            name: name.to_string(),
            module,
            action,
            creates_kind: if action == Create { kind } else { None },
            deletes_kind: if action == Delete { kind } else { None },
            depends_on: deps.iter().map(|d| d.to_string()).collect(),
            undo: undo.map(str::to_string),
        };
        let steps = vec![
            step("create user", Keystone, Create, Some(K::User), &[], Some("delete user")),
            step("create role", Keystone, Create, Some(K::Role), &[], Some("delete role")),
            step("add role", Keystone, Operate, None, &["create role", "create user"], Some("revoke role")),
            step("create security group", Neutron, Create, Some(K::SecurityGroup), &[], Some("delete security group")),
            step("create flavor", Nova, Create, Some(K::Flavor), &[], Some("delete flavor")),
            step("create image", Glance, Create, Some(K::Image), &[], Some("delete image")),
            step("create network", Neutron, Create, Some(K::Network), &[], Some("delete network")),
            step("create subnet", Neutron, Create, Some(K::Subnet), &["create network"], Some("delete subnet")),
            step("create port", Neutron, Create, Some(K::Port), &["create network"], Some("delete port")),
            step("create router", Neutron, Create, Some(K::Router), &[], Some("delete router")),
            step(
                "boot server",
                Nova,
                Create,
                Some(K::Server),
                &["create flavor", "create image", "create network"],
                Some("delete server"),
            ),
            step("create volume", Cinder, Create, Some(K::Volume), &[], Some("delete volume")),
            step("attach volume", Nova, Operate, None, &["boot server", "create volume"], Some("detach volume")),
            step("rebuild server", Nova, Operate, None, &["boot server", "create image"], None),
            step("pause server", Nova, Operate, None, &["boot server"], Some("unpause server")),
            step("unpause server", Nova, Operate, None, &["boot server"], None),
            step("detach volume", Nova, Operate, None, &["boot server", "create volume"], None),
            step("delete volume", Cinder, Delete, Some(K::Volume), &[], None),
            step("delete server", Nova, Delete, Some(K::Server), &["create network"], None),
            step("delete router", Neutron, Delete, Some(K::Router), &[], None),
            step("delete port", Neutron, Delete, Some(K::Port), &["create network"], None),
            step("delete subnet", Neutron, Delete, Some(K::Subnet), &["create network"], None),
            step("delete network", Neutron, Delete, Some(K::Network), &[], None),
            step("delete image", Glance, Delete, Some(K::Image), &[], None),
            step("delete flavor", Nova, Delete, Some(K::Flavor), &[], None),
            step("delete security group", Neutron, Delete, Some(K::SecurityGroup), &[], None),
            step("revoke role", Keystone, Operate, None, &["create role", "create user"], None),
            step("delete role", Keystone, Delete, Some(K::Role), &[], None),
            step("delete user", Keystone, Delete, Some(K::User), &[], None),
        ];
        Self::new(steps).expect("built-in workload is valid")
    }

    pub fn from_toml_str(s: &str) -> Result<Self, WorkloadError> {
        toml::from_str(s).map_err(|e| invalid(e.to_string()))
    }

    pub fn from_json_str(s: &str) -> Result<Self, WorkloadError> {
        serde_json::from_str(s).map_err(|e| invalid(e.to_string()))
    }

    pub fn steps(&self) -> &[StepSpec] {
        &self.steps
    }

    pub fn step(&self, idx: usize) -> &StepSpec {
        &self.steps[idx]
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn name(&self, idx: usize) -> &Arc<str> {
        &self.names[idx]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.steps.iter().position(|s| s.name == name)
    }

    /// Indices of the steps run in the forward pass, in order.
    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn undo_of(&self, idx: usize) -> Option<usize> {
        self.undo[idx]
    }

    /// Steps that run only while cleaning up.
    pub fn is_cleanup(&self, idx: usize) -> bool {
        self.undo.contains(&Some(idx))
    }

    pub fn signatures(&self) -> Vec<StepSignature<'_>> {
        self.steps
            .iter()
            .map(|s| StepSignature { name: &s.name, creates: s.creates_kind, deletes: s.deletes_kind })
            .collect()
    }

    /// Entity kinds the workload creates.
    pub fn kinds(&self) -> BTreeSet<EntityKind> {
        self.steps.iter().filter_map(|s| s.creates_kind).collect()
    }
}
