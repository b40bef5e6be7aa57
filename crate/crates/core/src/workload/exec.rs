use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::definition::{ActionType, WorkloadDefinition};
use super::service::ServiceModel;
use super::WorkloadError;
use crate::cloud::{
    AgeingRule, CloudState, CreateOutcome, EntityCounts, EntityKind, FaultModel, ResourceEvent,
    CLOUD_UNAVAILABLE, INSUFFICIENT_DISK_SPACE,
};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Success,
    NonAgeingFailure,
    AgeingFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepOutcome {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: Arc<str>,
    pub outcome: StepOutcome,
    pub started_at: SimTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadFailure {
    pub step: Arc<str>,
    pub error: Arc<str>,
    pub at: SimTime,
    /// The failure left an entity behind.
    pub ageing: bool,
    pub overload_indicator: bool,
    pub leftover: Option<EntityKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadResult {
    pub stream: usize,
    pub start: SimTime,
    pub end: SimTime,
    pub duration_secs: f64,
    pub steps_executed: Vec<StepRecord>,
    pub error: Option<WorkloadFailure>,
    pub classification: Classification,
    pub leftovers_created: EntityCounts,
}

impl WorkloadResult {
    pub fn is_success(&self) -> bool {
        self.classification == Classification::Success
    }
}

/// Everything a step needs to run.
pub struct Engine<'a> {
    pub definition: &'a WorkloadDefinition,
    pub service: &'a ServiceModel,
    pub cloud: &'a mut CloudState,
    pub faults: &'a mut FaultModel,
}

#[derive(Debug, Clone)]
struct UndoEntry {
    step: usize,
    skip: bool,
}

/// One workload in progress: a forward pass that pushes cleanup commands,
/// then a LIFO unwind.
#[derive(Debug, Clone)]
pub struct WorkloadExec {
    stream: usize,
    start: SimTime,
    next_forward: usize,
    unwinding: bool,
    undo_stack: Vec<UndoEntry>,
    // live entities of this workload, with the stack slot of their delete
    live: Vec<(EntityKind, usize)>,
    quota_held: u32,
    admitted: bool,
    records: Vec<StepRecord>,
    error: Option<WorkloadFailure>,
    leftovers: EntityCounts,
}

struct Fault {
    name: Arc<str>,
    rule: AgeingRule,
    overload: bool,
}

impl WorkloadExec {
    pub fn new(stream: usize, start: SimTime) -> Self {
        WorkloadExec {
            stream,
            start,
            next_forward: 0,
            unwinding: false,
            undo_stack: Vec::new(),
            live: Vec::new(),
            quota_held: 0,
            admitted: false,
            records: Vec::new(),
            error: None,
            leftovers: EntityCounts::default(),
        }
    }

    pub fn start(&self) -> SimTime {
        self.start
    }

    /// Holds at least one quota-limited entity right now.
    pub fn holds_quota(&self) -> bool {
        self.quota_held > 0
    }

    /// Held a quota-limited entity at some point.
    pub fn was_admitted(&self) -> bool {
        self.admitted
    }

    pub fn has_failed(&self) -> bool {
        self.error.is_some()
    }

    /// Runs the next step at `now` and returns its index, or `None` once the
    /// workload has nothing left to do.
    pub fn step(&mut self, eng: &mut Engine<'_>, now: SimTime) -> Result<Option<usize>, WorkloadError> {
        let defn = eng.definition;
        if !self.unwinding {
            if let Some(&idx) = defn.forward().get(self.next_forward) {
                self.next_forward += 1;
                self.run_forward(eng, idx, now)?;
                return Ok(Some(idx));
            }
            self.unwinding = true;
        }
        while let Some(entry) = self.undo_stack.pop() {
            if entry.skip {
                continue;
            }
            self.run_cleanup(eng, entry.step, now)?;
            return Ok(Some(entry.step));
        }
        Ok(None)
    }

    fn sample(&self, eng: &mut Engine<'_>, idx: usize) -> Result<Option<Fault>, WorkloadError> {
        let name = &eng.definition.step(idx).name;
        Ok(eng.faults.sample_fault(name)?.map(|e| Fault {
            name: Arc::from(e.name.as_str()),
            rule: e.rule,
            overload: e.overload_indicator,
        }))
    }

    fn record(&mut self, eng: &Engine<'_>, idx: usize, outcome: StepOutcome, now: SimTime) {
        self.records.push(StepRecord { step: eng.definition.name(idx).clone(), outcome, started_at: now });
    }

    fn fail(
        &mut self,
        eng: &Engine<'_>,
        idx: usize,
        now: SimTime,
        error: Arc<str>,
        overload: bool,
        leftover: Option<EntityKind>,
    ) {
        self.record(eng, idx, StepOutcome::Failed, now);
        if self.error.is_none() {
            self.error = Some(WorkloadFailure {
                step: eng.definition.name(idx).clone(),
                error,
                at: now,
                ageing: leftover.is_some(),
                overload_indicator: overload,
                leftover,
            });
        }
        self.unwinding = true;
    }

    fn generated_error(&self, eng: &Engine<'_>, name: &str) -> (Arc<str>, bool) {
        (Arc::from(name), eng.faults.is_overload_indicator(name))
    }

    fn leave(&mut self, eng: &mut Engine<'_>, kind: EntityKind) -> Result<(), WorkloadError> {
        eng.cloud.record_leftover(kind)?;
        self.leftovers.increment(kind);
        Ok(())
    }

    fn release_quota(&mut self, eng: &Engine<'_>, kind: EntityKind) {
        if eng.cloud.is_quota_limited(kind) {
            self.quota_held -= 1;
        }
    }

    /// Abandons the most recently created entity, which the unwind will no
    /// longer delete.
    fn abandon_latest(&mut self, eng: &mut Engine<'_>) -> Result<Option<EntityKind>, WorkloadError> {
        let Some((kind, slot)) = self.live.pop() else { return Ok(None) };
        self.undo_stack[slot].skip = true;
        self.release_quota(eng, kind);
        self.leave(eng, kind)?;
        Ok(Some(kind))
    }

    fn apply_fault(
        &mut self,
        eng: &mut Engine<'_>,
        idx: usize,
        now: SimTime,
        fault: Fault,
        created: Option<EntityKind>,
    ) -> Result<(), WorkloadError> {
        let leftover = match fault.rule {
            AgeingRule::LeavesEntity(kind) if created == Some(kind) => {
                if eng.cloud.try_create(kind) == CreateOutcome::Created {
                    self.leave(eng, kind)?;
                    Some(kind)
                } else {
                    None
                }
            }
            AgeingRule::DependsOnProgress => self.abandon_latest(eng)?,
            AgeingRule::LeavesEntity(_) | AgeingRule::NonAgeing => None,
        };
        self.fail(eng, idx, now, fault.name, fault.overload, leftover);
        Ok(())
    }

    fn run_forward(&mut self, eng: &mut Engine<'_>, idx: usize, now: SimTime) -> Result<(), WorkloadError> {
        let spec = eng.definition.step(idx);
        let creates = if spec.action == ActionType::Create { spec.creates_kind } else { None };
        if let Some(kind) = creates {
            if !eng.cloud.can_create(kind) {
                let (name, overload) = self.generated_error(eng, &kind.quota_error_name());
                self.fail(eng, idx, now, name, overload, None);
                return Ok(());
            }
        }
        if let Some(fault) = self.sample(eng, idx)? {
            return self.apply_fault(eng, idx, now, fault, creates);
        }
        if let Some(kind) = creates {
            if kind == EntityKind::Server && !eng.cloud.deposit_cache_image() {
                let (name, overload) = self.generated_error(eng, INSUFFICIENT_DISK_SPACE);
                self.fail(eng, idx, now, name, overload, None);
                return Ok(());
            }
            let outcome = eng.cloud.try_create(kind);
            debug_assert_eq!(outcome, CreateOutcome::Created);
            if eng.cloud.is_quota_limited(kind) {
                self.quota_held += 1;
                self.admitted = true;
            }
        }
        if let Some(undo) = eng.definition.undo_of(idx) {
            if let Some(kind) = creates {
                self.live.push((kind, self.undo_stack.len()));
            }
            self.undo_stack.push(UndoEntry { step: undo, skip: false });
        }
        self.record(eng, idx, StepOutcome::Ok, now);
        Ok(())
    }

    fn run_cleanup(&mut self, eng: &mut Engine<'_>, idx: usize, now: SimTime) -> Result<(), WorkloadError> {
        let spec = eng.definition.step(idx);
        let deletes = if spec.action == ActionType::Delete { spec.deletes_kind } else { None };
        // Only the first error of a workload is sampled; cleanup after a
        // failure runs clean.
        let fault = if self.error.is_none() { self.sample(eng, idx)? } else { None };
        match (deletes, fault) {
            (Some(kind), fault) => {
                let (top, _) = self.live.pop().expect("delete matches a live entity");
                debug_assert_eq!(top, kind);
                self.release_quota(eng, kind);
                match fault {
                    None => {
                        eng.cloud.try_delete(kind)?;
                        self.record(eng, idx, StepOutcome::Ok, now);
                    }
                    Some(f) => {
                        self.leave(eng, kind)?;
                        self.fail(eng, idx, now, f.name, f.overload, Some(kind));
                    }
                }
            }
            (None, None) => self.record(eng, idx, StepOutcome::Ok, now),
            (None, Some(f)) => self.apply_fault(eng, idx, now, f, None)?,
        }
        Ok(())
    }

    pub fn finish(self, end: SimTime) -> WorkloadResult {
        let classification = if !self.leftovers.is_zero() {
            Classification::AgeingFailure
        } else if self.error.is_some() {
            Classification::NonAgeingFailure
        } else {
            Classification::Success
        };
        WorkloadResult {
            stream: self.stream,
            start: self.start,
            end,
            duration_secs: (end - self.start).as_secs_f64(),
            steps_executed: self.records,
            error: self.error,
            classification,
            leftovers_created: self.leftovers,
        }
    }
}

/// Result for a launch against a failed cloud: no step runs.
pub fn unavailable_result(
    eng: &Engine<'_>,
    stream: usize,
    start: SimTime,
    end: SimTime,
) -> WorkloadResult {
    let first = eng.definition.forward()[0];
    let step = eng.definition.name(first).clone();
    WorkloadResult {
        stream,
        start,
        end,
        duration_secs: (end - start).as_secs_f64(),
        steps_executed: Vec::new(),
        error: Some(WorkloadFailure {
            step,
            error: Arc::from(CLOUD_UNAVAILABLE),
            at: start,
            ageing: false,
            overload_indicator: eng.faults.is_overload_indicator(CLOUD_UNAVAILABLE),
            leftover: None,
        }),
        classification: Classification::NonAgeingFailure,
        leftovers_created: EntityCounts::default(),
    }
}

/// Runs a single workload to completion starting at the cloud's clock, with
/// no other workload in flight.
pub fn run_workload(eng: &mut Engine<'_>) -> Result<WorkloadResult, WorkloadError> {
    let start = eng.cloud.clock();
    if eng.cloud.is_failed() {
        let end = start + eng.service.failed_attempt();
        eng.cloud.advance_to(end);
        return Ok(unavailable_result(eng, 0, start, end));
    }
    let mut exec = WorkloadExec::new(0, start);
    let mut now = start;
    while let Some(idx) = exec.step(eng, now)? {
        now = now + eng.service.service_time(&eng.definition.step(idx).name, eng.cloud, 1);
        eng.cloud.advance_to(now);
    }
    if exec.was_admitted() {
        eng.cloud.apply_resource_effects(ResourceEvent::WorkloadFinished);
    }
    eng.cloud.check_failed();
    Ok(exec.finish(now))
}
