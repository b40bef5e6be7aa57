use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::exec::{unavailable_result, Engine, WorkloadExec, WorkloadResult};
use super::service::InFlight;
use super::WorkloadError;
use crate::cloud::ResourceEvent;
use crate::time::SimTime;

#[derive(Debug, Clone)]
enum Slot {
    Idle,
    Running(WorkloadExec),
}

/// `concurrency` back-to-back workload streams sharing one cloud.
///
/// Events are ordered by time, then by stream index. A step's effects apply
/// when it starts; the stream's next event is scheduled one service time later.
#[derive(Debug, Clone)]
pub struct WorkloadStream {
    slots: Vec<Slot>,
    queue: BinaryHeap<Reverse<(SimTime, usize)>>,
    launch_deadline: SimTime,
    holding_quota: usize,
    running: usize,
    first_failure: Option<SimTime>,
}

impl WorkloadStream {
    /// Streams launch at `start` and keep relaunching until `launch_deadline`.
    pub fn new(concurrency: usize, start: SimTime, launch_deadline: SimTime) -> Self {
        WorkloadStream {
            slots: vec![Slot::Idle; concurrency],
            queue: (0..concurrency).map(|s| Reverse((start, s))).collect(),
            launch_deadline,
            holding_quota: 0,
            running: 0,
            first_failure: None,
        }
    }

    pub fn concurrency(&self) -> usize {
        self.slots.len()
    }

    /// Workloads currently holding quota-limited entities.
    pub fn holding_quota(&self) -> usize {
        self.holding_quota
    }

    pub fn running(&self) -> usize {
        self.running
    }

    pub fn is_idle(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn next_event(&self) -> Option<SimTime> {
        self.queue.peek().map(|Reverse((t, _))| *t)
    }

    /// First time the cloud was found failed while this stream ran.
    pub fn first_failure(&self) -> Option<SimTime> {
        self.first_failure
    }

    /// No launches at or after `at`; running workloads still finish.
    pub fn stop_launching(&mut self, at: SimTime) {
        self.launch_deadline = self.launch_deadline.min(at);
    }

    /// Processes every event strictly before `until`, handing finished
    /// results to `sink` as they complete.
    pub fn advance(
        &mut self,
        eng: &mut Engine<'_>,
        until: SimTime,
        sink: &mut impl FnMut(WorkloadResult),
    ) -> Result<(), WorkloadError> {
        while let Some(&Reverse((t, s))) = self.queue.peek() {
            if t >= until {
                break;
            }
            self.queue.pop();
            eng.cloud.advance_to(t);
            self.handle(eng, s, t, sink)?;
            if eng.cloud.check_failed() && self.first_failure.is_none() {
                self.first_failure = Some(t);
            }
        }
        Ok(())
    }

    /// Runs until every workload has finished. Launches still stop at the
    /// deadline, so this only terminates for a finite one.
    pub fn drain(
        &mut self,
        eng: &mut Engine<'_>,
        sink: &mut impl FnMut(WorkloadResult),
    ) -> Result<(), WorkloadError> {
        self.advance(eng, SimTime::MAX, sink)
    }

    fn handle(
        &mut self,
        eng: &mut Engine<'_>,
        s: usize,
        t: SimTime,
        sink: &mut impl FnMut(WorkloadResult),
    ) -> Result<(), WorkloadError> {
        let Slot::Running(exec) = &mut self.slots[s] else {
            self.launch(eng, s, t, sink);
            return Ok(());
        };
        let held_before = exec.holds_quota();
        match exec.step(eng, t)? {
            Some(idx) => {
                let held_after = exec.holds_quota();
                if held_after && !held_before {
                    self.holding_quota += 1;
                } else if held_before && !held_after {
                    self.holding_quota -= 1;
                }
                let step = &eng.definition.step(idx).name;
                let load = match eng.service.params().in_flight {
                    InFlight::Running => self.running,
                    InFlight::HoldingQuota => self.holding_quota,
                };
                let dt = eng.service.service_time(step, eng.cloud, load.max(1));
                self.queue.push(Reverse((t + dt, s)));
            }
            None => {
                let Slot::Running(exec) = std::mem::replace(&mut self.slots[s], Slot::Idle) else {
                    unreachable!()
                };
                self.running -= 1;
                if exec.was_admitted() {
                    eng.cloud.apply_resource_effects(ResourceEvent::WorkloadFinished);
                }
                sink(exec.finish(t));
                self.launch(eng, s, t, sink);
            }
        }
        Ok(())
    }

    fn launch(&mut self, eng: &mut Engine<'_>, s: usize, t: SimTime, sink: &mut impl FnMut(WorkloadResult)) {
        if t >= self.launch_deadline {
            return;
        }
        if eng.cloud.is_failed() {
            let end = t + eng.service.failed_attempt();
            sink(unavailable_result(eng, s, t, end));
            self.queue.push(Reverse((end, s)));
        } else {
            self.slots[s] = Slot::Running(WorkloadExec::new(s, t));
            self.running += 1;
            self.queue.push(Reverse((t, s)));
        }
    }
}

/// Runs `concurrency` streams from the cloud's clock, launching until
/// `until`, and returns every result ordered by start time.
pub fn run_stream(
    eng: &mut Engine<'_>,
    until: SimTime,
    concurrency: usize,
) -> Result<Vec<WorkloadResult>, WorkloadError> {
    let mut stream = WorkloadStream::new(concurrency, eng.cloud.clock(), until);
    let mut results = Vec::new();
    stream.advance(eng, SimTime::MAX, &mut |r| results.push(r))?;
    results.sort_by_key(|r| (r.start, r.stream));
    Ok(results)
}
