use std::collections::BTreeMap;

use super::config::{early_failure_policy, PhaseKind, PolicyDecision, ScenarioConfig};
use super::report::{
    disk_series_name, ErrorLogEntry, HourOutcome, OutcomeTotals, PhaseWindow, ScenarioReport,
    MEMORY_AVAILABLE, SWAP_USED, WORKLOAD_DURATION,
};
use super::ScenarioError;
use crate::cloud::{stream_rng, CloudState, FaultModel, ResourceEvent, RngStream};
use crate::stats::{analyze_indicator, IndicatorSeries, Unit, SECONDS_PER_HOUR};
use crate::time::SimTime;
use crate::workload::{
    Classification, Engine, ServiceModel, WorkloadDefinition, WorkloadResult, WorkloadStream,
};

const HOUR: SimTime = SimTime::from_secs(3600);

/// Collects results and gauge readings as the run progresses.
struct Recorder {
    exclude_overload: bool,
    control: usize,
    durations: Vec<(SimTime, usize, f64)>,
    memory: IndicatorSeries,
    swap: IndicatorSeries,
    disks: Vec<IndicatorSeries>,
    errors: Vec<ErrorLogEntry>,
    hours: BTreeMap<u32, HourOutcome>,
    totals: OutcomeTotals,
}

impl Recorder {
    fn new(cloud: &CloudState, exclude_overload: bool) -> Self {
        Recorder {
            exclude_overload,
            control: cloud.control_node().unwrap_or(0),
            durations: Vec::new(),
            memory: IndicatorSeries::new(MEMORY_AVAILABLE, Unit::Gigabytes),
            swap: IndicatorSeries::new(SWAP_USED, Unit::Gigabytes),
            disks: cloud
                .node_names()
                .map(|n| IndicatorSeries::new(disk_series_name(n), Unit::Gigabytes))
                .collect(),
            errors: Vec::new(),
            hours: BTreeMap::new(),
            totals: OutcomeTotals::default(),
        }
    }

    fn record(&mut self, r: WorkloadResult) {
        let hour = (r.start.as_secs_f64() / SECONDS_PER_HOUR).floor() as u32;
        let slot = self.hours.entry(hour).or_insert_with(|| HourOutcome { hour, ..Default::default() });
        self.totals.workloads += 1;
        self.totals.leftovers.add_assign(&r.leftovers_created);
        match r.classification {
            Classification::Success => {
                slot.successes += 1;
                self.totals.successes += 1;
                self.durations.push((r.start, r.stream, r.duration_secs));
            }
            Classification::NonAgeingFailure => {
                slot.non_ageing_failures += 1;
                self.totals.non_ageing_failures += 1;
            }
            Classification::AgeingFailure => {
                slot.ageing_failures += 1;
                self.totals.ageing_failures += 1;
            }
        }
        if let Some(e) = r.error {
            let excluded = self.exclude_overload && e.overload_indicator;
            if e.overload_indicator {
                slot.overload_failures += 1;
            }
            self.errors.push(ErrorLogEntry {
                time_secs: e.at.as_secs_f64(),
                step: e.step,
                error: e.error,
                ageing: e.ageing,
                excluded_as_overload: excluded,
            });
        }
    }

    fn sample(&mut self, at: SimTime, cloud: &mut CloudState) -> Result<(), ScenarioError> {
        let t = at.as_secs_f64();
        let gauges = cloud.sample_gauges();
        let control = &gauges[self.control];
        self.memory.push(t, control.memory_available_gb)?;
        self.swap.push(t, control.swap_used_gb)?;
        for (series, g) in self.disks.iter_mut().zip(&gauges) {
            series.push(t, g.disk_used_gb)?;
        }
        Ok(())
    }
}

struct PhaseRun {
    end: SimTime,
    stopped_early: bool,
    first_failure: Option<SimTime>,
}

fn run_load_phase(
    eng: &mut Engine<'_>,
    rec: &mut Recorder,
    config: &ScenarioConfig,
    start: SimTime,
    end: SimTime,
    apply_policy: bool,
) -> Result<PhaseRun, ScenarioError> {
    let interval = SimTime::from_secs_f64(config.sample_interval_secs);
    let mut stream = WorkloadStream::new(config.concurrency as usize, start, end);
    let mut batch = Vec::new();
    let mut next_sample = start;
    let mut next_hour = SimTime::from_millis((start.as_millis() / HOUR.as_millis() + 1) * HOUR.as_millis());
    let mut stop = end;
    let mut stopped_early = false;
    loop {
        let t = next_sample.min(next_hour);
        if t >= end {
            break;
        }
        stream.advance(eng, t, &mut |r| batch.push(r))?;
        batch.drain(..).for_each(|r| rec.record(r));
        eng.cloud.advance_to(t);
        if t == next_hour {
            eng.cloud.apply_resource_effects(ResourceEvent::HourElapsed);
            let failed = eng.cloud.check_failed();
            if apply_policy
                && early_failure_policy(config.policy, failed) == PolicyDecision::TriggerRejuvenationNow
            {
                stop = t;
                stopped_early = true;
                break;
            }
            next_hour = next_hour + HOUR;
        }
        if t == next_sample {
            rec.sample(t, eng.cloud)?;
            next_sample = next_sample + interval;
        }
    }
    stream.stop_launching(stop);
    stream.drain(eng, &mut |r| batch.push(r))?;
    batch.drain(..).for_each(|r| rec.record(r));
    Ok(PhaseRun { end: stop, stopped_early, first_failure: stream.first_failure() })
}

fn elapse_hours(cloud: &mut CloudState, from: SimTime, to: SimTime) {
    let mut h = SimTime::from_millis((from.as_millis() / HOUR.as_millis() + 1) * HOUR.as_millis());
    while h < to {
        cloud.advance_to(h);
        cloud.apply_resource_effects(ResourceEvent::HourElapsed);
        h = h + HOUR;
    }
    cloud.advance_to(to);
}

/// Runs the phase protocol of one scenario on virtual time.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioReport, ScenarioError> {
    config.validate()?;
    let definition = config.workload.clone().unwrap_or_else(WorkloadDefinition::paper_default);
    let signatures = definition.signatures();
    let service = ServiceModel::new(&config.service, config.topology)?;
    let mut cloud = CloudState::new(config.topology, &config.resources, config.seed)?;
    let mut faults = FaultModel::new(&config.faults, &signatures, stream_rng(config.seed, RngStream::Faults))?;
    let mut post_faults = config
        .post_rejuvenation_faults
        .as_ref()
        .map(|f| FaultModel::new(f, &signatures, stream_rng(config.seed, RngStream::PostRejuvenationFaults)))
        .transpose()?;

    let mut rec = Recorder::new(&cloud, config.exclude_overload_errors);
    let interval = SimTime::from_secs_f64(config.sample_interval_secs);
    let mut phases = Vec::new();
    let mut boundaries = Vec::new();
    let mut failure_point: Option<SimTime> = None;
    let mut skip_to_rejuvenation = false;
    let mut now = SimTime::ZERO;

    for phase in config.phase_list() {
        let start = now;
        let planned_end = start + SimTime::from_hours_f64(phase.hours);
        match phase.kind {
            PhaseKind::Stress | PhaseKind::Wait if skip_to_rejuvenation => continue,
            PhaseKind::Stress | PhaseKind::PostRejuvenation => {
                if phase.kind == PhaseKind::PostRejuvenation {
                    boundaries.push(start.as_secs_f64());
                    if let Some(f) = post_faults.take() {
                        faults = f;
                    }
                }
                let mut eng = Engine {
                    definition: &definition,
                    service: &service,
                    cloud: &mut cloud,
                    faults: &mut faults,
                };
                let apply_policy = phase.kind == PhaseKind::Stress;
                let run = run_load_phase(&mut eng, &mut rec, config, start, planned_end, apply_policy)?;
                if let Some(f) = run.first_failure {
                    failure_point = Some(failure_point.map_or(f, |p| p.min(f)));
                }
                skip_to_rejuvenation |= run.stopped_early;
                phases.push(PhaseWindow { kind: phase.kind, start_secs: start.as_secs_f64(), end_secs: run.end.as_secs_f64() });
                now = run.end;
            }
            PhaseKind::Wait => {
                elapse_hours(&mut cloud, start, planned_end);
                phases.push(PhaseWindow { kind: phase.kind, start_secs: start.as_secs_f64(), end_secs: planned_end.as_secs_f64() });
                now = planned_end;
            }
            PhaseKind::Rejuvenation => {
                skip_to_rejuvenation = false;
                boundaries.push(start.as_secs_f64());
                cloud.rejuvenate_until(planned_end);
                if planned_end > start {
                    let at = planned_end.saturating_sub(interval).max(start);
                    rec.sample(at, &mut cloud)?;
                }
                phases.push(PhaseWindow { kind: phase.kind, start_secs: start.as_secs_f64(), end_secs: planned_end.as_secs_f64() });
                now = planned_end;
            }
        }
    }

    let mut durations = IndicatorSeries::new(WORKLOAD_DURATION, Unit::Seconds);
    rec.durations.sort_by_key(|&(start, stream, _)| (start, stream));
    for &(start, _, d) in &rec.durations {
        durations.push_spaced(start.as_secs_f64(), d)?;
    }
    let mut series = vec![durations, rec.memory, rec.swap];
    series.extend(rec.disks);
    let analyses = series
        .iter()
        .map(|s| analyze_indicator(s, &boundaries))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(ScenarioReport {
        scenario_id: config.scenario_id,
        name: config.display_name(),
        topology: config.topology,
        concurrency: config.concurrency,
        seed: config.seed,
        policy: config.policy,
        phases,
        phase_boundaries_secs: boundaries,
        series,
        analyses,
        error_log: rec.errors,
        hourly_outcomes: rec.hours.into_values().collect(),
        failure_point_secs: failure_point.map(SimTime::as_secs_f64),
        totals: rec.totals,
        final_state: cloud.snapshot(),
    })
}
