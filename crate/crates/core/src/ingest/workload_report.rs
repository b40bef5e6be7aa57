use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use super::samples::{parse_timestamp, TimestampStyle};
use super::IngestError;
use crate::cloud::default_catalog;
use crate::scenario::WORKLOAD_DURATION;
use crate::stats::{IndicatorSeries, Unit, SECONDS_PER_HOUR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorkloadStatus {
    #[serde(alias = "ok", alias = "succeeded")]
    Success,
    #[serde(alias = "failed", alias = "error")]
    Failure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Stamp(f64, TimestampStyle);

impl<'de> Deserialize<'de> for Stamp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Field {
            Num(f64),
            Text(String),
        }
        let parsed = match Field::deserialize(d)? {
            Field::Num(v) => v.is_finite().then_some((v, TimestampStyle::EpochSeconds)),
            Field::Text(s) => parse_timestamp(&s),
        };
        parsed
            .map(|(t, style)| Stamp(t, style))
            .ok_or_else(|| serde::de::Error::custom("timestamp is neither epoch seconds nor ISO-8601"))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    start: Stamp,
    end: Stamp,
    status: WorkloadStatus,
    #[serde(default)]
    failed_step: Option<String>,
    #[serde(default)]
    error: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Wrapped {
    workloads: Vec<RawRecord>,
}

/// One workload from an external benchmark report, times in epoch seconds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkloadRecord {
    pub start: f64,
    pub end: f64,
    pub status: WorkloadStatus,
    pub failed_step: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct HourCount {
    /// Hours since `origin`.
    pub hour: u32,
    pub successes: u32,
    pub failures: u32,
    /// Failures whose error is an overload symptom.
    pub overload_failures: u32,
}

impl HourCount {
    pub fn counted_failures(&self, exclude_overload: bool) -> u32 {
        if exclude_overload {
            self.failures - self.overload_failures
        } else {
            self.failures
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkloadReportSeries {
    /// Durations of successful workloads keyed by start time.
    pub durations: IndicatorSeries,
    /// Earliest accepted start; `hourly` counts hours from here.
    pub origin: f64,
    pub hourly: Vec<HourCount>,
    /// Records dropped because they end before they start.
    pub rejected_records: usize,
    pub records: Vec<WorkloadRecord>,
}

/// Reads a JSON list of `{start, end, status, failed_step?, error?}` records,
/// either bare or as `{"workloads": [...]}`.
pub fn ingest_workload_report(mut input: impl Read) -> Result<WorkloadReportSeries, IngestError> {
    let mut text = String::new();
    input
        .read_to_string(&mut text)
        .map_err(|e| IngestError::parse(0, e.to_string()))?;
    let json_err = |e: serde_json::Error| IngestError::parse(e.line() as u64, e.to_string());
    let raw: Vec<RawRecord> = match text.trim_start().chars().next() {
        None => return Err(IngestError::EmptyFile),
        Some('{') => serde_json::from_str::<Wrapped>(&text).map_err(json_err)?.workloads,
        Some(_) => serde_json::from_str(&text).map_err(json_err)?,
    };
    if raw.is_empty() {
        return Err(IngestError::EmptyFile);
    }
    let style = raw[0].start.1;
    if let Some(i) = raw.iter().position(|r| r.start.1 != style || r.end.1 != style) {
        return Err(IngestError::parse(0, format!("record {i}: timestamp style differs from record 0")));
    }

    let overload: Vec<String> = default_catalog()
        .into_iter()
        .filter(|e| e.overload_indicator)
        .map(|e| e.name)
        .collect();
    let (records, rejected): (Vec<_>, Vec<_>) = raw
        .into_iter()
        .map(|r| WorkloadRecord {
            start: r.start.0,
            end: r.end.0,
            status: r.status,
            failed_step: r.failed_step,
            error: r.error,
        })
        .partition(|r| r.end >= r.start);

    let origin = records.iter().map(|r| r.start).fold(f64::INFINITY, f64::min);
    let mut hours: BTreeMap<u32, HourCount> = BTreeMap::new();
    let mut successes: Vec<(f64, f64)> = Vec::new();
    for r in &records {
        let hour = ((r.start - origin) / SECONDS_PER_HOUR).floor() as u32;
        let slot = hours.entry(hour).or_insert(HourCount { hour, ..Default::default() });
        match r.status {
            WorkloadStatus::Success => {
                slot.successes += 1;
                successes.push((r.start, r.end - r.start));
            }
            WorkloadStatus::Failure => {
                slot.failures += 1;
                if r.error.as_ref().is_some_and(|e| overload.contains(e)) {
                    slot.overload_failures += 1;
                }
            }
        }
    }
    successes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut durations = IndicatorSeries::new(WORKLOAD_DURATION, Unit::Seconds);
    for (start, d) in successes {
        durations.push_spaced(start, d).map_err(|e| IngestError::parse(0, e.to_string()))?;
    }
    Ok(WorkloadReportSeries {
        durations,
        origin: if origin.is_finite() { origin } else { 0.0 },
        hourly: hours.into_values().collect(),
        rejected_records: rejected.len(),
        records,
    })
}

pub fn ingest_workload_report_path(path: &Path) -> Result<WorkloadReportSeries, IngestError> {
    let file = std::fs::File::open(path).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    ingest_workload_report(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::bin_hourly;

    fn parse(text: &str) -> Result<WorkloadReportSeries, IngestError> {
        ingest_workload_report(text.as_bytes())
    }

    #[test]
    fn hourly_mean_of_three_successes() {
        let r = parse(
            r#"[{"start": 0, "end": 10, "status": "success"},
                {"start": 100, "end": 120, "status": "success"},
                {"start": 200, "end": 230, "status": "success"}]"#,
        )
        .unwrap();
        let binned = bin_hourly(&r.durations, &[]).unwrap();
        assert_eq!(binned.bins.len(), 1);
        assert_eq!(binned.bins[0].mean, 20.0);
        assert_eq!(r.hourly, vec![HourCount { hour: 0, successes: 3, failures: 0, overload_failures: 0 }]);
    }

    #[test]
    fn failures_counted_separately() {
        let r = parse(
            r#"{"workloads": [
                {"start": 0, "end": 10, "status": "success"},
                {"start": 5, "end": 8, "status": "failed", "failed_step": "create security group", "error": "SecurityGroupQuotaExceeded"},
                {"start": 3700, "end": 3790, "status": "failure", "failed_step": "boot server", "error": "ServerErrorStatus"},
                {"start": 3800, "end": 3700, "status": "success"}]}"#,
        )
        .unwrap();
        assert_eq!(r.durations.len(), 1);
        assert_eq!(r.rejected_records, 1);
        assert_eq!(r.hourly[0].failures, 1);
        assert_eq!(r.hourly[0].counted_failures(true), 0);
        assert_eq!(r.hourly[1], HourCount { hour: 1, successes: 0, failures: 1, overload_failures: 0 });
    }

    #[test]
    fn iso_times_and_collisions() {
        let r = parse(
            r#"[{"start": "2024-03-01T00:00:00Z", "end": "2024-03-01T00:01:00Z", "status": "ok"},
                {"start": "2024-03-01T00:00:00Z", "end": "2024-03-01T00:01:10Z", "status": "ok"}]"#,
        )
        .unwrap();
        assert_eq!(r.durations.values(), vec![60.0, 70.0]);
        assert_eq!(r.origin, 1_709_251_200.0);
    }

    #[test]
    fn errors() {
        assert_eq!(parse("[]"), Err(IngestError::EmptyFile));
        assert_eq!(parse(""), Err(IngestError::EmptyFile));
        assert!(matches!(parse("[\n{\"start\": 0, \"end\": 1, \"status\": \"maybe\"}]"), Err(IngestError::Parse { line: 2, .. })));
        assert!(matches!(parse("[{\"start\": \"noon\", \"end\": 1, \"status\": \"ok\"}]"), Err(IngestError::Parse { .. })));
        assert!(matches!(
            parse(r#"[{"start": 0, "end": "2024-03-01T00:00:00Z", "status": "ok"}]"#),
            Err(IngestError::Parse { .. })
        ));
    }
}
