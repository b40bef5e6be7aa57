use std::fmt;

use serde::{Deserialize, Serialize};

use super::StatsError;

pub const SECONDS_PER_HOUR: f64 = 3600.0;

/// Measurement unit of an ageing indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Seconds,
    Gigabytes,
    Count,
    Unitless,
}

impl Unit {
    /// Infers the unit from a Prometheus-style metric name suffix
    /// (`workload_duration_seconds`, `swap_used_gigabytes`, `errors_count`).
    pub fn from_metric_name(name: &str) -> Unit {
        if name.ends_with("_seconds") {
            Unit::Seconds
        } else if name.ends_with("_gigabytes") {
            Unit::Gigabytes
        } else if name.ends_with("_count") || name.ends_with("_total") {
            Unit::Count
        } else {
            Unit::Unitless
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Unit::Seconds => "seconds",
            Unit::Gigabytes => "gigabytes",
            Unit::Count => "count",
            Unit::Unitless => "unitless",
        }
    }

    /// Short label for a per-hour rate in this unit.
    pub fn rate_label(self) -> &'static str {
        match self {
            Unit::Seconds => "s/h",
            Unit::Gigabytes => "GB/h",
            Unit::Count => "1/h",
            Unit::Unitless => "/h",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Seconds since the start of the observation window.
    pub timestamp: f64,
    pub value: f64,
}

/// Timestamped samples of one ageing indicator.
///
/// Timestamps are strictly increasing and every value is finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeries")]
pub struct IndicatorSeries {
    name: String,
    unit: Unit,
    samples: Vec<Sample>,
}

#[derive(Deserialize)]
struct RawSeries {
    name: String,
    unit: Unit,
    samples: Vec<Sample>,
}

impl TryFrom<RawSeries> for IndicatorSeries {
    type Error = StatsError;

    fn try_from(raw: RawSeries) -> Result<Self, Self::Error> {
        IndicatorSeries::from_samples(raw.name, raw.unit, raw.samples)
    }
}

impl IndicatorSeries {
    pub fn new(name: impl Into<String>, unit: Unit) -> Self {
        Self {
            name: name.into(),
            unit,
            samples: Vec::new(),
        }
    }

    pub fn from_samples(
        name: impl Into<String>,
        unit: Unit,
        samples: Vec<Sample>,
    ) -> Result<Self, StatsError> {
        let mut series = Self::new(name, unit);
        series.samples.reserve(samples.len());
        for s in samples {
            series.push(s.timestamp, s.value)?;
        }
        Ok(series)
    }

    /// Appends a sample; the timestamp must be later than the last one.
    pub fn push(&mut self, timestamp: f64, value: f64) -> Result<(), StatsError> {
        if !timestamp.is_finite() || !value.is_finite() {
            return Err(StatsError::InvalidSeries(format!(
                "{}: non-finite sample ({timestamp}, {value})",
                self.name
            )));
        }
        if let Some(last) = self.samples.last() {
            if timestamp <= last.timestamp {
                return Err(StatsError::InvalidSeries(format!(
                    "{}: timestamp {timestamp} does not follow {}",
                    self.name, last.timestamp
                )));
            }
        }
        self.samples.push(Sample { timestamp, value });
        Ok(())
    }

    /// Appends a sample keyed by an event time that may collide with the
    /// previous one (concurrent workloads starting together). Colliding or
    /// earlier timestamps are moved 1 ms past the previous sample.
    pub fn push_spaced(&mut self, timestamp: f64, value: f64) -> Result<(), StatsError> {
        let timestamp = match self.samples.last() {
            Some(last) if timestamp <= last.timestamp => last.timestamp + 0.001,
            _ => timestamp,
        };
        self.push(timestamp, value)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.value).collect()
    }

    pub fn first_timestamp(&self) -> Option<f64> {
        self.samples.first().map(|s| s.timestamp)
    }

    /// Shifts every timestamp so that `origin` becomes zero.
    pub fn rebased(&self, origin: f64) -> Result<Self, StatsError> {
        let samples = self
            .samples
            .iter()
            .map(|s| Sample {
                timestamp: s.timestamp - origin,
                value: s.value,
            })
            .collect();
        Self::from_samples(self.name.clone(), self.unit, samples)
    }
}

/// Arithmetic mean of the samples falling in one clock hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourBin {
    pub hour: u32,
    pub mean: f64,
    pub count: usize,
}

/// Hour indices of the bins that belong to the rejuvenation and
/// post-rejuvenation phases. Every other bin is a stress-phase bin.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseMarks {
    pub rejuvenation: Vec<u32>,
    pub post_rejuvenation: Vec<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HourlySeries {
    pub bins: Vec<HourBin>,
    pub phase_marks: PhaseMarks,
}

impl HourlySeries {
    pub fn bin(&self, hour: u32) -> Option<&HourBin> {
        self.bins
            .binary_search_by_key(&hour, |b| b.hour)
            .ok()
            .map(|i| &self.bins[i])
    }

    fn is_marked(&self, hour: u32) -> bool {
        self.phase_marks.rejuvenation.contains(&hour)
            || self.phase_marks.post_rejuvenation.contains(&hour)
    }

    /// Bins before the rejuvenation phase.
    pub fn stress_bins(&self) -> impl Iterator<Item = &HourBin> + '_ {
        self.bins.iter().filter(move |b| !self.is_marked(b.hour))
    }

    pub fn post_rejuvenation_bins(&self) -> impl Iterator<Item = &HourBin> + '_ {
        self.bins
            .iter()
            .filter(move |b| self.phase_marks.post_rejuvenation.contains(&b.hour))
    }

    pub fn stress_means(&self) -> Vec<f64> {
        self.stress_bins().map(|b| b.mean).collect()
    }
}

/// Groups samples into clock hours `[h·3600, (h+1)·3600)` and averages them.
///
/// `phase_boundaries` holds at most two sorted timestamps: the start of the
/// rejuvenation phase and the start of the post-rejuvenation phase. A bin is
/// assigned to the phase containing its start. Hours without samples are
/// left out.
pub fn bin_hourly(
    series: &IndicatorSeries,
    phase_boundaries: &[f64],
) -> Result<HourlySeries, StatsError> {
    if series.is_empty() {
        return Err(StatsError::EmptySeries(series.name().to_string()));
    }
    if phase_boundaries.len() > 2 {
        return Err(StatsError::InvalidBoundaries(format!(
            "expected at most 2 phase boundaries, got {}",
            phase_boundaries.len()
        )));
    }
    if phase_boundaries.iter().any(|b| !b.is_finite())
        || phase_boundaries.windows(2).any(|w| w[0] > w[1])
    {
        return Err(StatsError::InvalidBoundaries(format!(
            "boundaries must be finite and sorted: {phase_boundaries:?}"
        )));
    }

    let mut bins: Vec<HourBin> = Vec::new();
    let mut sum = 0.0;
    for s in series.samples() {
        if s.timestamp < 0.0 {
            return Err(StatsError::InvalidSeries(format!(
                "{}: negative timestamp {}",
                series.name(),
                s.timestamp
            )));
        }
        let hour = (s.timestamp / SECONDS_PER_HOUR).floor() as u32;
        match bins.last_mut() {
            Some(bin) if bin.hour == hour => {
                sum += s.value;
                bin.count += 1;
            }
            _ => {
                if let Some(bin) = bins.last_mut() {
                    bin.mean = sum / bin.count as f64;
                }
                sum = s.value;
                bins.push(HourBin {
                    hour,
                    mean: 0.0,
                    count: 1,
                });
            }
        }
    }
    if let Some(bin) = bins.last_mut() {
        bin.mean = sum / bin.count as f64;
    }

    let mut marks = PhaseMarks::default();
    if let Some(&rejuvenation_start) = phase_boundaries.first() {
        let post_start = phase_boundaries.get(1).copied().unwrap_or(f64::INFINITY);
        for bin in &bins {
            let start = f64::from(bin.hour) * SECONDS_PER_HOUR;
            if start >= post_start {
                marks.post_rejuvenation.push(bin.hour);
            } else if start >= rejuvenation_start {
                marks.rejuvenation.push(bin.hour);
            }
        }
    }

    Ok(HourlySeries {
        bins,
        phase_marks: marks,
    })
}
