//! Trend detection and quantification for ageing indicators.
//!
//! Everything here is a pure function of its inputs. Simulator output and
//! ingested measurements both go through [`analyze_indicator`].

mod mann_kendall;
mod sens_slope;
mod series;
mod summary;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use mann_kendall::{
    mann_kendall, s_statistic, tie_corrected_variance, verdict, z_score, TrendTestResult,
    TrendVerdict, CRITICAL_Z, MIN_TREND_SAMPLES, SIGNIFICANCE_ALPHA,
};
pub use sens_slope::sens_slope;
pub use series::{
    bin_hourly, HourBin, HourlySeries, IndicatorSeries, PhaseMarks, Sample, Unit,
    SECONDS_PER_HOUR,
};
pub use summary::{ageing_summary, AgeingSummary};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("series {0:?} has no samples")]
    EmptySeries(String),
    #[error("need at least {needed} values, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("missing {0} bin")]
    MissingPhaseBin(&'static str),
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("invalid phase boundaries: {0}")]
    InvalidBoundaries(String),
    #[error("sample spacing must be a positive number of hours, got {0}")]
    InvalidSpacing(f64),
}

/// Trend test, slope and phase deltas for one indicator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorAnalysis {
    pub indicator: String,
    pub unit: Unit,
    pub hourly: HourlySeries,
    /// Mann-Kendall result over the stress-phase hourly means. The
    /// rejuvenation and post-rejuvenation bins never enter the test.
    pub trend: TrendTestResult,
    /// Sen's slope over the same bins, per hour.
    pub sens_slope: Option<f64>,
    pub summary: Option<AgeingSummary>,
    /// Why `summary` is absent, when it is.
    pub summary_error: Option<String>,
}

pub fn analyze_indicator(
    series: &IndicatorSeries,
    phase_boundaries: &[f64],
) -> Result<IndicatorAnalysis, StatsError> {
    let hourly = if series.is_empty() {
        HourlySeries::default()
    } else {
        bin_hourly(series, phase_boundaries)?
    };
    let stress_means = hourly.stress_means();
    let trend = mann_kendall(&stress_means);
    let slope = sens_slope(&stress_means, 1.0).ok();
    let (summary, summary_error) = match ageing_summary(&hourly) {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(IndicatorAnalysis {
        indicator: series.name().to_string(),
        unit: series.unit(),
        hourly,
        trend,
        sens_slope: slope,
        summary,
        summary_error,
    })
}
