use serde::{Deserialize, Serialize};

use super::{sens_slope, HourlySeries, StatsError};

/// Phase endpoint values of an indicator and the deltas between them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgeingSummary {
    /// Mean of stress hour 0.
    pub v0: f64,
    /// Mean of the last populated stress hour.
    pub vb: f64,
    /// Mean of the first post-rejuvenation hour.
    pub vr: f64,
    pub v0_hour: u32,
    pub vb_hour: u32,
    pub vr_hour: u32,
    /// A = vb − v0
    pub ageing_a: f64,
    /// R = vb − vr
    pub rejuvenation_r: f64,
    /// Sen's slope over the stress bins, per hour. `None` with fewer than two.
    pub sens_slope: Option<f64>,
}

pub fn ageing_summary(binned: &HourlySeries) -> Result<AgeingSummary, StatsError> {
    let stress: Vec<_> = binned.stress_bins().collect();
    let first = binned
        .bin(0)
        .filter(|b| stress.iter().any(|s| s.hour == b.hour))
        .ok_or(StatsError::MissingPhaseBin("first stress hour (0)"))?;
    let last = *stress
        .last()
        .ok_or(StatsError::MissingPhaseBin("last stress hour"))?;
    let post = binned
        .post_rejuvenation_bins()
        .next()
        .ok_or(StatsError::MissingPhaseBin("post-rejuvenation hour"))?;

    let stress_means: Vec<f64> = stress.iter().map(|b| b.mean).collect();
    let slope = match sens_slope(&stress_means, 1.0) {
        Ok(s) => Some(s),
        Err(StatsError::InsufficientData { .. }) => None,
        Err(e) => return Err(e),
    };

    Ok(AgeingSummary {
        v0: first.mean,
        vb: last.mean,
        vr: post.mean,
        v0_hour: first.hour,
        vb_hour: last.hour,
        vr_hour: post.hour,
        ageing_a: last.mean - first.mean,
        rejuvenation_r: last.mean - post.mean,
        sens_slope: slope,
    })
}
