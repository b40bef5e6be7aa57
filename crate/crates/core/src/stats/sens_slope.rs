use super::StatsError;

/// Sen's slope: the median of `(x_j − x_i) / (j − i)` over all pairs `i < j`,
/// divided by the sample spacing in hours to give a per-hour rate.
///
/// The denominator is the index distance, so gaps in the input are ignored.
pub fn sens_slope(values: &[f64], spacing_hours: f64) -> Result<f64, StatsError> {
    let n = values.len();
    if n < 2 {
        return Err(StatsError::InsufficientData { needed: 2, got: n });
    }
    if !(spacing_hours.is_finite() && spacing_hours > 0.0) {
        return Err(StatsError::InvalidSpacing(spacing_hours));
    }
    let mut slopes = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            slopes.push((values[j] - values[i]) / (j - i) as f64);
        }
    }
    Ok(median_in_place(&mut slopes) / spacing_hours)
}

/// Median by selection; an even count averages the two central values.
fn median_in_place(xs: &mut [f64]) -> f64 {
    let len = xs.len();
    let k = len / 2;
    let (lower, upper, _) = xs.select_nth_unstable_by(k, f64::total_cmp);
    let upper = *upper;
    if len % 2 == 1 {
        upper
    } else {
        let below = lower.iter().copied().max_by(f64::total_cmp).unwrap_or(upper);
        (below + upper) / 2.0
    }
}
