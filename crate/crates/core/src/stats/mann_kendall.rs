use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// Two-sided significance level of the trend test.
pub const SIGNIFICANCE_ALPHA: f64 = 0.05;
/// Standard-normal quantile for `SIGNIFICANCE_ALPHA`.
pub const CRITICAL_Z: f64 = 1.96;
/// Smallest series length on which a verdict is issued.
pub const MIN_TREND_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendVerdict {
    Upward,
    Downward,
    NoTrend,
    InsufficientData,
}

impl TrendVerdict {
    pub fn marker(self) -> &'static str {
        match self {
            TrendVerdict::Upward => "up",
            TrendVerdict::Downward => "down",
            TrendVerdict::NoTrend => "none",
            TrendVerdict::InsufficientData => "-",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendTestResult {
    pub n: usize,
    pub s_statistic: i64,
    pub variance: f64,
    pub z_score: f64,
    pub verdict: TrendVerdict,
    pub alpha: f64,
}

/// Mann-Kendall trend test.
///
/// Non-finite values are dropped before testing. Series shorter than
/// [`MIN_TREND_SAMPLES`] get `InsufficientData`, but S, var(S) and Z are
/// still reported.
pub fn mann_kendall(values: &[f64]) -> TrendTestResult {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let n = finite.len();
    let s = s_statistic(&finite);
    let variance = tie_corrected_variance(&finite);
    let z = z_score(s, variance);
    TrendTestResult {
        n,
        s_statistic: s,
        variance,
        z_score: z,
        verdict: verdict(n, z),
        alpha: SIGNIFICANCE_ALPHA,
    }
}

/// S = Σ_{i<j} sgn(x_j − x_i), counted in O(n log n) with a Fenwick tree
/// over value ranks.
pub fn s_statistic(values: &[f64]) -> i64 {
    if values.len() < 2 {
        return 0;
    }
    let ranks = dense_ranks(values);
    let distinct = ranks.iter().copied().max().map_or(0, |r| r + 1);
    let mut tree = Fenwick::new(distinct);
    let mut s = 0i64;
    for (seen, &rank) in ranks.iter().enumerate() {
        let below = tree.prefix_sum(rank) as i64;
        let at_or_below = tree.prefix_sum(rank + 1) as i64;
        let above = seen as i64 - at_or_below;
        s += below - above;
        tree.add(rank);
    }
    s
}

/// var(S) = [n(n−1)(2n+5) − Σ t(t−1)(2t+5)] / 18 over groups of tied values.
pub fn tie_corrected_variance(values: &[f64]) -> f64 {
    let n = values.len() as i128;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0i128;
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && sorted[end] == sorted[start] {
            end += 1;
        }
        let t = (end - start) as i128;
        ties += t * (t - 1) * (2 * t + 5);
        start = end;
    }
    let numerator = n * (n - 1) * (2 * n + 5) - ties;
    numerator as f64 / 18.0
}

/// Continuity-corrected standard normal score.
pub fn z_score(s: i64, variance: f64) -> f64 {
    if s == 0 {
        return 0.0;
    }
    // Ties strong enough to zero the variance also force S = 0.
    assert!(variance > 0.0, "var(S) = 0 with S = {s}");
    let sd = variance.sqrt();
    match s.cmp(&0) {
        Ordering::Greater => (s - 1) as f64 / sd,
        Ordering::Less => (s + 1) as f64 / sd,
        Ordering::Equal => unreachable!(),
    }
}

/// Strict two-sided decision at |Z| > 1.96.
pub fn verdict(n: usize, z: f64) -> TrendVerdict {
    if n < MIN_TREND_SAMPLES {
        TrendVerdict::InsufficientData
    } else if z > CRITICAL_Z {
        TrendVerdict::Upward
    } else if z < -CRITICAL_Z {
        TrendVerdict::Downward
    } else {
        TrendVerdict::NoTrend
    }
}

fn dense_ranks(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0; values.len()];
    let mut rank = 0;
    for w in 0..order.len() {
        // -0.0 and 0.0 are adjacent under total_cmp and compare equal here
        if w > 0 && values[order[w]] != values[order[w - 1]] {
            rank += 1;
        }
        ranks[order[w]] = rank;
    }
    ranks
}

struct Fenwick {
    tree: Vec<u32>,
}

impl Fenwick {
    fn new(size: usize) -> Self {
        Self {
            tree: vec![0; size + 1],
        }
    }

    fn add(&mut self, index: usize) {
        let mut i = index + 1;
        while i < self.tree.len() {
            self.tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Number of inserted ranks strictly below `end`.
    fn prefix_sum(&self, end: usize) -> u32 {
        let mut i = end;
        let mut total = 0;
        while i > 0 {
            total += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        total
    }
}
