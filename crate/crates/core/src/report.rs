//! Trend, ageing and error tables. Text tables, CSV tables and the JSON
//! document are all rendered from one [`ReportBundle`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::ingest::{WorkloadReportSeries, WorkloadStatus};
use crate::scenario::ScenarioReport;
use crate::stats::{IndicatorAnalysis, TrendVerdict, Unit, SECONDS_PER_HOUR};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub scenario: String,
    pub indicator: String,
    pub unit: Unit,
    /// Stress hours entering the test.
    pub n: usize,
    pub z_score: f64,
    pub verdict: TrendVerdict,
    /// Per hour, in `unit`.
    pub sens_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeingRow {
    pub scenario: String,
    pub indicator: String,
    pub unit: Unit,
    pub ageing_a: Option<f64>,
    pub rejuvenation_r: Option<f64>,
    /// Why the deltas are missing, when they are.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub scenario: String,
    pub error: String,
    pub total: u64,
    /// Whether any occurrence was classified as ageing.
    pub ageing: bool,
    pub excluded_as_overload: bool,
    /// Occurrences per hour.
    pub per_hour: BTreeMap<u32, u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub trend: Vec<TrendRow>,
    pub ageing: Vec<AgeingRow>,
    pub errors: Vec<ErrorRow>,
}

impl ReportBundle {
    pub fn from_analyses<'a>(scenario: &str, analyses: impl IntoIterator<Item = &'a IndicatorAnalysis>) -> Self {
        let mut bundle = ReportBundle::default();
        for a in analyses {
            bundle.trend.push(TrendRow {
                scenario: scenario.to_string(),
                indicator: a.indicator.clone(),
                unit: a.unit,
                n: a.trend.n,
                z_score: a.trend.z_score,
                verdict: a.trend.verdict,
                sens_slope: a.sens_slope,
            });
            bundle.ageing.push(AgeingRow {
                scenario: scenario.to_string(),
                indicator: a.indicator.clone(),
                unit: a.unit,
                ageing_a: a.summary.as_ref().map(|s| s.ageing_a),
                rejuvenation_r: a.summary.as_ref().map(|s| s.rejuvenation_r),
                note: a.summary_error.clone(),
            });
        }
        bundle
    }

    pub fn from_report(report: &ScenarioReport) -> Self {
        let mut bundle = Self::from_analyses(&report.name, &report.analyses);
        let mut rows: BTreeMap<&str, ErrorRow> = BTreeMap::new();
        for e in &report.error_log {
            let row = rows.entry(&e.error).or_insert_with(|| ErrorRow {
                scenario: report.name.clone(),
                error: e.error.to_string(),
                total: 0,
                ageing: false,
                excluded_as_overload: false,
                per_hour: BTreeMap::new(),
            });
            row.total += 1;
            row.ageing |= e.ageing;
            row.excluded_as_overload |= e.excluded_as_overload;
            *row.per_hour.entry((e.time_secs / SECONDS_PER_HOUR).floor() as u32).or_default() += 1;
        }
        bundle.errors = rows.into_values().collect();
        bundle
    }

    /// Rows of every report, in order.
    pub fn combine<'a>(reports: impl IntoIterator<Item = &'a ScenarioReport>) -> Self {
        let mut bundle = ReportBundle::default();
        for r in reports {
            bundle.extend(Self::from_report(r));
        }
        bundle
    }

    pub fn extend(&mut self, other: ReportBundle) {
        self.trend.extend(other.trend);
        self.ageing.extend(other.ageing);
        self.errors.extend(other.errors);
    }

    /// Error rows from an ingested workload report; hours count from its origin.
    pub fn add_workload_errors(&mut self, scenario: &str, report: &WorkloadReportSeries, exclude_overload: bool) {
        let overload: Vec<String> = crate::cloud::default_catalog()
            .into_iter()
            .filter(|e| e.overload_indicator)
            .map(|e| e.name)
            .collect();
        let mut rows: BTreeMap<&str, ErrorRow> = BTreeMap::new();
        for r in report.records.iter().filter(|r| r.status == WorkloadStatus::Failure) {
            let name = r.error.as_deref().unwrap_or("unknown");
            let row = rows.entry(name).or_insert_with(|| ErrorRow {
                scenario: scenario.to_string(),
                error: name.to_string(),
                total: 0,
                ageing: false,
                excluded_as_overload: exclude_overload && overload.iter().any(|o| o == name),
                per_hour: BTreeMap::new(),
            });
            row.total += 1;
            let hour = ((r.start - report.origin) / SECONDS_PER_HOUR).floor() as u32;
            *row.per_hour.entry(hour).or_default() += 1;
        }
        self.errors.extend(rows.into_values());
    }

    /// Error occurrences, leaving out overload-marked rows.
    pub fn counted_errors(&self) -> u64 {
        self.errors.iter().filter(|e| !e.excluded_as_overload).map(|e| e.total).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }

    pub fn render_trend_table(&self) -> String {
        let rows: Vec<[String; 6]> = self
            .trend
            .iter()
            .map(|r| {
                [
                    r.scenario.clone(),
                    r.indicator.clone(),
                    r.n.to_string(),
                    format!("{:.2}", r.z_score),
                    r.verdict.marker().to_string(),
                    r.sens_slope.map_or("-".into(), |s| format!("{s:.3} {}", r.unit.rate_label())),
                ]
            })
            .collect();
        render(["scenario", "indicator", "n", "Z", "trend", "sen slope"], &rows)
    }

    pub fn render_ageing_table(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or("-".into(), |v| format!("{v:.2}"));
        let rows: Vec<[String; 5]> = self
            .ageing
            .iter()
            .map(|r| {
                [r.scenario.clone(), r.indicator.clone(), r.unit.to_string(), fmt(r.ageing_a), fmt(r.rejuvenation_r)]
            })
            .collect();
        render(["scenario", "indicator", "unit", "A", "R"], &rows)
    }

    pub fn render_error_table(&self) -> String {
        let rows: Vec<[String; 6]> = self
            .errors
            .iter()
            .map(|r| {
                let hist = r.per_hour.iter().map(|(h, n)| format!("{h}:{n}")).collect::<Vec<_>>().join(" ");
                [
                    r.scenario.clone(),
                    r.error.clone(),
                    r.total.to_string(),
                    if r.ageing { "ageing" } else { "non-ageing" }.into(),
                    if r.excluded_as_overload { "yes" } else { "no" }.into(),
                    hist,
                ]
            })
            .collect();
        render(["scenario", "error", "total", "class", "overload", "per hour"], &rows)
    }

    pub fn render_all(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Trend evaluation\n{}", self.render_trend_table());
        let _ = writeln!(out, "Ageing summary\n{}", self.render_ageing_table());
        if !self.errors.is_empty() {
            let _ = write!(out, "Errors\n{}", self.render_error_table());
        }
        out
    }

    pub fn write_trend_csv(&self, out: impl Write) -> csv::Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["scenario", "indicator", "unit", "n", "z_score", "verdict", "sens_slope_per_hour"])?;
        for r in &self.trend {
            w.write_record([
                r.scenario.as_str(),
                &r.indicator,
                r.unit.as_str(),
                &r.n.to_string(),
                &r.z_score.to_string(),
                r.verdict.marker(),
                &opt(r.sens_slope),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_ageing_csv(&self, out: impl Write) -> csv::Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["scenario", "indicator", "unit", "ageing_a", "rejuvenation_r"])?;
        for r in &self.ageing {
            w.write_record([r.scenario.as_str(), &r.indicator, r.unit.as_str(), &opt(r.ageing_a), &opt(r.rejuvenation_r)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_error_csv(&self, out: impl Write) -> csv::Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["scenario", "error", "hour", "count", "ageing", "excluded_as_overload"])?;
        for r in &self.errors {
            for (h, n) in &r.per_hour {
                w.write_record([
                    r.scenario.as_str(),
                    &r.error,
                    &h.to_string(),
                    &n.to_string(),
                    &r.ageing.to_string(),
                    &r.excluded_as_overload.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

fn render<const N: usize>(header: [&str; N], rows: &[[String; N]]) -> String {
    let mut widths = header.map(str::len);
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    };
    line(header.to_vec());
    line(widths.iter().map(|w| &"----------------------------------------"[..(*w).min(40)]).collect());
    for row in rows {
        line(row.iter().map(String::as_str).collect());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{analyze_indicator, IndicatorSeries};

    fn ramp() -> IndicatorAnalysis {
        let mut s = IndicatorSeries::new("swap_used_gigabytes", Unit::Gigabytes);
        for h in 0..24 {
            s.push(f64::from(h) * 3600.0, 0.1 * f64::from(h)).unwrap();
        }
        s.push(24.0 * 3600.0, 0.0).unwrap();
        s.push(25.0 * 3600.0, 0.1).unwrap();
        analyze_indicator(&s, &[24.0 * 3600.0, 25.0 * 3600.0]).unwrap()
    }

    #[test]
    fn tables_use_fixed_precision() {
        let b = ReportBundle::from_analyses("ramp", [&ramp()]);
        let trend = b.render_trend_table();
        assert!(trend.contains("0.100 GB/h"), "{trend}");
        assert!(trend.lines().nth(2).unwrap().contains(" up "), "{trend}");
        let ageing = b.render_ageing_table();
        assert!(ageing.contains("2.30") && ageing.contains("2.20"), "{ageing}");
    }

    #[test]
    fn insufficient_data_marker() {
        let mut s = IndicatorSeries::new("workload_duration_seconds", Unit::Seconds);
        for h in 0..9 {
            s.push(f64::from(h) * 3600.0, 1.0).unwrap();
        }
        let a = analyze_indicator(&s, &[]).unwrap();
        let b = ReportBundle::from_analyses("short", [&a]);
        let row = b.render_trend_table().lines().nth(2).unwrap().to_string();
        assert!(row.contains(" - "), "{row}");
    }

    #[test]
    fn csv_and_json_agree_with_rows() {
        let b = ReportBundle::from_analyses("ramp", [&ramp()]);
        let mut buf = Vec::new();
        b.write_trend_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(!text.contains('\r'));
        let back: ReportBundle = serde_json::from_str(&b.to_json()).unwrap();
        assert_eq!(back, b);
    }
}
