use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};

use super::IngestError;
use crate::stats::{IndicatorSeries, Sample, Unit};

pub const CSV_HEADER: [&str; 3] = ["timestamp", "metric", "value"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimestampStyle {
    EpochSeconds,
    Iso8601,
}

/// Parses one timestamp field into epoch seconds.
pub(crate) fn parse_timestamp(field: &str) -> Option<(f64, TimestampStyle)> {
    if let Ok(v) = field.parse::<f64>() {
        return v.is_finite().then_some((v, TimestampStyle::EpochSeconds));
    }
    let utc = DateTime::parse_from_rfc3339(field)
        .map(|d| d.to_utc())
        .or_else(|_| NaiveDateTime::parse_from_str(field, "%Y-%m-%dT%H:%M:%S%.f").map(|d| d.and_utc()))
        .or_else(|_| NaiveDateTime::parse_from_str(field, "%Y-%m-%d %H:%M:%S%.f").map(|d| d.and_utc()))
        .ok()?;
    let secs = utc.timestamp() as f64 + f64::from(utc.timestamp_subsec_nanos()) / 1e9;
    Some((secs, TimestampStyle::Iso8601))
}

/// One series per metric, sorted by metric name, samples in timestamp order.
/// With `metric_filter`, only that metric is returned.
pub fn ingest(input: impl Read, metric_filter: Option<&str>) -> Result<Vec<IndicatorSeries>, IngestError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = reader.headers().map_err(|e| IngestError::parse(1, e.to_string()))?.clone();
    if header.is_empty() {
        return Err(IngestError::EmptyFile);
    }
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(IngestError::parse(1, format!("expected header {:?}", CSV_HEADER.join(","))));
    }

    let mut by_metric: BTreeMap<String, Vec<Sample>> = BTreeMap::new();
    let mut style = None;
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            IngestError::parse(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        rows += 1;
        let (ts, metric, value) = (&record[0], &record[1], &record[2]);
        let (t, this_style) =
            parse_timestamp(ts).ok_or_else(|| IngestError::parse(line, format!("bad timestamp {ts:?}")))?;
        match style {
            None => style = Some(this_style),
            Some(s) if s != this_style => {
                return Err(IngestError::parse(line, "timestamp style differs from earlier rows"));
            }
            Some(_) => {}
        }
        if metric.is_empty() {
            return Err(IngestError::parse(line, "empty metric name"));
        }
        let v: f64 = value
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| IngestError::parse(line, format!("bad value {value:?}")))?;
        if metric_filter.is_some_and(|f| f != metric) {
            continue;
        }
        by_metric.entry(metric.to_string()).or_default().push(Sample { timestamp: t, value: v });
    }
    if rows == 0 {
        return Err(IngestError::EmptyFile);
    }

    by_metric
        .into_iter()
        .map(|(metric, mut samples)| {
            samples.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
            if let Some(w) = samples.windows(2).find(|w| w[0].timestamp == w[1].timestamp) {
                return Err(IngestError::DuplicateTimestamp { metric, timestamp: w[0].timestamp });
            }
            let unit = Unit::from_metric_name(&metric);
            IndicatorSeries::from_samples(metric, unit, samples)
                .map_err(|e| IngestError::parse(0, e.to_string()))
        })
        .collect()
}

pub fn ingest_path(path: &Path, metric_filter: Option<&str>) -> Result<Vec<IndicatorSeries>, IngestError> {
    let file = std::fs::File::open(path).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    ingest(std::io::BufReader::new(file), metric_filter)
}

/// Writes series in the ingest format. Numbers use the shortest form that
/// parses back to the same value.
pub fn write_series_csv<'a>(
    series: impl IntoIterator<Item = &'a IndicatorSeries>,
    out: impl Write,
) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for s in series {
        for sample in s.samples() {
            w.write_record([sample.timestamp.to_string().as_str(), s.name(), sample.value.to_string().as_str()])?;
        }
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<Vec<IndicatorSeries>, IngestError> {
        ingest(text.as_bytes(), None)
    }

    #[test]
    fn two_metrics_three_rows() {
        let out = parse(
            "timestamp,metric,value\n0,swap_used_gigabytes,1\n0,memory_available_gigabytes,2\n30,swap_used_gigabytes,1.5\n\
             30,memory_available_gigabytes,1.9\n60,swap_used_gigabytes,2\n60,memory_available_gigabytes,1.8\n",
        )
        .unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|s| s.len() == 3 && s.unit() == Unit::Gigabytes));
        assert_eq!(out[0].name(), "memory_available_gigabytes");
    }

    #[test]
    fn rows_are_sorted() {
        let out = parse("timestamp,metric,value\n60,d,3\n0,d,1\n30,d,2\n").unwrap();
        assert_eq!(out[0].values(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn duplicate_timestamp_names_the_collision() {
        let err = parse("timestamp,metric,value\n0,a,1\n30,b,1\n30,a,2\n30,a,3\n").unwrap_err();
        assert_eq!(err, IngestError::DuplicateTimestamp { metric: "a".into(), timestamp: 30.0 });
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse("timestamp,metric,value\n0,a,1\n30,a,x\n").unwrap_err();
        assert!(matches!(err, IngestError::Parse { line: 3, .. }), "{err:?}");
        let err = parse("timestamp,metric,value\n0,a,1\nlater,a,2\n").unwrap_err();
        assert!(matches!(err, IngestError::Parse { line: 3, .. }), "{err:?}");
        let err = parse("timestamp,metric,value\n0,a,1\n30,a\n").unwrap_err();
        assert!(matches!(err, IngestError::Parse { line: 3, .. }), "{err:?}");
        let err = parse("time,metric,value\n0,a,1\n").unwrap_err();
        assert!(matches!(err, IngestError::Parse { line: 1, .. }), "{err:?}");
        let err = parse("timestamp,metric,value\n0,a,NaN\n").unwrap_err();
        assert!(matches!(err, IngestError::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(parse(""), Err(IngestError::EmptyFile));
        assert_eq!(parse("timestamp,metric,value\n"), Err(IngestError::EmptyFile));
    }

    #[test]
    fn iso_timestamps() {
        let out = parse(
            "timestamp,metric,value\n2024-03-01T00:00:30Z,m,2\n2024-03-01T00:00:00Z,m,1\n2024-03-01T02:00:00+01:00,m,0\n",
        )
        .unwrap();
        let base = 1_709_251_200.0;
        let ts: Vec<f64> = out[0].samples().iter().map(|s| s.timestamp - base).collect();
        assert_eq!(ts, vec![0.0, 30.0, 3600.0]);
        assert_eq!(out[0].values(), vec![1.0, 2.0, 0.0]);
        assert_eq!(parse_timestamp("2024-03-01 00:00:00.5").unwrap().0, base + 0.5);
    }

    #[test]
    fn mixed_styles_rejected() {
        let err = parse("timestamp,metric,value\n1709251200,m,1\n2024-03-01T00:00:30Z,m,2\n").unwrap_err();
        assert!(matches!(err, IngestError::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn filter_keeps_one_metric() {
        let out = ingest("timestamp,metric,value\n0,a,1\n0,b,2\n".as_bytes(), Some("b")).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].name(), "b");
    }

    #[test]
    fn writer_uses_lf() {
        let mut s = IndicatorSeries::new("x_seconds", Unit::Seconds);
        s.push(0.5, 1e-7).unwrap();
        let mut buf = Vec::new();
        write_series_csv([&s], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "timestamp,metric,value\n0.5,x_seconds,0.0000001\n");
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![
            -1e6f64..1e6,
            any::<f64>().prop_filter("finite", |v| v.is_finite()),
            (-1000i64..1000).prop_map(|v| v as f64 / 10.0),
        ]
    }

    proptest! {
        #[test]
        fn round_trip(values in prop::collection::vec(finite(), 1..80), start in -1e9f64..1e9, steps in prop::collection::vec(1e-3f64..1e4, 80)) {
            let mut s = IndicatorSeries::new("memory_available_gigabytes", Unit::Gigabytes);
            let mut t = start;
            for (v, dt) in values.iter().zip(&steps) {
                s.push(t, *v).unwrap();
                t += dt;
            }
            let mut buf = Vec::new();
            write_series_csv([&s], &mut buf).unwrap();
            let back = ingest(buf.as_slice(), None).unwrap();
            prop_assert_eq!(back, vec![s]);
        }
    }
}
