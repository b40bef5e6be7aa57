//! Reading indicator series collected outside the simulator.
//!
//! Sample files are CSV with the header `timestamp,metric,value`, UTF-8, LF
//! line endings and `.` as the decimal separator. A timestamp is either a
//! number of epoch seconds (integer or decimal) or an ISO-8601 date-time; one
//! file uses one style.

mod samples;
mod workload_report;

use thiserror::Error;

pub use samples::{ingest, ingest_path, write_series_csv, TimestampStyle, CSV_HEADER};
pub use workload_report::{
    ingest_workload_report, ingest_workload_report_path, HourCount, WorkloadRecord,
    WorkloadReportSeries, WorkloadStatus,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("metric {metric:?} has two samples at timestamp {timestamp}")]
    DuplicateTimestamp { metric: String, timestamp: f64 },
    #[error("no samples in input")]
    EmptyFile,
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl IngestError {
    fn parse(line: u64, message: impl Into<String>) -> Self {
        IngestError::Parse { line, message: message.into() }
    }
}
