use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use agesim_core::ingest::write_series_csv;
use agesim_core::report::ReportBundle;
use agesim_core::scenario::{ScenarioReport, DISK_USED_SUFFIX, MEMORY_AVAILABLE, SWAP_USED, WORKLOAD_DURATION};
use agesim_core::stats::IndicatorAnalysis;

use crate::CliError;

type SeriesFile = (&'static str, fn(&str) -> bool);

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let mut w = create(path)?;
    f(&mut w).and_then(|()| w.flush()).map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    write_file(path, |w| w.write_all(text.as_bytes()))
}

fn write_tables(dir: &Path, bundle: &ReportBundle) -> Result<(), CliError> {
    write_text(&dir.join("bundle.json"), &bundle.to_json())?;
    write_text(&dir.join("tables.txt"), &bundle.render_all())?;
    write_file(&dir.join("trend.csv"), |w| bundle.write_trend_csv(w).map_err(Into::into))?;
    write_file(&dir.join("ageing.csv"), |w| bundle.write_ageing_csv(w).map_err(Into::into))?;
    write_file(&dir.join("errors.csv"), |w| bundle.write_error_csv(w).map_err(Into::into))
}

/// `report.json`, one series CSV per indicator (`duration`, `memory`,
/// `swap`, and `disk` holding every node), and the tables.
pub fn write_scenario(dir: &Path, report: &ScenarioReport, bundle: &ReportBundle) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let json = serde_json::to_string_pretty(report).map_err(|e| CliError::Failed(e.to_string()))?;
    write_text(&dir.join("report.json"), &json)?;
    let groups: [SeriesFile; 4] = [
        ("duration.csv", |n| n == WORKLOAD_DURATION),
        ("memory.csv", |n| n == MEMORY_AVAILABLE),
        ("swap.csv", |n| n == SWAP_USED),
        ("disk.csv", |n| n.ends_with(DISK_USED_SUFFIX)),
    ];
    for (file, pick) in &groups {
        let series = report.series.iter().filter(|s| pick(s.name()));
        write_file(&dir.join(file), |w| write_series_csv(series, w))?;
    }
    write_tables(dir, bundle)
}

pub fn write_suite_summary(dir: &Path, combined: &ReportBundle) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_text(&dir.join("combined_trend.txt"), &combined.render_trend_table())?;
    write_tables(dir, combined)
}

pub fn write_analysis(dir: &Path, analyses: &[IndicatorAnalysis], bundle: &ReportBundle) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let json = serde_json::to_string_pretty(analyses).map_err(|e| CliError::Failed(e.to_string()))?;
    write_text(&dir.join("analysis.json"), &json)?;
    write_tables(dir, bundle)
}
