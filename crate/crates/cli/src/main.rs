mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use agesim_core::ingest::{ingest_path, ingest_workload_report_path, IngestError};
use agesim_core::report::ReportBundle;
use agesim_core::scenario::{
    run_scenario, run_suite, ConfigFormat, PhaseKind, PhaseSpec, RejuvenationPolicy, ScenarioConfig, ScenarioError,
};
use agesim_core::stats::{analyze_indicator, IndicatorSeries};
use clap::{Args, Parser, Subcommand, ValueEnum};

use output::{write_analysis, write_scenario, write_suite_summary};

#[derive(Parser)]
#[command(name = "agesim", version, about = "Software ageing and rejuvenation simulator for quota-limited clouds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its report, series and tables.
    Run(RunArgs),
    /// Run several scenarios and a combined trend table.
    Suite(SuiteArgs),
    /// Trend analysis of externally collected series.
    Analyze(AnalyzeArgs),
    /// Print the configuration of a matrix scenario as TOML.
    Config {
        /// Scenario id, 1-12.
        id: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Wait,
    RejuvenateOnFailure,
}

impl From<PolicyArg> for RejuvenationPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Wait => RejuvenationPolicy::WaitForSchedule,
            PolicyArg::RejuvenateOnFailure => RejuvenationPolicy::RejuvenateOnFailure,
        }
    }
}

#[derive(Args, Clone)]
struct Overrides {
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    /// Mark SecurityGroup quota errors as overload [default: true].
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    exclude_overload_errors: Option<bool>,
    /// Phase list such as `stress:24,wait:2,stress:4,rejuvenation:1,post_rejuvenation:1`.
    #[arg(long, value_parser = parse_phases)]
    phases: Option<Vec<PhaseSpec>>,
    #[arg(long)]
    stress_hours: Option<f64>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ScenarioConfig) {
        if let Some(p) = self.policy {
            cfg.policy = p.into();
        }
        if let Some(e) = self.exclude_overload_errors {
            cfg.exclude_overload_errors = e;
        }
        if let Some(p) = &self.phases {
            cfg.phases = Some(p.clone());
        }
        if let Some(h) = self.stress_hours {
            cfg.stress_hours = h;
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Scenario configuration, TOML or JSON (by extension).
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct SuiteArgs {
    /// Run the 12-scenario matrix.
    #[arg(long, conflicts_with = "config_dir", required_unless_present = "config_dir")]
    paper_matrix: bool,
    /// Run every .toml and .json file in this directory.
    #[arg(long)]
    config_dir: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Sample files with the `timestamp,metric,value` header.
    files: Vec<PathBuf>,
    /// Only analyse this metric.
    #[arg(long)]
    metric: Option<String>,
    /// Benchmark report whose successful workloads give a duration series.
    #[arg(long)]
    workload_report: Option<PathBuf>,
    /// Rejuvenation start, seconds after the first sample.
    #[arg(long)]
    rejuvenation_start: Option<f64>,
    /// Post-rejuvenation start, seconds after the first sample.
    #[arg(long, requires = "rejuvenation_start")]
    post_start: Option<f64>,
    /// Keep timestamps as given instead of counting from the first sample.
    #[arg(long)]
    no_rebase: bool,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value_t = true, value_name = "BOOL")]
    exclude_overload_errors: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_phases(text: &str) -> Result<Vec<PhaseSpec>, String> {
    text.split(',')
        .map(|part| {
            let (kind, hours) = part.split_once(':').ok_or_else(|| format!("{part:?}: expected kind:hours"))?;
            let kind = match kind.trim() {
                "stress" => PhaseKind::Stress,
                "wait" => PhaseKind::Wait,
                "rejuvenation" => PhaseKind::Rejuvenation,
                "post_rejuvenation" | "post-rejuvenation" | "post" => PhaseKind::PostRejuvenation,
                other => return Err(format!("unknown phase {other:?}")),
            };
            let hours = hours.trim().parse().map_err(|_| format!("{part:?}: bad hours"))?;
            Ok(PhaseSpec { kind, hours })
        })
        .collect()
}

/// Exit status: 1 nothing completed, 2 configuration or parse error, 3 I/O.
#[derive(Debug)]
pub enum CliError {
    Failed(String),
    Config(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Failed(m) | CliError::Config(m) | CliError::Io(m) => m,
        }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Failed(e.to_string())
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let format = ConfigFormat::from_extension(path.extension().and_then(|e| e.to_str()));
    ScenarioConfig::parse(&text, format).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    args.overrides.apply(&mut cfg);
    let report = run_scenario(&cfg)?;
    let bundle = ReportBundle::from_report(&report);
    write_scenario(&args.out, &report, &bundle)?;
    print!("{}", bundle.render_all());
    Ok(())
}

type Labelled = (String, Result<ScenarioConfig, CliError>);

fn suite_configs(args: &SuiteArgs) -> Result<Vec<Labelled>, CliError> {
    if args.paper_matrix {
        return Ok(agesim_core::scenario::paper_matrix().into_iter().map(|c| (c.display_name(), Ok(c))).collect());
    }
    let dir = args.config_dir.as_ref().expect("clap requires one source");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("toml" | "json")))
        .collect();
    paths.sort();
    Ok(paths
        .into_iter()
        .map(|p| {
            let stem = p.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
            (stem, load_config(&p))
        })
        .collect())
}

fn cmd_suite(args: SuiteArgs) -> Result<(), CliError> {
    let entries = suite_configs(&args)?;
    if entries.is_empty() {
        return Err(CliError::Failed("no scenario configurations found".into()));
    }
    let mut labels = Vec::new();
    let mut configs = Vec::new();
    let mut failures = 0;
    for (label, cfg) in entries {
        match cfg {
            Ok(mut cfg) => {
                args.overrides.apply(&mut cfg);
                labels.push(label);
                configs.push(cfg);
            }
            Err(e) => {
                failures += 1;
                eprintln!("{label}: {}", e.message());
            }
        }
    }
    let mut done = Vec::new();
    for (label, result) in labels.iter().zip(run_suite(&configs)) {
        match result {
            Ok(report) => {
                let bundle = ReportBundle::from_report(&report);
                write_scenario(&args.out.join(label), &report, &bundle)?;
                done.push(report);
            }
            Err(e) => {
                failures += 1;
                eprintln!("{label}: {e}");
            }
        }
    }
    if done.is_empty() {
        return Err(CliError::Failed(format!("all {failures} scenarios failed")));
    }
    let combined = ReportBundle::combine(&done);
    write_suite_summary(&args.out, &combined)?;
    print!("{}", combined.render_trend_table());
    if failures > 0 {
        eprintln!("{failures} scenario(s) failed, {} completed", done.len());
    }
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let mut series: Vec<IndicatorSeries> = Vec::new();
    for f in &args.files {
        series.extend(ingest_path(f, args.metric.as_deref())?);
    }
    let report = args.workload_report.as_deref().map(ingest_workload_report_path).transpose()?;
    if let Some(r) = &report {
        if r.rejected_records > 0 {
            eprintln!("warning: {} workload record(s) end before they start and were skipped", r.rejected_records);
        }
        if !r.durations.is_empty() {
            series.push(r.durations.clone());
        }
    }
    if series.is_empty() && report.is_none() {
        return Err(CliError::Config("nothing to analyse: no sample files or metric not found".into()));
    }

    let origin = if args.no_rebase {
        0.0
    } else {
        series
            .iter()
            .filter_map(IndicatorSeries::first_timestamp)
            .chain(report.as_ref().map(|r| r.origin))
            .fold(f64::INFINITY, f64::min)
    };
    let boundaries: Vec<f64> = args.rejuvenation_start.into_iter().chain(args.post_start).collect();
    let mut analyses = Vec::new();
    for s in &series {
        let s = if origin.is_finite() && origin != 0.0 {
            s.rebased(origin).map_err(|e| CliError::Config(e.to_string()))?
        } else {
            s.clone()
        };
        analyses.push(analyze_indicator(&s, &boundaries).map_err(|e| CliError::Config(format!("{}: {e}", s.name())))?);
    }

    let mut bundle = ReportBundle::from_analyses("input", &analyses);
    if let Some(r) = &report {
        let mut shifted = r.clone();
        shifted.origin = if args.no_rebase { 0.0 } else { r.origin };
        bundle.add_workload_errors("input", &shifted, args.exclude_overload_errors);
        println!(
            "workload errors: {} counted, {} total",
            bundle.counted_errors(),
            bundle.errors.iter().map(|e| e.total).sum::<u64>()
        );
    }
    if let Some(out) = &args.out {
        write_analysis(out, &analyses, &bundle)?;
    }
    print!("{}", bundle.render_all());
    Ok(())
}

fn cmd_config(id: u32) -> Result<(), CliError> {
    let cfg = ScenarioConfig::paper(id)?;
    print!("{}", cfg.to_toml());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Suite(a) => cmd_suite(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Config { id } => cmd_config(id),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
