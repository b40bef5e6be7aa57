use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn agesim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_agesim")).args(args).current_dir(cwd).output().expect("spawn agesim")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn template(dir: &Path, id: u32, name: &str) {
    let o = agesim(&["config", &id.to_string()], dir);
    assert!(o.status.success(), "{}", stderr(&o));
    fs::write(dir.join(name), &o.stdout).unwrap();
}

fn samples(dir: &Path, name: &str, rows: impl IntoIterator<Item = (f64, f64)>) {
    let mut text = String::from("timestamp,metric,value\n");
    for (t, v) in rows {
        writeln!(text, "{t},heap_used_megabytes,{v}").unwrap();
    }
    fs::write(dir.join(name), text).unwrap();
}

#[test]
fn run_writes_report_series_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    template(dir.path(), 3, "s3.toml");
    let o = agesim(&["run", "s3.toml", "--out", "out", "--stress-hours", "6"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("out");
    for f in ["report.json", "bundle.json", "tables.txt", "trend.csv", "ageing.csv", "errors.csv"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    for f in ["duration.csv", "memory.csv", "swap.csv", "disk.csv"] {
        let text = fs::read_to_string(out.join(f)).unwrap();
        assert!(text.starts_with("timestamp,metric,value\n"), "{f}");
        assert!(text.lines().count() > 1, "{f} is empty");
    }
    let disk = fs::read_to_string(out.join("disk.csv")).unwrap();
    assert!(disk.contains("compute1_disk_used_gigabytes") && disk.contains("control_disk_used_gigabytes"));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["scenario_id"], 3);
    let text = stdout(&o);
    assert!(text.contains("Trend evaluation") && text.contains("Ageing summary"));
    assert_eq!(text, fs::read_to_string(out.join("tables.txt")).unwrap());
}

#[test]
fn seed_override_changes_only_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    template(dir.path(), 1, "s1.toml");
    let run = |seed: &str, out: &str| {
        let o = agesim(&["run", "s1.toml", "--seed", seed, "--stress-hours", "3", "--out", out], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
        let v: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join(out).join("report.json")).unwrap()).unwrap();
        v
    };
    let a = run("11", "a");
    let b = run("11", "b");
    let c = run("12", "c");
    assert_eq!(a, b);
    assert_eq!(a["seed"], 11);
    assert_eq!(c["seed"], 12);
}

#[test]
fn missing_config_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = agesim(&["run", "absent.toml"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("absent.toml"));
}

#[test]
fn invalid_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "concurrency = \"many\"\n").unwrap();
    let o = agesim(&["run", "bad.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    template(dir.path(), 2, "s2.toml");
    let o = agesim(&["run", "s2.toml", "--phases", "stress:2,nap:1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn matrix_suite_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = agesim(&["suite", "--paper-matrix", "--out", "a"], dir.path());
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    let subdirs = fs::read_dir(dir.path().join("a")).unwrap().filter(|e| e.as_ref().unwrap().path().is_dir()).count();
    assert_eq!(subdirs, 12);
    let combined = fs::read_to_string(dir.path().join("a/combined_trend.txt")).unwrap();
    for id in 1..=12 {
        assert!(combined.contains(&format!("scenario-{id} ")), "scenario {id} missing");
    }
    let b = agesim(&["suite", "--paper-matrix", "--out", "b"], dir.path());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(combined, fs::read_to_string(dir.path().join("b/combined_trend.txt")).unwrap());
}

#[test]
fn config_dir_suite() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("cfg")).unwrap();
    template(&dir.path().join("cfg"), 5, "five.toml");
    fs::write(dir.path().join("cfg/broken.toml"), "topology = 7\n").unwrap();
    fs::write(dir.path().join("cfg/notes.txt"), "ignored").unwrap();
    let o = agesim(&["suite", "--config-dir", "cfg", "--out", "out", "--stress-hours", "3"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("out/five/report.json").is_file());
    assert!(!dir.path().join("out/broken").exists());
    assert!(stderr(&o).contains("broken"));
}

#[test]
fn empty_suite_fails() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("none")).unwrap();
    let o = agesim(&["suite", "--config-dir", "none", "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn analyze_ramp_is_upward() {
    let dir = tempfile::tempdir().unwrap();
    samples(dir.path(), "ramp.csv", (0..24).map(|h| (1.7e9 + h as f64 * 3600.0, 100.0 + 3.0 * h as f64)));
    let o = agesim(&["analyze", "ramp.csv", "--out", "res"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let bundle: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("res/bundle.json")).unwrap()).unwrap();
    let row = &bundle["trend"][0];
    assert_eq!(row["indicator"], "heap_used_megabytes");
    assert_eq!(row["verdict"], "upward");
    assert_eq!(row["sens_slope"], 3.0);
    assert!(dir.path().join("res/analysis.json").is_file());
}

#[test]
fn analyze_short_series_is_insufficient() {
    let dir = tempfile::tempdir().unwrap();
    samples(dir.path(), "short.csv", (0..9).map(|h| (h as f64 * 3600.0, h as f64)));
    let o = agesim(&["analyze", "short.csv", "--out", "res"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let bundle: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("res/bundle.json")).unwrap()).unwrap();
    assert_eq!(bundle["trend"][0]["verdict"], "insufficient_data");
}

#[test]
fn analyze_constant_series_with_phases() {
    let dir = tempfile::tempdir().unwrap();
    samples(dir.path(), "flat.csv", (0..26).map(|h| (500.0 + h as f64 * 3600.0, 42.0)));
    let o = agesim(
        &["analyze", "flat.csv", "--rejuvenation-start", "86400", "--post-start", "90000", "--out", "res"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let bundle: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("res/bundle.json")).unwrap()).unwrap();
    assert_eq!(bundle["trend"][0]["verdict"], "no_trend");
    assert_eq!(bundle["trend"][0]["sens_slope"], 0.0);
    assert_eq!(bundle["ageing"][0]["ageing_a"], 0.0);
    assert_eq!(bundle["ageing"][0]["rejuvenation_r"], 0.0);
}

#[test]
fn analyze_workload_report_honours_overload_flag() {
    let dir = tempfile::tempdir().unwrap();
    let mut records = Vec::new();
    for i in 0..12 {
        let t = i as f64 * 3600.0;
        records.push(format!(r#"{{"start": {t}, "end": {}, "status": "ok"}}"#, t + 60.0 + i as f64));
        records.push(format!(
            r#"{{"start": {}, "end": {}, "status": "failed", "failed_step": "create security group", "error": "SecurityGroupQuotaExceeded"}}"#,
            t + 100.0,
            t + 103.0
        ));
    }
    records.push(
        r#"{"start": 200, "end": 230, "status": "failed", "failed_step": "boot server", "error": "ServerErrorStatus"}"#
            .to_string(),
    );
    fs::write(dir.path().join("report.json"), format!("[{}]", records.join(",\n"))).unwrap();
    let counted = |flag: &str| {
        let o = agesim(&["analyze", "--workload-report", "report.json", &format!("--exclude-overload-errors={flag}")], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let text = stdout(&o);
        let line = text.lines().find(|l| l.starts_with("workload errors:")).unwrap().to_string();
        assert!(text.contains("workload_duration_seconds"));
        line
    };
    assert_eq!(counted("true"), "workload errors: 1 counted, 13 total");
    assert_eq!(counted("false"), "workload errors: 13 counted, 13 total");
}

#[test]
fn analyze_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.csv"), "timestamp,metric,value\n0,x,notanumber\n").unwrap();
    let o = agesim(&["analyze", "bad.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}
