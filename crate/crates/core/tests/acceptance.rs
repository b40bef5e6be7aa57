//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use agesim_core::cloud::{
    stream_rng, CloudState, EntityKind, FaultConfig, FaultModel, ResourceEvent, ResourceParams, RngStream, Topology,
    SERVER_ERROR_STATUS,
};
use agesim_core::ingest::{ingest, write_series_csv};
use agesim_core::report::ReportBundle;
use agesim_core::scenario::{paper_matrix, run_scenario, run_suite, ScenarioConfig, SWAP_USED};
use agesim_core::stats::{
    analyze_indicator, mann_kendall, sens_slope, IndicatorSeries, TrendVerdict, Unit, CRITICAL_Z,
};
use agesim_core::time::SimTime;
use agesim_core::workload::{run_workload, Classification, Engine, ServiceModel, ServiceParams, WorkloadDefinition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> Result<(), String> {
    ensure(elapsed < Duration::from_secs(limit_secs), || format!("took {elapsed:?}, limit {limit_secs} s"))
}

fn brute_s(x: &[f64]) -> i64 {
    let mut s = 0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            s += (x[j] - x[i]).signum() as i64 * i64::from(x[j] != x[i]);
        }
    }
    s
}

fn brute_var(x: &[f64]) -> f64 {
    let n = x.len() as i128;
    let mut groups: BTreeMap<i64, i128> = BTreeMap::new();
    for v in x {
        *groups.entry(*v as i64).or_default() += 1;
    }
    let ties: i128 = groups.values().map(|t| t * (t - 1) * (2 * t + 5)).sum();
    (n * (n - 1) * (2 * n + 5) - ties) as f64 / 18.0
}

fn brute_verdict(n: usize, s: i64, var: f64) -> TrendVerdict {
    let z = if s > 0 {
        (s - 1) as f64 / var.sqrt()
    } else if s < 0 {
        (s + 1) as f64 / var.sqrt()
    } else {
        0.0
    };
    if n < 10 {
        TrendVerdict::InsufficientData
    } else if z > CRITICAL_Z {
        TrendVerdict::Upward
    } else if z < -CRITICAL_Z {
        TrendVerdict::Downward
    } else {
        TrendVerdict::NoTrend
    }
}

fn tied_series(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = rng.random_range(10..=60);
    let alphabet = rng.random_range(2..=8);
    let drift = rng.random_range(-0.3..0.3);
    (0..n)
        .map(|i| ((rng.random_range(0..alphabet) as f64) + drift * i as f64).round())
        .collect()
}

fn mkt_oracle() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let mut trends = 0;
    for case in 0..500 {
        let x = tied_series(&mut rng);
        let r = mann_kendall(&x);
        let (s, var) = (brute_s(&x), brute_var(&x));
        ensure(r.s_statistic == s, || format!("case {case}: S {} vs oracle {s}", r.s_statistic))?;
        ensure(r.variance.to_bits() == var.to_bits(), || format!("case {case}: var {} vs oracle {var}", r.variance))?;
        let v = brute_verdict(x.len(), s, var);
        ensure(r.verdict == v, || format!("case {case}: verdict {:?} vs oracle {v:?}", r.verdict))?;
        trends += usize::from(matches!(v, TrendVerdict::Upward | TrendVerdict::Downward));
    }
    within(t.elapsed(), 5)?;
    Ok(format!("500/500 bit-exact, {trends} with a trend, {:?}", t.elapsed()))
}

fn sens_oracle() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(501);
    let mut worst: f64 = 0.0;
    for case in 0..500 {
        let n = rng.random_range(2..=80);
        let x: Vec<f64> = (0..n).map(|i| rng.random_range(-50.0..50.0) + 0.2 * i as f64).collect();
        let mut slopes = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                slopes.push((x[j] - x[i]) / (j - i) as f64);
            }
        }
        slopes.sort_by(f64::total_cmp);
        let m = slopes.len();
        let median = if m % 2 == 1 { slopes[m / 2] } else { (slopes[m / 2 - 1] + slopes[m / 2]) / 2.0 };
        let got = sens_slope(&x, 1.0).map_err(|e| e.to_string())?;
        let rel = (got - median).abs() / median.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        ensure(rel <= 1e-12, || format!("case {case}: {got} vs oracle {median}"))?;
    }
    within(t.elapsed(), 5)?;
    Ok(format!("500/500, worst relative error {worst:e}"))
}

fn mkt_gating() -> Outcome {
    let up9: Vec<f64> = (0..9).map(f64::from).collect();
    let up10: Vec<f64> = (0..10).map(f64::from).collect();
    let r9 = mann_kendall(&up9);
    let r10 = mann_kendall(&up10);
    ensure(r9.verdict == TrendVerdict::InsufficientData, || format!("n=9 gave {:?}", r9.verdict))?;
    ensure(r10.verdict == TrendVerdict::Upward, || format!("n=10 gave {:?}", r10.verdict))?;
    Ok("n=9 InsufficientData, n=10 Upward".into())
}

fn capacity_example() -> Outcome {
    let mut cloud = CloudState::new(Topology::MultiNode, &ResourceParams::default(), 0).map_err(|e| e.to_string())?;
    let c0 = cloud.capacity();
    let leave = |cloud: &mut CloudState, k: EntityKind, n: usize| {
        for _ in 0..n {
            cloud.try_create(k);
            cloud.record_leftover(k).unwrap();
        }
    };
    leave(&mut cloud, EntityKind::Server, 3);
    let c1 = cloud.capacity();
    leave(&mut cloud, EntityKind::Router, 4);
    let c2 = cloud.capacity();
    ensure((c0, c1, c2) == (10, 7, 6), || format!("capacities {c0} -> {c1} -> {c2}"))?;
    Ok("10 -> 7 -> 6".into())
}

fn cleanup_exactness() -> Outcome {
    let defn = WorkloadDefinition::paper_default();
    let service = ServiceModel::new(&ServiceParams::default(), Topology::MultiNode).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for p in 0..defn.len() {
        let step = defn.step(p);
        let error = match step.creates_kind.or(step.deletes_kind) {
            Some(EntityKind::Server) => SERVER_ERROR_STATUS,
            Some(EntityKind::Volume) => agesim_core::cloud::VOLUME_ERROR_STATUS,
            _ => agesim_core::cloud::REBUILD_SERVER_ERROR,
        };
        let cfg = FaultConfig::default().with_probability(&step.name, error, 1.0);
        let mut faults = FaultModel::new(&cfg, &defn.signatures(), stream_rng(0, RngStream::Faults))
            .map_err(|e| e.to_string())?;
        let mut cloud =
            CloudState::new(Topology::MultiNode, &ResourceParams::default(), 0).map_err(|e| e.to_string())?;
        let mut eng = Engine { definition: &defn, service: &service, cloud: &mut cloud, faults: &mut faults };
        let r = run_workload(&mut eng).map_err(|e| e.to_string())?;
        ensure(cloud.live().is_zero(), || format!("{}: live {:?}", step.name, cloud.live()))?;
        let left = cloud.leftover();
        ensure(left.total() <= 1, || format!("{}: {} leftovers", step.name, left.total()))?;
        let at_step = step.creates_kind.filter(|_| error != agesim_core::cloud::REBUILD_SERVER_ERROR).or(
            if defn.is_cleanup(p) { step.deletes_kind } else { None },
        );
        for k in EntityKind::ALL {
            let want = u32::from(Some(k) == at_step);
            ensure(left.get(k) == want, || format!("{}: {k} leftover {} want {want}", step.name, left.get(k)))?;
        }
        if step.name == "boot server" {
            ensure(r.classification == Classification::AgeingFailure && left.get(EntityKind::Server) == 1, || {
                format!("boot server fault: {:?} {:?}", r.classification, left)
            })?;
        }
        checked += 1;
    }
    ensure(checked == 29, || format!("{checked} positions"))?;
    Ok("29 positions, boot server leaves exactly one Server".into())
}

fn disk_leak() -> Outcome {
    let mut cloud = CloudState::new(Topology::MultiNode, &ResourceParams::default(), 0).map_err(|e| e.to_string())?;
    let day = SimTime::from_secs(24 * 3600).as_millis();
    let mut next_hour = 3_600_000;
    for i in 0..1123u64 {
        let t = i * day / 1123;
        while next_hour <= t {
            cloud.advance_to(SimTime::from_millis(next_hour));
            cloud.apply_resource_effects(ResourceEvent::HourElapsed);
            next_hour += 3_600_000;
        }
        cloud.advance_to(SimTime::from_millis(t));
        ensure(cloud.deposit_cache_image(), || format!("image {i} did not fit"))?;
    }
    let used = cloud.cache_used_gb();
    ensure((used - 44.92).abs() <= 0.001, || format!("cache disk {used} GB"))?;

    let mut cfg = ScenarioConfig::paper(4).map_err(|e| e.to_string())?;
    cfg.resources.compute_disk_capacity_gb = Some(46.0);
    let r = run_scenario(&cfg).map_err(|e| e.to_string())?;
    let fp = r.failure_point_secs.ok_or("scenario-4 shape with 46 GB disks never failed")?;
    ensure(fp < 24.0 * 3600.0, || format!("failed at {:.2} h", fp / 3600.0))?;
    ensure(r.error_counts().contains_key("InsufficientDiskSpace"), || "no disk errors".into())?;
    Ok(format!("cache {used:.3} GB after 1123 boots; 46 GB disks fail at {:.2} h", fp / 3600.0))
}

fn overload_dominance() -> Outcome {
    let t = Instant::now();
    let cfg = ScenarioConfig::paper(6).map_err(|e| e.to_string())?;
    let r = run_scenario(&cfg).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let counts = r.error_counts();
    let total: u64 = counts.values().sum();
    let sg = counts.get("SecurityGroupQuotaExceeded").copied().unwrap_or(0);
    ensure(total > 0, || "no errors at all".into())?;
    let share = sg as f64 / total as f64;
    ensure(share >= 0.90, || format!("SecurityGroup share {:.1}% of {total} ({counts:?})", share * 100.0))?;
    within(elapsed, 30)?;
    Ok(format!("{:.1}% of {total} errors, {elapsed:?}", share * 100.0))
}

fn rejuvenation_recovery() -> Outcome {
    let mut cfg = ScenarioConfig::paper(5).map_err(|e| e.to_string())?;
    cfg.faults = FaultConfig::default().with_probability("boot server", SERVER_ERROR_STATUS, 0.5);
    let r = run_scenario(&cfg).map_err(|e| e.to_string())?;
    let fp = r.failure_point_secs.ok_or("cloud never failed")?;
    ensure(fp < 3600.0, || format!("failure at {fp} s, not in hour 1"))?;
    let post_hour = (r.phase_boundaries_secs[1] / 3600.0) as u32;
    let post = r.hour(post_hour).ok_or("no post-rejuvenation outcomes")?;
    ensure(post.successes >= 1, || format!("post hour {post:?}"))?;
    let swap = r.analysis(SWAP_USED).ok_or("no swap analysis")?;
    let rejuv_hour = swap.hourly.phase_marks.rejuvenation.first().copied().ok_or("no rejuvenation bin")?;
    let after = swap.hourly.bin(rejuv_hour).map(|b| b.mean);
    ensure(after == Some(0.0), || format!("swap after rejuvenation {after:?}"))?;
    Ok(format!("failed at {:.0} s, {} successes after rejuvenation, swap 0", fp, post.successes))
}

fn ar_arithmetic() -> Outcome {
    let mut s = IndicatorSeries::new("synthetic_gigabytes", Unit::Gigabytes);
    for h in 0..24 {
        s.push(f64::from(h) * 3600.0, 0.1 * f64::from(h)).map_err(|e| e.to_string())?;
    }
    s.push(24.0 * 3600.0, 0.0).map_err(|e| e.to_string())?;
    s.push(25.0 * 3600.0, 0.1).map_err(|e| e.to_string())?;
    let a = analyze_indicator(&s, &[24.0 * 3600.0, 25.0 * 3600.0]).map_err(|e| e.to_string())?;
    let sum = a.summary.as_ref().ok_or("no summary")?;
    ensure(sum.ageing_a == sum.vb - sum.v0 && sum.rejuvenation_r == sum.vb - sum.vr, || "A/R not vb-v0, vb-vr".into())?;
    ensure((sum.ageing_a - 2.3).abs() <= 1e-12, || format!("A = {}", sum.ageing_a))?;
    ensure((sum.rejuvenation_r - 2.2).abs() <= 1e-12, || format!("R = {}", sum.rejuvenation_r))?;
    let slope = a.sens_slope.ok_or("no slope")?;
    ensure((slope - 0.1).abs() <= 1e-9, || format!("slope {slope}"))?;
    let table = ReportBundle::from_analyses("ramp", [&a]).render_ageing_table();
    let row = table.lines().nth(2).unwrap_or_default();
    ensure(row.contains("2.30") && row.contains("2.20"), || format!("table row {row:?}"))?;
    Ok(format!(
        "A = {} ({:+e} from 2.3), R = {} ({:+e} from 2.2), slope {slope}; tables show 2.30 / 2.20",
        sum.ageing_a,
        sum.ageing_a - 2.3,
        sum.rejuvenation_r,
        sum.rejuvenation_r - 2.2
    ))
}

fn determinism() -> Outcome {
    let t = Instant::now();
    let bundle = || -> Result<String, String> {
        let reports = run_suite(&paper_matrix()).into_iter().collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
        let tables = ReportBundle::combine(&reports);
        Ok(serde_json::to_string(&reports).map_err(|e| e.to_string())? + &tables.to_json() + &tables.render_all())
    };
    let a = bundle()?;
    let b = bundle()?;
    ensure(a == b, || "bundles differ".into())?;
    within(t.elapsed(), 300)?;
    Ok(format!("12 scenarios twice, {} bytes identical, {:?}", a.len(), t.elapsed()))
}

fn ingest_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(502);
    for case in 0..100 {
        let n = rng.random_range(1..200);
        let mut s = IndicatorSeries::new("memory_available_gigabytes", Unit::Gigabytes);
        let mut t = rng.random_range(0.0..2e9);
        for _ in 0..n {
            let v = match rng.random_range(0..3) {
                0 => rng.random_range(-1e3..1e3),
                1 => f64::from_bits(rng.random::<u64>() >> 2),
                _ => rng.random_range(0..100) as f64 / 10.0,
            };
            s.push(t, v).map_err(|e| e.to_string())?;
            t += rng.random_range(0.001..120.0);
        }
        let mut buf = Vec::new();
        write_series_csv([&s], &mut buf).map_err(|e| e.to_string())?;
        let back = ingest(buf.as_slice(), None).map_err(|e| format!("case {case}: {e}"))?;
        ensure(back == vec![s], || format!("case {case}: series differs"))?;
    }
    Ok("100/100 identical".into())
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("MKT oracle equivalence", mkt_oracle),
        ("Sen's slope oracle", sens_oracle),
        ("MKT gating", mkt_gating),
        ("Capacity worked example", capacity_example),
        ("Cleanup exactness", cleanup_exactness),
        ("Disk-leak reproduction", disk_leak),
        ("Overload dominance", overload_dominance),
        ("Rejuvenation recovery", rejuvenation_recovery),
        ("A/R arithmetic", ar_arithmetic),
        ("Determinism", determinism),
        ("Ingestion round trip", ingest_round_trip),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
