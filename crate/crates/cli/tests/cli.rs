use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use cellplan::geo::{enu_to_geo, parse_ascii_grid, raster_lookup, EnuPoint};

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(name: &str) -> PathBuf {
    repo().join("fixtures/flat16").join(name)
}

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cellplan"));
    cmd.args(args).env_remove("CELLPLAN_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    Output {
        code: out.status.code().expect("exited normally"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn budget_prints_required_nrsrp() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("result.json");
    let config = repo().join("configs/n78_200mbps.json");
    let o = run(&["budget", "--config", s(&config), "--json", s(&json)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.contains("required NRSRP: -90.62 dBm"), "{}", o.stdout);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
    assert!((v["required_nrsrp_dbm"].as_f64().unwrap() + 90.62).abs() < 0.01);
}

#[test]
fn budget_from_project_and_throughput_override() {
    let project = fixture("project.json");
    let base = run(&["budget", "--project", s(&project)]);
    assert_eq!(base.code, 0, "{}", base.stderr);
    assert!(base.stdout.contains("-90.62 dBm"));
    let more = run(&["budget", "--project", s(&project), "--throughput", "400"]);
    assert_eq!(more.code, 0);
    assert!(!more.stdout.contains("required NRSRP: -90.62 dBm"));
}

#[test]
fn predict_matches_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["predict", "--project", s(&fixture("project.json")), "--out-dir", s(dir.path()), "--ppm"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    for name in ["nrsrp.asc", "best_beam.asc", "bands.asc"] {
        let got = fs::read(dir.path().join(name)).unwrap();
        let want = fs::read(fixture("golden").join(name)).unwrap();
        assert!(got == want, "{name} differs from the golden file");
    }
    let ppm = fs::read_to_string(dir.path().join("coverage.ppm")).unwrap();
    assert!(ppm.starts_with("P3\n16 16\n255\n"));
}

#[test]
fn predict_is_thread_count_independent() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |d: &Path| {
        vec![
            "predict".to_string(),
            "--dtm".into(),
            s(&fixture("dtm.asc")).into(),
            "--clutter".into(),
            s(&fixture("clutter.asc")).into(),
            "--sites".into(),
            s(&fixture("sites.json")).into(),
            "--out-dir".into(),
            s(d).into(),
        ]
    };
    let aa = args(a.path());
    let bb = args(b.path());
    let o1 = run_env(&aa.iter().map(String::as_str).collect::<Vec<_>>(), &[("CELLPLAN_THREADS", "1")]);
    let o2 = run_env(&bb.iter().map(String::as_str).collect::<Vec<_>>(), &[("CELLPLAN_THREADS", "4")]);
    assert_eq!((o1.code, o2.code), (0, 0), "{}{}", o1.stderr, o2.stderr);
    assert!(o1.stderr.contains("1 thread"));
    assert_eq!(o1.stdout.replace(s(a.path()), ""), o2.stdout.replace(s(b.path()), ""));
    for name in ["nrsrp.asc", "best_beam.asc", "bands.asc"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
    let bad = run_env(&aa.iter().map(String::as_str).collect::<Vec<_>>(), &[("CELLPLAN_THREADS", "many")]);
    assert_eq!(bad.code, 1);
}

#[test]
fn lee_echoes_parameters() {
    let o = run(&["lee", "--freq", "3500"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    for part in ["λ = 8.57 cm", "window 342.86 cm", "spacing 6.86 cm", "50 >= N = 36"] {
        assert!(o.stdout.contains(part), "missing '{part}' in {}", o.stdout);
    }
    let o = run(&["lee", "--freq", "3500", "--min-samples", "60"]);
    assert_eq!(o.code, 1);
}

#[test]
fn usage_errors_exit_one() {
    let o = run(&["bogus"]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("Usage"));
    let o = run(&["budget", "--nonsense"]);
    assert_eq!(o.code, 1);
    let o = run(&[]);
    assert_eq!(o.code, 1);
    assert_eq!(run(&["--help"]).code, 0);
}

#[test]
fn malformed_raster_names_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let dtm = dir.path().join("broken.asc");
    let mut text = fs::read_to_string(fixture("dtm.asc")).unwrap();
    text = text.replacen("50 50", "50 hill", 1);
    fs::write(&dtm, text).unwrap();
    let o = run(&[
        "predict",
        "--dtm",
        s(&dtm),
        "--clutter",
        s(&fixture("clutter.asc")),
        "--sites",
        s(&fixture("sites.json")),
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("broken.asc") && o.stderr.contains("line 7"), "{}", o.stderr);
}

#[test]
fn project_with_bad_thresholds_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let project = dir.path().join("project.json");
    let flat = fixture("");
    fs::write(
        &project,
        format!(
            r#"{{"dtm": "{0}/dtm.asc", "clutter": "{0}/clutter.asc", "sites": "{0}/sites.json", "band_thresholds": [-90, -100]}}"#,
            s(&flat)
        ),
    )
    .unwrap();
    let o = run(&["predict", "--project", s(&project), "--out-dir", s(dir.path())]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("strictly increasing"), "{}", o.stderr);
}

#[test]
fn ingest_sorts_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("scan.csv");
    fs::write(
        &input,
        "timestamp_ms,lat,lon,beam_index,nrsrp_dbm,nrsrq_db\n\
         2000,-33.8,151.0001,1,-85,-11\n\
         1000,-33.8,151.0,0,-84,-10\n\
         3000,-33.8,151.0002,9,-84,-10\n",
    )
    .unwrap();
    let out = dir.path().join("clean.csv");
    let o = run(&["ingest", "--input", s(&input), "--out", s(&out)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.contains("samples: 2"));
    assert!(o.stdout.contains("rejected rows: 1"));
    assert!(o.stderr.contains("line 4"), "{}", o.stderr);
    assert!(o.stderr.contains("sorted"));
    let clean = fs::read_to_string(out).unwrap();
    assert!(clean.lines().nth(1).unwrap().starts_with("1000,"));

    fs::write(&input, "timestamp_ms,lat,lon,beam_index,nrsrp_dbm,nrsrq_db\n1000,-33.8,abc,0,-84,-10\n").unwrap();
    let o = run(&["ingest", "--input", s(&input)]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("line 2") && o.stderr.contains("lon"), "{}", o.stderr);
}

#[test]
fn stats_json() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("ue.csv");
    let mut text = String::from("dl_mbps,ul_mbps,latency_ms,nrsrp_dbm\n");
    for i in 0..32 {
        text.push_str(&format!("{},{},{},{}\n", 300 + i, 40, 15 + i % 9, -88));
    }
    fs::write(&input, &text).unwrap();
    let o = run(&["stats", "--input", s(&input)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(v["n"], 32);
    assert_eq!(v["clt_normality_assumable"], true);

    fs::write(&input, "dl_mbps,ul_mbps,latency_ms,nrsrp_dbm\n100,10,10,-90\n120,12,29,-91\n").unwrap();
    let out = dir.path().join("stats.json");
    let o = run(&["stats", "--input", s(&input), "--out", s(&out)]);
    assert_eq!(o.code, 0);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["latency_ms"]["median"], 19.5);
    assert_eq!(v["clt_normality_assumable"], false);
}

/// Drives along the fixture sampling the golden prediction, then runs the
/// measurement pipeline end to end.
#[test]
fn pipeline_closes_on_itself() {
    let dir = tempfile::tempdir().unwrap();
    let pred_path = fixture("golden/nrsrp.asc");
    let pred = parse_ascii_grid(&fs::read_to_string(&pred_path).unwrap()).unwrap();
    let origin = pred.origin();
    let spacing = 0.02;
    let mut csv = String::from("timestamp_ms,lat,lon,beam_index,nrsrp_dbm,nrsrq_db\n");
    for i in 0..7000 {
        // eastward along row 12, then north
        let (x, y) = if i < 3500 { (5.0 + i as f64 * spacing, 35.0) } else { (75.0, 35.0 + (i - 3500) as f64 * spacing) };
        let p = enu_to_geo(origin, EnuPoint::new(x, y));
        let v = raster_lookup(&pred, p);
        csv.push_str(&format!("{},{},{},{},{},{}\n", i * 10, p.lat, p.lon, i % 8, v, -10.5));
    }
    let scan = dir.path().join("scan.csv");
    fs::write(&scan, csv).unwrap();

    let lee = run(&["lee", "--input", s(&scan), "--beam", "3", "--out-dir", s(dir.path())]);
    assert_eq!(lee.code, 0, "{}", lee.stderr);
    for f in ["envelope.csv", "residual.csv", "segments.csv"] {
        assert!(dir.path().join(f).is_file());
    }
    let env_path = dir.path().join("envelope.csv");
    let header = fs::read_to_string(&env_path).unwrap();
    assert!(header.starts_with("distance_m,lat,lon,nrsrp_dbm\n"));

    let cmp = run(&["compare", "--prediction", s(&pred_path), "--envelope", s(&env_path), "--out-dir", s(dir.path())]);
    assert_eq!(cmp.code, 0, "{}", cmp.stderr);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    // the envelope smooths across cell edges, so only the mean closes tightly
    assert!(report["mean_error"].as_f64().unwrap().abs() < 0.3, "{}", report["mean_error"]);
    assert!(fs::read_to_string(dir.path().join("delta.csv")).unwrap().starts_with("lat,lon,measured,predicted,delta\n"));
    assert!(parse_ascii_grid(&fs::read_to_string(dir.path().join("delta.asc")).unwrap()).is_ok());

    let offsets = dir.path().join("offsets.json");
    let tuned = dir.path().join("tuned_sites.json");
    let tune = run(&[
        "tune",
        "--project",
        s(&fixture("project.json")),
        "--envelope",
        s(&env_path),
        "--out",
        s(&offsets),
        "--tuned-sites",
        s(&tuned),
    ]);
    assert_eq!(tune.code, 0, "{}", tune.stderr);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&offsets).unwrap()).unwrap();
    assert!(v["post_rmse"].as_f64().unwrap() <= v["pre_rmse"].as_f64().unwrap());
    assert!(cellplan::propagation::SiteConfig::from_json(&fs::read_to_string(&tuned).unwrap()).is_ok());

    // reruns are byte-identical
    let again = tempfile::tempdir().unwrap();
    let cmp2 = run(&["compare", "--prediction", s(&pred_path), "--envelope", s(&env_path), "--out-dir", s(again.path())]);
    assert_eq!(cmp2.code, 0);
    assert_eq!(
        fs::read(dir.path().join("report.json")).unwrap(),
        fs::read(again.path().join("report.json")).unwrap()
    );
}

#[test]
fn short_route_rejected_with_minimum() {
    let dir = tempfile::tempdir().unwrap();
    let scan = dir.path().join("scan.csv");
    fs::write(
        &scan,
        "timestamp_ms,lat,lon,beam_index,nrsrp_dbm,nrsrq_db\n1000,-33.8,151.0,0,-84,-10\n2000,-33.80001,151.0,0,-85,-10\n",
    )
    .unwrap();
    let o = run(&["lee", "--input", s(&scan), "--out-dir", s(dir.path())]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("3.4286 m"), "{}", o.stderr);
}
