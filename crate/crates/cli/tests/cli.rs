use std::path::Path;
use std::process::{Command, Output};

fn loadshape(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loadshape"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn synth(dir: &Path, extra: &[&str]) {
    let mut args = vec!["synth", "--out", "readings.csv", "--labels", "labels.csv", "--households", "24"];
    args.extend_from_slice(extra);
    let out = loadshape(dir, &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

const FAST: &[&str] = &["--kmeans.n_restarts", "20", "--som.epochs", "20", "--k", "4"];

#[test]
fn cluster_writes_declared_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), &[]);
    let mut args = vec!["cluster", "--input", "readings.csv", "--outdir", "run"];
    args.extend_from_slice(FAST);
    let out = loadshape(tmp.path(), &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["assignments.csv", "centroids.csv", "metrics.json", "clusters.svg", "manifest.json"] {
        assert!(tmp.path().join("run").join(f).is_file(), "{f}");
    }
    let assignments = std::fs::read_to_string(tmp.path().join("run/assignments.csv")).unwrap();
    assert_eq!(assignments.lines().count(), 25);
    for line in assignments.lines().skip(1) {
        let c: usize = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(c < 4);
    }
    assert!(!tmp.path().join("run.lock").exists());
    assert!(!tmp.path().join(".run.partial").exists());
}

#[test]
fn compare_writes_method_subdirectories() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), &[]);
    let mut args = vec!["compare", "--input", "readings.csv", "--outdir", "cmp", "--two_stage.width", "4", "--two_stage.height", "3"];
    args.extend_from_slice(FAST);
    let out = loadshape(tmp.path(), &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let root = tmp.path().join("cmp");
    for sub in ["kmeans", "som", "two_stage"] {
        assert!(root.join(sub).join("assignments.csv").is_file());
    }
    assert!(root.join("som/lattice.svg").is_file());
    let table = std::fs::read_to_string(root.join("comparison.csv")).unwrap();
    assert!(table.starts_with("method,mia,wcss,sizes,best\n"));
    assert_eq!(table.lines().count(), 4);
    assert_eq!(table.matches(",true").count(), 1);
}

#[test]
fn manifest_reproduces_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), &[]);
    let mut args = vec!["cluster", "--input", "readings.csv", "--outdir", "a", "--method", "som"];
    args.extend_from_slice(FAST);
    assert!(loadshape(tmp.path(), &args).status.success());
    let out = loadshape(tmp.path(), &["cluster", "--config", "a/manifest.json", "--outdir", "b"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["assignments.csv", "centroids.csv", "metrics.json", "codebooks.csv"] {
        let a = std::fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn config_file_with_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), &[]);
    std::fs::write(
        tmp.path().join("config.json"),
        r#"{"input": "readings.csv", "k": 3, "kmeans": {"n_restarts": 5}, "outdir": "from-config"}"#,
    )
    .unwrap();
    let out = loadshape(
        tmp.path(),
        &["cluster", "--config", "config.json", "--k", "2", "--mia-variant", "per-cluster-mean"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = std::fs::read_to_string(tmp.path().join("from-config/metrics.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&metrics).unwrap();
    assert_eq!(v["k"], 2);
    assert_eq!(v["mia_variant"], "per-cluster-mean");
    assert_eq!(v["params"]["n_restarts"], 5);
}

#[test]
fn missing_input_exits_2_naming_path() {
    let tmp = tempfile::tempdir().unwrap();
    let out = loadshape(tmp.path(), &["cluster", "--input", "no-such-readings.csv", "--outdir", "run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such-readings.csv"));
    assert!(!tmp.path().join("run").exists());
    assert!(!tmp.path().join(".run.partial").exists());
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(loadshape(tmp.path(), &["cluster", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(loadshape(tmp.path(), &["cluster", "--k", "zero"]).status.code(), Some(2));
    assert_eq!(loadshape(tmp.path(), &["cluster", "--stratum", "spring-weekday"]).status.code(), Some(2));
}

#[test]
fn too_many_clusters_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), &[]);
    let out = loadshape(tmp.path(), &["cluster", "--input", "readings.csv", "--k", "500", "--outdir", "run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cluster"));
}

#[test]
fn ingest_reports_counts_and_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("bad.csv"),
        "household_id,date,hour,kwh\nH1,1990-01-06,0,0.5\nH1,1990-01-06,1,-1\nH1,1990-01-06,99,1\n",
    )
    .unwrap();
    let out = loadshape(tmp.path(), &["ingest", "--input", "bad.csv", "--outdir", "ing"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let counts: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(counts["rows"], 1);
    assert_eq!(counts["diagnostics"], 2);
    assert_eq!(counts["days_dropped"], 1);
    let diags = std::fs::read_to_string(tmp.path().join("ing/diagnostics.csv")).unwrap();
    assert!(diags.contains("3,negative kwh"));
    assert!(diags.contains("4,hour out of range"));
}

#[test]
fn sweep_and_render() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), &["--archetypes", "3"]);
    let out = loadshape(
        tmp.path(),
        &["sweep-k", "--input", "readings.csv", "--outdir", "elbow", "--kmeans.n_restarts", "10", "--k-max", "6"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("elbow/elbow.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    std::fs::remove_file(tmp.path().join("elbow/elbow.svg")).unwrap();
    let out = loadshape(tmp.path(), &["render", "elbow"]);
    assert!(out.status.success());
    assert!(tmp.path().join("elbow/elbow.svg").is_file());
}
