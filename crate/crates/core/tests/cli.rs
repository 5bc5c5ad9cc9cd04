use std::path::Path;
use std::process::{Command, Output};

fn wtchaos(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wtchaos"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn trees_writes_catalan_many_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = wtchaos(&["trees", "N=2", "n=6"], dir.path());
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("trees.csv")).unwrap();
    assert_eq!(csv.lines().count(), 133);
    assert!(csv.starts_with("index,code\n"));
    let m = manifest(dir.path());
    assert_eq!(m["status"], "passed");
    assert_eq!(m["summary"]["count"], "132");
    assert_eq!(m["config"]["order"], 6);
}

#[test]
fn unknown_key_exits_2_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    let o = wtchaos(&["trees", "nodes=6"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`nodes`"));
}

#[test]
fn bad_value_exits_2_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let o = wtchaos(&["slope", "--set", "scales=[4,6]"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`scales`"));
    let o = wtchaos(&["moments", "radius=-1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`radius`"));
}

#[test]
fn budget_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = wtchaos(&["trees", "n=12", "tree_cap=100"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(manifest(dir.path())["status"], "error");
}

#[test]
fn failed_assertion_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = wtchaos(&["slope", "slope_window=[0.1, 0.2]"], dir.path());
    assert_eq!(o.status.code(), Some(4));
    let m = manifest(dir.path());
    assert_eq!(m["status"], "failed");
    assert!((m["constants"]["slope"].as_f64().unwrap() + 0.5).abs() < 1e-9);
}

#[test]
fn oversized_datum_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let o = wtchaos(
        &["euler-wp", "eps=50", "c_picard=0.2", "inequality_probes=2"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("threshold"));
}

#[test]
fn config_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "experiment = \"pairings\"\norders = [1, 1, 0, 0]\nfrequencies = [[1], [-1], [2], [-2]]\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = wtchaos(
        &["run", "--config", cfg.to_str().unwrap(), "--workers", "2"],
        &out,
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = std::fs::read_to_string(out.join("pairings.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 15);
    assert_eq!(manifest(&out)["config"]["workers"], 2);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "moments",
        "samples=2000",
        "max_factors=3",
        "frequency_range=2",
        "--seed",
        "7",
    ];
    assert_eq!(wtchaos(&args, a.path()).status.code(), Some(0));
    assert_eq!(wtchaos(&args, b.path()).status.code(), Some(0));
    let read = |d: &Path| std::fs::read(d.join("moments.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    let strip = |d: &Path| {
        let mut m = manifest(d);
        m["wall_time_s"] = serde_json::Value::Null;
        m["config"]["out"] = serde_json::Value::Null;
        m
    };
    assert_eq!(strip(a.path()), strip(b.path()));
}

#[test]
fn fit_slope_reads_a_column() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("ladder.csv");
    std::fs::write(&csv, "L,residual\n4,0.5\n16,0.25\n64,0.125\n256,0.0\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_wtchaos"))
        .args(["fit-slope", csv.to_str().unwrap(), "--column", "residual"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("slope -0.500000"));
    let o = Command::new(env!("CARGO_BIN_EXE_wtchaos"))
        .args(["fit-slope", csv.to_str().unwrap(), "--column", "nope"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
