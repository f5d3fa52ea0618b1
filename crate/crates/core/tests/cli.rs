use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn drsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drsim"))
        .args(args)
        .output()
        .expect("drsim runs")
}

fn simulate(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["simulate", "--trials", "10", "--seed", "42", "--out-dir"];
    let out = out.to_str().unwrap();
    args.push(out);
    args.extend_from_slice(extra);
    drsim(&args)
}

#[test]
fn simulate_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(dir.path(), &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let loads = fs::read_to_string(dir.path().join("loads.csv")).unwrap();
    let lines: Vec<&str> = loads.lines().collect();
    assert_eq!(lines.len(), 25);
    assert!(lines[0].starts_with("hour,"));
    let width = lines[0].split(',').count();
    assert!(lines.iter().all(|l| l.split(',').count() == width));

    let stats = fs::read_to_string(dir.path().join("stats.csv")).unwrap();
    assert_eq!(stats.lines().count(), 25);

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["trials"], 10);
    assert_eq!(summary["seed"], 42);
    assert_eq!(summary["mode"], "both");
}

#[test]
fn repeated_runs_are_byte_identical_across_worker_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(simulate(a.path(), &["--workers", "1"]).status.success());
    assert!(simulate(b.path(), &["--workers", "3"]).status.success());
    for name in ["loads.csv", "stats.csv", "summary.json"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name} differs"
        );
    }
}

#[test]
fn default_config_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.json");
    let out = drsim(&["default-config", "--out", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let loaded = stackelberg_dr::load_scenario(&cfg).unwrap();
    assert_eq!(loaded, stackelberg_dr::default_scenario());

    let run = simulate(
        &dir.path().join("out"),
        &["--scenario", cfg.to_str().unwrap(), "--mode", "baseline"],
    );
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
}

#[test]
fn invalid_config_exits_nonzero_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(
        &cfg,
        r#"{"groups": [{"name": "g", "count": 1, "theta": 0.0}]}"#,
    )
    .unwrap();
    let out = simulate(
        &dir.path().join("out"),
        &["--scenario", cfg.to_str().unwrap()],
    );
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error:"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn curtailment_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tight.json");
    fs::write(&cfg, r#"{"gen": {"g_cap": 100.0}}"#).unwrap();
    let out = simulate(
        &dir.path().join("out"),
        &["--scenario", cfg.to_str().unwrap()],
    );
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("curtail"), "{err}");
}

#[test]
fn missing_scenario_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(dir.path(), &["--scenario", "/nonexistent/scenario.json"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/scenario.json"));
}
