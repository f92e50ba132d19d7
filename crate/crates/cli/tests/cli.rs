use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn echoflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_echoflow"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn scenario(name: &str) -> String {
    scenarios().join(format!("{name}.json")).to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn straight_line_run_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = echoflow(&["run", "--scenario", &scenario("straight_line"), "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("all runs succeeded"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("reports/setup4_seed0.json")).unwrap()).unwrap();
    assert_eq!(report["goal_reached"], true);
    assert_eq!(report["termination"], "goal_reached");
}

#[test]
fn enclosing_box_fails_the_run() {
    let o = echoflow(&["run", "--scenario", &scenario("adversarial_box"), "--reps", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("some runs failed"));
    // Both repetitions collide.
    let row = text.lines().find(|l| l.starts_with("setup1")).unwrap();
    let cols: Vec<&str> = row.split_whitespace().collect();
    assert_eq!(&cols[1..4], ["2", "0", "2"]);
}

#[test]
fn schema_errors_exit_2_with_field_list() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{
            "name": "bad",
            "start_zone": {"x_min": 1, "x_max": 0, "y_min": 0, "y_max": 0},
            "waypoints": [],
            "sensors": [],
            "sim": {"dt": -0.1}
        }"#,
    )
    .unwrap();
    let o = echoflow(&["run", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    for field in ["start_zone", "waypoints", "sensors", "sim.dt"] {
        assert!(err.contains(field), "missing {field} in {err}");
    }

    std::fs::write(&bad, r#"{"name": "x", "start_zone": {"x_min": 0, "x_max": 0, "y_min": 0, "y_max": 0}, "waypoints": [[1, 0]], "colour": 3}"#).unwrap();
    let o = echoflow(&["run", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
}

#[test]
fn missing_file_is_not_a_schema_error() {
    let o = echoflow(&["run", "--scenario", "/nonexistent/scenario.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn batch_over_the_setup_table_has_ten_rows() {
    let o = echoflow(&["batch", "--scenario", &scenario("straight_line"), "--reps", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let rows = stdout(&o).lines().filter(|l| l.starts_with("setup")).count();
    // Header line starts with "setup" too.
    assert_eq!(rows, 11);
}

#[test]
fn same_seed_same_trajectory_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = echoflow(&[
            "run",
            "--scenario",
            &scenario("corridor_junction"),
            "--setup",
            "4",
            "--seed",
            "7",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    }
    let f = "trajectories/setup4_seed7.csv";
    let x = std::fs::read(a.path().join(f)).unwrap();
    assert!(x.len() > 1000);
    assert_eq!(x, std::fs::read(b.path().join(f)).unwrap());
}

#[test]
fn export_writes_figures() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = echoflow(&["export", "--scenario", &scenario("corridor_junction"), "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "flowlines.pgm",
        "flowlines.csv",
        "masks/sensor0_ca.pgm",
        "masks/sensor0_oa.pgm",
        "masks/sensor0_rcf.pgm",
        "energyscapes/sensor0.bin",
        "energyscapes/sensor0.csv",
        "energyscapes/sensor0.pgm",
        "trajectory.csv",
        "trajectory.pgm",
        "report.json",
        "heatmap.pgm",
        "heatmap.csv",
    ] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }

    // Re-rendering from the saved report reproduces the run figures.
    let again = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let o = echoflow(&[
        "export",
        "--scenario",
        &scenario("corridor_junction"),
        "--out",
        again.path().to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    for f in ["trajectory.csv", "trajectory.pgm", "heatmap.pgm", "flowlines.pgm"] {
        assert_eq!(std::fs::read(dir.path().join(f)).unwrap(), std::fs::read(again.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn calibrate_prints_thresholds() {
    let o = echoflow(&["calibrate-thresholds"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let t_oa = v["t_oa"].as_f64().unwrap();
    assert!((t_oa - echoflow_core::controller::DEFAULT_T_OA).abs() < 1e-3);
    assert_eq!(v["t_ca"], v["t_oa"]);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = echoflow(&["run", "--scenario", &scenario("straight_line"), "--warp"]);
    assert_eq!(o.status.code(), Some(2));
}
