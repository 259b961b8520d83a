use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use formation_core::config::DEMO_CONFIG;
use formation_core::sim::TRACE_COLUMNS;

fn formation(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_formation"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_demo(dir: &Path) -> String {
    let path = dir.join("scenario.toml");
    fs::write(&path, DEMO_CONFIG).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn run_writes_trace_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_demo(dir.path());
    let out_dir = dir.path().join("run");
    let out = formation(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--horizon", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));

    let trace = fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next().unwrap(), TRACE_COLUMNS.join(","));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 101 * 3);
    assert!(rows[0].starts_with("0,1,"));
    assert!(rows.last().unwrap().starts_with("1,3,"));

    let metrics = fs::read_to_string(out_dir.join("metrics.txt")).unwrap();
    assert!(metrics.starts_with("variant = bioinspired+learning\n"));
    assert!(metrics.contains("robot.3.final_formation_error = "));
}

#[test]
fn outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_demo(dir.path());
    let read = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = formation(&["run", "-c", &cfg, "-o", out_dir.to_str().unwrap(), "--horizon", "0.5"]);
        assert!(out.status.success());
        (
            fs::read(out_dir.join("trace.csv")).unwrap(),
            fs::read(out_dir.join("metrics.txt")).unwrap(),
        )
    };
    assert_eq!(read("a"), read("b"));
}

#[test]
fn sequential_flag_gives_the_same_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_demo(dir.path());
    let read = |name: &str, extra: &[&str]| {
        let out_dir = dir.path().join(name);
        let mut args = vec!["compare", "-c", &cfg, "-o", out_dir.to_str().unwrap(), "--horizon", "0.5"];
        args.extend_from_slice(extra);
        let out = formation(&args);
        assert!(out.status.success());
        fs::read(out_dir.join("report.csv")).unwrap()
    };
    assert_eq!(read("p", &[]), read("s", &["--sequential"]));
}

#[test]
fn compare_writes_report_and_variant_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_demo(dir.path());
    let out_dir = dir.path().join("cmp");
    let out = formation(&["compare", "-c", &cfg, "-o", out_dir.to_str().unwrap(), "--horizon", "2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = fs::read_to_string(out_dir.join("report.csv")).unwrap();
    assert_eq!(report, String::from_utf8(out.stdout).unwrap());
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(
        lines[1],
        "follower,backstepping,bioinspired,backstepping+learning,bioinspired+learning,ordering"
    );
    assert_eq!(lines.len(), 5);
    for slug in ["backstepping", "bioinspired", "backstepping_learning", "bioinspired_learning"] {
        assert!(out_dir.join(format!("trace_{slug}.csv")).exists());
        assert!(out_dir.join(format!("metrics_{slug}.txt")).exists());
    }
}

#[test]
fn validate_echoes_resolved_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("minimal.toml");
    fs::write(
        &path,
        "[topology]\nadjacency = [[0,1,1],[1,0,1],[1,1,0]]\nleader_links = [1,0,0]\n",
    )
    .unwrap();
    let out = formation(&["validate", "-c", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let echoed = String::from_utf8(out.stdout).unwrap();
    for needle in ["dt = 0.001", "k1 = 2.0", "c_a = 3.0", "k4 = [6.0, 50.0]", "a = 0.4", "b = 10.0"] {
        assert!(echoed.contains(needle), "missing `{needle}` in\n{echoed}");
    }
    // the echo is itself a valid scenario
    let again = dir.path().join("echo.toml");
    fs::write(&again, &echoed).unwrap();
    assert!(formation(&["validate", "-c", again.to_str().unwrap()]).status.success());
}

#[test]
fn invalid_gain_exits_with_one_and_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, DEMO_CONFIG.replace("k1 = 2.0", "k1 = -1.0")).unwrap();
    let out = formation(&["validate", "-c", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    let line = DEMO_CONFIG.lines().position(|l| l.starts_with("k1 =")).unwrap() + 1;
    assert!(err.contains(&format!("line {line}")), "{err}");
    assert!(err.contains("positive design constants"), "{err}");
}

#[test]
fn disconnected_graph_is_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("split.toml");
    let src = DEMO_CONFIG
        .replace("[0, 1, 1],", "[0, 1, 0],")
        .replace("[1, 0, 1],", "[1, 0, 0],")
        .replace("[1, 1, 0],", "[0, 0, 0],");
    fs::write(&path, src).unwrap();
    let out_dir = dir.path().join("never");
    let out = formation(&["run", "-c", path.to_str().unwrap(), "-o", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("connected"), "{}", stderr(&out));
    assert!(!out_dir.exists());
}

#[test]
fn parse_errors_carry_a_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("typo.toml");
    fs::write(&path, DEMO_CONFIG.replace("k_b1 = 1.0", "k_bl = 1.0")).unwrap();
    let out = formation(&["validate", "-c", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let line = DEMO_CONFIG.lines().position(|l| l.starts_with("k_b1")).unwrap() + 1;
    assert!(stderr(&out).contains(&format!("typo.toml:{line}:")), "{}", stderr(&out));
}

#[test]
fn missing_config_is_a_validation_failure() {
    let out = formation(&["validate", "-c", "/nonexistent/scenario.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn runtime_failure_exits_with_two_and_leaves_nothing_behind() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_demo(dir.path());
    let out_dir = dir.path().join("partial");
    // the backstepping learner is driven through zero early in this run
    let out = formation(&[
        "compare",
        "-c",
        &cfg,
        "-o",
        out_dir.to_str().unwrap(),
        "--dt",
        "0.0005",
        "--horizon",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("parameter estimate collapsed"), "{}", stderr(&out));
    assert!(!out_dir.exists());
}

#[test]
fn unknown_variant_is_a_usage_error() {
    let out = formation(&["run", "-c", "x.toml", "--variant", "pid"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("unknown variant"));
}

#[test]
fn demo_compares_the_embedded_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("demo");
    let out = formation(&["demo", "-o", out_dir.to_str().unwrap(), "--horizon", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(fs::read_to_string(out_dir.join("scenario.toml")).unwrap(), DEMO_CONFIG);
    assert!(out_dir.join("report.csv").exists());
}
