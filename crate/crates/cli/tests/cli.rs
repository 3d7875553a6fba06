use std::fs;
use std::process::Command;

use stablelab_cli::config::{validate_config, Experiment, ExperimentConfig};
use stablelab_cli::{compute, run_experiment};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stablelab"))
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn kernel_check_csv_meets_the_cauchy_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["kernel-check", "--out"])
        .arg(dir.path())
        .env_remove("STABLELAB_SEED")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("kernel-check.csv")).unwrap();
    assert!(!text.contains('\r'));
    let (header, rows) = parse_csv(&text);
    assert_eq!(header, ["s", "r", "p", "cauchy_oracle", "abs_err"]);
    let max = rows.iter().map(|r| r[4]).fold(0.0, f64::max);
    assert!(max < 1e-6, "{max}");
    assert!(dir.path().join("kernel-check-manifest.json").exists());
}

#[test]
fn exit_statuses_distinguish_failure_classes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "alpha = 2.5\n").unwrap();
    let out = bin().arg("--config").arg(&cfg).arg("lp").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("(0, 2)"));

    // a tolerance nobody can meet is a numeric failure
    let out = bin()
        .args(["kernel-check", "--tol", "1e-300", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));

    let missing = dir.path().join("nope.json");
    let out = bin().arg("report").arg(&missing).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn flags_beat_environment_which_beats_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "seed = 1\n[kernel-check]\ns = [1.0]\nr = [0.0]\n").unwrap();
    let run = |extra: &[&str], env: Option<&str>| {
        let mut c = bin();
        c.arg("--config").arg(&cfg).arg("--out").arg(dir.path()).arg("kernel-check").args(extra);
        match env {
            Some(v) => c.env("STABLELAB_SEED", v),
            None => c.env_remove("STABLELAB_SEED"),
        };
        assert!(c.status().unwrap().success());
        let m: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("kernel-check-manifest.json")).unwrap()).unwrap();
        m["config"]["seed"].as_u64().unwrap()
    };
    assert_eq!(run(&[], None), 1);
    assert_eq!(run(&[], Some("5")), 5);
    assert_eq!(run(&["--seed", "9"], Some("5")), 9);
}

#[test]
fn manifest_echo_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig::defaults(Experiment::ExitTime);
    c.n = 300;
    c.exit_time.r = vec![0.5, 1.0];
    c.exit_time.dt_factor = 1.0 / 100.0;
    c.seed = 42;
    c.workers = 1;
    c.out_dir = dir.path().join("a");
    let a = run_experiment(&c).unwrap();
    let mut again = validate_config(&a.config_toml).unwrap();
    assert_eq!(again, c);
    again.out_dir = dir.path().join("b");
    again.workers = 2;
    let b = run_experiment(&again).unwrap();
    assert_eq!(a.digests(), b.digests());
    let csv_a = fs::read(dir.path().join("a/exit-time.csv")).unwrap();
    let csv_b = fs::read(dir.path().join("b/exit-time.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
}

#[test]
fn report_marks_missing_experiments() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["kernel-check", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success());
    let out = bin().arg("report").arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("kernel oracle") && l.contains("pass")), "{text}");
    assert!(text.lines().any(|l| l.starts_with("Harnack inequality") && l.contains("not run")));
    assert!(dir.path().join("report.csv").exists());
}

#[test]
fn help_documents_defaults_and_environment() {
    let out = bin().arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for key in ["STABLELAB_SEED", "dt_factor", "center_t", "meyer_p", "[t_grid]"] {
        assert!(text.contains(key), "{key} missing from help");
    }
}

#[test]
fn resolvent_and_simulate_run_small() {
    let mut c = ExperimentConfig::defaults(Experiment::Resolvent);
    c.n = 2000;
    c.grid.extent = vec![65];
    c.grid.spacing = 0.25;
    let out = compute(&c).unwrap();
    assert!(out.checks.iter().all(|k| k.status != stablelab_cli::Status::Fail), "{:?}", out.checks);

    let mut s = ExperimentConfig::defaults(Experiment::Simulate);
    s.n = 2000;
    let out = compute(&s).unwrap();
    assert_eq!(out.checks.len(), 2);
}
