use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jflow_cli::commands::{snapshot_name, CHI_FINAL, CHI_MA, NEWTON_FILE, PHI_FINAL, PHI_MA, SERIES_FILE, SUMMARY_FILE};
use jflow_cli::series::read_series;
use jflow_core::snapshot::{self, Snapshot};
use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn jflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jflow")).args(args).env_remove("JFLOW_WORKERS").output().unwrap()
}

fn run_in(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--output", out.to_str().unwrap(), "--quiet"];
    args.extend_from_slice(extra);
    jflow(&args)
}

fn error_line(o: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&o.stderr);
    let line = stderr.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|_| panic!("no JSON error line in {stderr:?}"))
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(SUMMARY_FILE)).unwrap()).unwrap()
}

/// A config file in `dir` made by editing one of the fixtures.
fn edited(dir: &Path, name: &str, edit: impl Fn(String) -> String) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, edit(fs::read_to_string(fixture(name)).unwrap())).unwrap();
    path
}

#[test]
fn usage_errors_exit_with_one() {
    let o = jflow(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_line(&o)["error"], "usage");
    let o = jflow(&["run", "--config", "/nonexistent/config.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(jflow(&["--help"]).status.success());
}

#[test]
fn validation_errors_exit_with_two() {
    let o = jflow(&["validate", "--config", fixture("odd_grid.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let e = error_line(&o);
    assert_eq!(e["error"], "validation");
    assert!(e["message"].as_str().unwrap().contains("grid: grid dims must be even"));

    let tmp = TempDir::new().unwrap();
    let bad = edited(tmp.path(), "standard.toml", |t| t.replace("sigma = 0.2", "sigma = 1.5"));
    let o = run_in("run", &bad, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!tmp.path().join("out").exists(), "nothing may be written for an invalid config");
}

#[test]
fn hypothesis_violations_exit_with_three() {
    let tmp = TempDir::new().unwrap();
    for cmd in ["run", "critical", "validate"] {
        let o = run_in(cmd, &fixture("hypothesis_violation.toml"), &tmp.path().join(cmd), &[]);
        assert_eq!(o.status.code(), Some(3), "{cmd}");
        assert_eq!(error_line(&o)["error"], "hypothesis_violation");
        assert!(!tmp.path().join(cmd).join(SERIES_FILE).exists());
    }
}

#[test]
fn constant_fixture_run_is_trivially_converged() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let o = run_in("run", &fixture("constant.toml"), &out, &["--snapshot-every", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let series = read_series(fs::File::open(out.join(SERIES_FILE)).unwrap()).unwrap();
    assert!(!series.is_empty());
    assert!(series.iter().all(|r| r.osc_phidot == 0.0));
    let s = summary(&out);
    assert_eq!(s["converged"], true);
    assert_eq!(s["exit_code"], 0);
    assert_eq!(s["violations_total"], 0);
    assert!(out.join(snapshot_name(0)).is_file());
    assert!(out.join(PHI_FINAL).is_file() && out.join(CHI_FINAL).is_file());
}

#[test]
fn constant_fixture_critical_is_zero() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("crit");
    let o = run_in("critical", &fixture("constant.toml"), &out, &[]);
    assert_eq!(o.status.code(), Some(0));
    let phi = snapshot::load(out.join(PHI_MA)).unwrap().into_scalar().unwrap();
    assert!(phi.data().iter().all(|&v| v == 0.0));
    assert!(out.join(CHI_MA).is_file());
    let residuals = fs::read_to_string(out.join(NEWTON_FILE)).unwrap();
    assert!(residuals.starts_with("iteration,residual,krylov_iterations,step_length\n"));
}

#[test]
fn short_runs_report_non_convergence_and_keep_outputs() {
    let tmp = TempDir::new().unwrap();
    let cfg = edited(tmp.path(), "standard.toml", |t| t.replace("t_max = 200.0", "t_max = 0.5"));
    let out = tmp.path().join("short");
    let o = run_in("run", &cfg, &out, &["--snapshot-every", "100", "--workers", "1"]);
    assert_eq!(o.status.code(), Some(5));
    assert_eq!(error_line(&o)["error"], "non_convergence");
    let s = summary(&out);
    assert_eq!(s["status"], "non_convergence");
    assert_eq!(s["converged"], false);
    assert_eq!(s["violations_total"], 0);
    let steps = s["steps"].as_u64().unwrap() as usize;
    assert!(steps > 100);
    assert!(out.join(snapshot_name(100)).is_file());
    let series = read_series(fs::File::open(out.join(SERIES_FILE)).unwrap()).unwrap();
    assert!((series.last().unwrap().t - 0.5).abs() < 1e-12);
}

#[test]
fn compare_subcommand() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    assert_eq!(run_in("critical", &fixture("constant.toml"), &a, &[]).status.code(), Some(0));
    let o = jflow(&["compare", a.to_str().unwrap(), a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["sup"], 0.0);

    let cfg = edited(tmp.path(), "constant.toml", |t| t.replace("[8, 8, 8, 8]", "[8, 8, 8, 6]"));
    let b = tmp.path().join("b");
    assert_eq!(run_in("critical", &cfg, &b, &[]).status.code(), Some(0));
    let o = jflow(&["compare", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(error_line(&o)["message"].as_str().unwrap().contains("grid mismatch"));

    let o = jflow(&["compare", a.to_str().unwrap(), tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn standard_fixture_end_to_end() {
    let tmp = TempDir::new().unwrap();
    let (flow, oracle) = (tmp.path().join("flow"), tmp.path().join("oracle"));
    let o = run_in("run", &fixture("standard.toml"), &flow, &["--workers", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&flow);
    assert_eq!(s["converged"], true);
    assert!(s["eta"].as_f64().unwrap() > 0.0);
    assert!(s["r_squared"].as_f64().unwrap() >= 0.98);
    assert_eq!(s["bounded"], true);

    let o = run_in("critical", &fixture("standard.toml"), &oracle, &[]);
    assert_eq!(o.status.code(), Some(0));
    let iterations = fs::read_to_string(oracle.join(NEWTON_FILE)).unwrap().lines().count() - 2;
    assert!(iterations <= 8);

    let o = jflow(&["compare", flow.to_str().unwrap(), oracle.to_str().unwrap(), "--threshold", "1e-5"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["sup"].as_f64().unwrap() <= 1e-5);
    let o = jflow(&["compare", flow.to_str().unwrap(), oracle.to_str().unwrap(), "--threshold", "1e-30"]);
    assert_eq!(o.status.code(), Some(4));

    match snapshot::load(flow.join(CHI_FINAL)).unwrap() {
        Snapshot::Form(f) => assert_eq!(f.shape().dims(), [8, 8, 8, 8]),
        Snapshot::Scalar(_) => panic!("chi snapshot must be a form field"),
    }
}
