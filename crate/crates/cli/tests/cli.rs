use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn chemostat(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chemostat"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = chemostat(dir, args);
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&read(dir, "manifest.json")).unwrap()
}

fn header(text: &str) -> &str {
    text.lines().next().unwrap()
}

fn data_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn flags_beat_file_beats_defaults() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "n_nodes = 21\nhorizon = 2.0\nalpha = 0.001\nsigma = 8.0\n").unwrap();
    let out = tmp.path().join("out");
    let cfg_arg = cfg.to_str().unwrap();
    ok(&out, &["--config", cfg_arg, "--set", "dt=0.02", "simulate", "--horizon", "1"]);
    let c = &manifest(&out)["config"];
    assert_eq!(c["horizon"], 1.0);
    assert_eq!(c["alpha"], 0.001);
    assert_eq!(c["sigma"], 8.0);
    assert_eq!(c["dt"], 0.02);
    assert_eq!(c["n_nodes"], 21);
    assert_eq!(c["s_in"], 35.0);
    assert_eq!(manifest(&out)["command"], "simulate");
}

#[test]
fn json_config_is_accepted() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.json");
    fs::write(&cfg, r#"{"n_nodes": 15, "horizon": 0.5}"#).unwrap();
    ok(tmp.path(), &["--config", cfg.to_str().unwrap(), "simulate"]);
    assert_eq!(manifest(tmp.path())["config"]["n_nodes"], 15);
}

#[test]
fn zero_horizon_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let out = chemostat(tmp.path(), &["--set", "n_nodes=11", "simulate", "--horizon", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn wrong_length_initial_density_names_the_node_count() {
    let tmp = TempDir::new().unwrap();
    let out = chemostat(tmp.path(), &["--set", "n_nodes=11", "--set", "f0_values=[1.0, 2.0]", "simulate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("11"));
}

#[test]
fn unknown_keys_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let out = chemostat(tmp.path(), &["--set", "alpah=0.1", "simulate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn positivity_failure_exits_with_numerical_code() {
    let tmp = TempDir::new().unwrap();
    let out = chemostat(
        tmp.path(),
        &[
            "--set", "n_nodes=21", "--set", "control=\"constant\"", "--set", "u_value=50.0",
            "--set", "clamp=false", "simulate", "--dt", "0.1", "--horizon", "1",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t = 0"));
}

#[test]
fn simulate_writes_trajectory_and_snapshots() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["--set", "n_nodes=41", "simulate", "--horizon", "1"]);
    let traj = read(tmp.path(), "trajectory.csv");
    assert_eq!(header(&traj), "t,s,m,u,K");
    let rows = data_rows(&traj);
    assert_eq!(rows.len(), 101);
    assert_eq!(rows[0][0], 0.0);
    assert!((rows[100][0] - 1.0).abs() < 1e-12);

    let snap = read(tmp.path(), "f_1.csv");
    assert_eq!(header(&snap), "z,f");
    let rows = data_rows(&snap);
    assert_eq!(rows.len(), 41);
    assert_eq!(rows[0][0], 1.0);
    assert_eq!(rows[40][0], 3.0);
    assert!(tmp.path().join("f_0.csv").exists());
    assert!(tmp.path().join("f_0.5.csv").exists());
}

#[test]
fn eigen_prints_and_writes_one_row() {
    let tmp = TempDir::new().unwrap();
    let stdout = ok(tmp.path(), &["--set", "n_nodes=200", "eigen", "--phi"]);
    let csv = read(tmp.path(), "eigen.csv");
    assert_eq!(stdout, csv);
    assert_eq!(header(&csv), "lambda1,K,residual,iterations");
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 1);
    let k = rows[0][1];
    assert!((k - 1.511).abs() < 0.01, "K = {k}");
    assert!(rows[0][2] <= 1e-10);
    let phi = read(tmp.path(), "phi.csv");
    assert_eq!(header(&phi), "z,phi");
    assert_eq!(data_rows(&phi).len(), 200);
}

#[test]
fn eigen_without_mutation_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let out = chemostat(tmp.path(), &["--set", "n_nodes=50", "eigen", "--alpha", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweeps_write_one_row_per_value() {
    let tmp = TempDir::new().unwrap();
    let stdout = ok(
        tmp.path(),
        &["--set", "n_nodes=41", "--workers", "2", "sweep-sigma", "--count", "9", "--horizon", "40"],
    );
    let csv = read(tmp.path(), "sweep.csv");
    assert_eq!(header(&csv), "param,entry_time,held,washout_time");
    let lines: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(lines.len(), 9);
    assert_eq!(lines[0].split(',').next().unwrap().parse::<f64>().unwrap(), 3.5);
    for line in &lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 4);
        assert!(fields[2] == "true" || fields[2] == "false");
        assert_eq!(fields[1].is_empty(), fields[2] == "false");
    }
    let best = stdout.lines().find(|l| l.starts_with("best,")).unwrap();
    assert_eq!(best.split(',').count(), 3);

    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["--set", "n_nodes=21", "sweep-u", "--count", "7", "--horizon", "5"]);
    assert_eq!(read(tmp.path(), "sweep.csv").lines().count(), 8);
    assert_eq!(manifest(tmp.path())["config"]["sweep_max"], 8.0);
}

#[test]
fn refinement_adds_rows() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &[
            "--set", "n_nodes=21", "sweep-sigma", "--count", "6", "--horizon", "40",
            "--refine-width", "2", "--refine-count", "5",
        ],
    );
    let rows = read(tmp.path(), "sweep.csv").lines().count() - 1;
    assert!(rows > 6 && rows <= 11, "{rows} rows");
}

#[test]
fn alpha_study_writes_series_per_rate() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["--set", "n_nodes=21", "alpha-study", "--alphas", "0,0.01", "--horizon", "1"]);
    for name in ["k_vs_t_alpha_0.csv", "k_vs_t_alpha_0.01.csv"] {
        let csv = read(tmp.path(), name);
        assert_eq!(header(&csv), "t,K");
        assert_eq!(data_rows(&csv).len(), 101);
    }
    let joint = read(tmp.path(), "alpha_study.csv");
    assert_eq!(header(&joint), "t,K_alpha_0,K_alpha_0.01");

    let empty = chemostat(tmp.path(), &["alpha-study"]);
    assert_eq!(empty.status.code(), Some(2));
}

#[test]
fn manifest_rerun_reproduces_outputs() {
    let tmp = TempDir::new().unwrap();
    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    ok(&first, &["--set", "n_nodes=31", "--set", "alpha=0.002", "simulate", "--horizon", "2"]);
    let m = first.join("manifest.json");
    ok(&second, &["--config", m.to_str().unwrap(), "simulate"]);
    for name in ["trajectory.csv", "f_2.csv", "f_1.csv"] {
        assert_eq!(read(&first, name), read(&second, name), "{name}");
    }
    assert_eq!(manifest(&first)["config"], manifest(&second)["config"]);
}

#[test]
fn output_ignores_locale() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&a, &["--set", "n_nodes=21", "simulate", "--horizon", "0.5"]);
    let out = Command::new(env!("CARGO_BIN_EXE_chemostat"))
        .env("LC_ALL", "de_DE.UTF-8")
        .env("LANG", "fr_FR.UTF-8")
        .args(["--out", b.to_str().unwrap(), "--set", "n_nodes=21", "simulate", "--horizon", "0.5"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = read(&b, "trajectory.csv");
    assert_eq!(read(&a, "trajectory.csv"), text);
    assert!(text.lines().skip(1).all(|l| l.split(',').count() == 5));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let tmp = TempDir::new().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = chemostat(&blocker.join("sub"), &["--set", "n_nodes=11", "simulate", "--horizon", "0.1"]);
    assert_eq!(out.status.code(), Some(1));
}
