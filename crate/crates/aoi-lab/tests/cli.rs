//! CLI behavior: exit codes, config handling, output artifacts.

use std::path::Path;
use std::process::{Command, Output};

use aoi_lab::config::{ChannelSpec, RunConfig};
use aoi_lab::model::PhysicalParams;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aoi-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn CLI")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut full: Vec<&str> = args.to_vec();
    let out = dir.display().to_string();
    full.push("--out");
    full.push(&out);
    bin().args(&full).output().expect("spawn CLI")
}

#[test]
fn analytic_prints_never_give_up_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["analytic", "--beta", "87", "--pi", "0.65", "--scheme", "zero-error"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("139.8"), "stdout was: {text}");
    assert!(text.contains("100.00%"));
    assert!(dir.path().join("analytic.json").exists());
    assert!(dir.path().join("analytic.csv").exists());
}

#[test]
fn bad_flag_value_exits_2() {
    let out = run(&["analytic", "--scheme", "quantum"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("quantum"), "stderr was: {err}");
}

#[test]
fn unknown_config_key_exits_2_naming_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "d = 20\nwarp_factor = 9\n").unwrap();
    let out = run(&["analytic", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("warp_factor"), "stderr was: {err}");
}

#[test]
fn mixed_channel_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "beta = 87\nd = 20\n").unwrap();
    let out = run(&["analytic", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // the same mix straddling file and flags is also rejected
    std::fs::write(&cfg, "beta = 87\npi = 0.65\n").unwrap();
    let out = run(&["analytic", "--config", cfg.to_str().unwrap(), "--d", "20"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reference_config_file_drives_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(
        &cfg,
        "# reference link budget\nd = 20\nP = 1\neta = 0.5\nB = 1e-3\nnoise_dbm = -50\nr = 0.05\n\
         scheme = rand\ndelta = 0.1\nhorizon = 300\nreps = 2\nstop = successes\nseed = 3\n",
    )
    .unwrap();
    let out = run_in(dir.path(), &["simulate", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // the embedded config reloads to the expected resolved run
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("simulate.json")).unwrap())
            .unwrap();
    let cfg_back: RunConfig = serde_json::from_value(report["config"].clone()).unwrap();
    assert_eq!(cfg_back.channel, ChannelSpec::Physical(PhysicalParams::default()));
    assert_eq!(cfg_back.seed, 3);
    assert_eq!(cfg_back.reps, 2);
    assert_eq!(cfg_back.horizon, 300);
    assert_eq!(report["meta"]["seed"], 3);
}

#[test]
fn sweep_requires_physical_parameters() {
    let out = run(&["sweep", "--beta", "87", "--pi", "0.65"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("physical"), "stderr was: {err}");
}

#[test]
fn sweep_emits_schema_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["sweep", "--b-points", "3", "--scheme", "det", "--delta", "0.1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("capacity_sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "battery_j,beta,pi,scheme,delta,aoi_analytic,aoi_sim_mean,aoi_sim_ci_half"
    );
    assert_eq!(lines.count(), 3);
}

#[test]
fn tables_emit_reference_theory_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["tables", "--reps", "8", "--horizon", "1000", "--seed", "7"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("table1.csv")).unwrap();
    let first_row = csv.lines().nth(1).unwrap();
    assert!(first_row.contains("1425.6"), "row was: {first_row}");
    assert!(first_row.contains("1361.29"), "row was: {first_row}");
    let t2 = std::fs::read_to_string(dir.path().join("table2.csv")).unwrap();
    assert!(t2.starts_with(
        "battery_j,target_reliability,statuses_sent,statuses_received,empirical_reliability"
    ));
    assert_eq!(t2.lines().count(), 7);
}

#[test]
fn format_selection_limits_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["tradeoff", "--beta", "87", "--pi", "0.65", "--grid-points", "10", "--format", "csv"],
    );
    assert!(out.status.success());
    assert!(dir.path().join("tradeoff.csv").exists());
    assert!(!dir.path().join("tradeoff.json").exists());
}

#[test]
fn out_dir_env_var_is_default() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["analytic", "--beta", "87", "--pi", "0.65", "--scheme", "single-shot"])
        .env("AOI_LAB_OUT", dir.path())
        .output()
        .expect("spawn CLI");
    assert!(out.status.success());
    assert!(dir.path().join("analytic.json").exists());
}

#[test]
fn validate_passes() {
    let out = run(&["validate"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("all checks passed"));
    assert!(!text.contains("FAIL"));
}
