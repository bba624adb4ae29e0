use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hseom_cli::config::{Experiment, RunConfig};
use hseom_cli::run::{check_resources, estimate, preflight, RunOptions};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> RunConfig {
    RunConfig::parse(&std::fs::read_to_string(configs().join(name)).unwrap()).unwrap()
}

fn hseom(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hseom"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(path) = config {
        cmd.arg("--config").arg(path);
    }
    cmd.output().expect("spawn hseom")
}

fn error_record(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("error.json")).unwrap()).unwrap()
}

#[test]
fn shipped_configs_parse_and_round_trip() {
    let mut count = 0;
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let config = RunConfig::parse(&std::fs::read_to_string(&path).unwrap()).unwrap();
            let again = RunConfig::parse(&config.to_toml()).unwrap();
            assert_eq!(config, again, "{}", path.display());
            estimate(&config).unwrap();
            count += 1;
        }
    }
    assert!(count >= 10);
}

#[test]
fn preflight_counts_wave_functions() {
    let ten_qubit = estimate(&load("anneal_ten_qubit.toml")).unwrap();
    assert_eq!((ten_qubit.dim, ten_qubit.awf_count), (1024, 56));

    let exponential = load("respond_exponential.toml");
    let plan = estimate(&exponential).unwrap();
    assert_eq!(plan.awf_count, 91881);
    let refused = check_resources(&plan, &exponential, &RunOptions::default()).unwrap_err();
    assert_eq!(refused.exit_code(), 4);
    check_resources(&plan, &exponential, &RunOptions { full: true, ..Default::default() }).unwrap();

    let mut tight = load("respond_circular.toml");
    tight.hierarchy.budget_bytes = 1000;
    assert_eq!(preflight(&tight, &RunOptions::default()).unwrap_err().exit_code(), 4);
}

#[test]
fn respond_defaults_follow_the_bath() {
    let plan = estimate(&load("respond_circular.toml")).unwrap();
    assert_eq!(plan.experiment, Experiment::Respond);
    assert!((plan.dt - (0.05_f64 / 6.0).min(6.0 / 2000.0)).abs() < 1e-12);
    assert!((plan.t0 - 10.0 / (0.35 * 6.0)).abs() <= plan.dt);
    assert_eq!(plan.stride, 1);
}

#[test]
fn oversized_run_exits_with_resource_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = hseom(&["respond"], Some(&configs().join("respond_exponential.toml")), dir.path());
    assert_eq!(out.status.code(), Some(4));
    let record = error_record(dir.path());
    assert_eq!(record["kind"], "resource");
    assert_eq!(record["exit_code"], 4);
}

#[test]
fn bad_config_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "experiment = \"rdm\"\n[bath]\ncoupling = -1.0\n").unwrap();
    let out = hseom(&["rdm"], Some(&path), &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    let record = error_record(&dir.path().join("out"));
    assert_eq!(record["kind"], "config");
    assert!(record["message"].as_str().unwrap().contains("coupling"));

    std::fs::write(&path, "experiment = \"rdm\"\nunknown_key = 1\n").unwrap();
    let out = hseom(&["rdm"], Some(&path), &dir.path().join("out2"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_horizon_reports_initial_state() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zero.toml");
    std::fs::write(
        &path,
        "experiment = \"rdm\"\n[model]\nkind = \"spin-boson\"\nomega0 = 3.0\ninitial = \"excited\"\n\
         [bath]\nmodes = 4\n[hierarchy]\nlevels = 2\n[horizon]\nt = 0.0\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = hseom(&["rdm"], Some(&path), &out_dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(out_dir.join("populations.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 2, "{text}");
    let values: Vec<f64> = rows[1].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(values[0], 0.0);
    assert!((values[1] - 1.0).abs() < 1e-12 && values[2].abs() < 1e-12, "{values:?}");
}

#[test]
fn runs_write_csv_svg_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = hseom(&["anneal", "--deterministic"], Some(&configs().join("anneal_weak.toml")), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = std::fs::read_to_string(dir.path().join("populations.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 4);
    assert_eq!(csv.lines().count(), 102);
    let svg = std::fs::read_to_string(dir.path().join("populations.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), header.len() - 1);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["experiment"], "anneal");
    assert_eq!(manifest["plan"]["awf_count"], "21");
    assert!(manifest["outputs"].as_array().unwrap().iter().any(|f| f == "populations.svg"));
    let config = RunConfig::parse(manifest["config"].as_str().unwrap()).unwrap();
    assert_eq!(config, load("anneal_weak.toml"));
}

#[test]
fn bath_fit_matches_quadrature() {
    let dir = tempfile::tempdir().unwrap();
    let out = hseom(&["bath-fit"], Some(&configs().join("bath_fit_circular.toml")), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let coefficients = std::fs::read_to_string(dir.path().join("coefficients.csv")).unwrap();
    assert_eq!(coefficients.lines().count(), 21);
    assert!(dir.path().join("alpha.svg").exists());
}

#[test]
fn preflight_prints_the_plan() {
    let dir = tempfile::tempdir().unwrap();
    let out = hseom(&["preflight"], Some(&configs().join("respond_exponential.toml")), dir.path());
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stdout).contains("91881"));
    let out = hseom(&["preflight", "--full"], Some(&configs().join("respond_exponential.toml")), dir.path());
    assert!(out.status.success());
}
