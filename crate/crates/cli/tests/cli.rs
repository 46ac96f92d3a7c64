use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sexratio"));
    c.env_remove("SEXRATIO_OUT");
    c
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SHORT: [&str; 4] = ["--set", "config.horizon=12", "--set", "measure={\"from\":2,\"to\":12}"];

fn short_run(dir: &Path, out: &str, seed: &str, reps: &str) -> Output {
    let mut args = vec!["run", "--scenario", "baseline_peace", "--seed", seed, "--replicates", reps, "--out", out, "-q"];
    args.extend(SHORT);
    run_in(dir, &args)
}

fn summary(dir: &Path) -> Value {
    let text = fs::read_to_string(dir.join("baseline_peace_seed7_summary.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn run_writes_summary_with_ci() {
    let tmp = tempfile::tempdir().unwrap();
    let o = short_run(tmp.path(), "out", "7", "8");
    assert!(o.status.success(), "{}", stderr(&o));
    let s = summary(&tmp.path().join("out"));
    let sr = &s["sr_birth"];
    assert!(sr["mean"].as_f64().unwrap() > 80.0);
    assert!(sr["half_width"].as_f64().unwrap() > 0.0);
    assert_eq!(sr["n"], 8);
    // fully resolved configuration is echoed
    assert!(s["config"]["config"]["hazard"]["male"]["fetal"].is_number());
    for kind in ["trajectory.csv", "profiles.csv", "sr_birth.csv", "birth_order.csv", "quality.csv", "manifest.json"] {
        assert!(tmp.path().join("out").join(format!("baseline_peace_seed7_{kind}")).exists(), "{kind}");
    }
}

#[test]
fn missing_seed_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in(tmp.path(), &["run", "--scenario", "baseline_peace"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("reproducible"), "{}", stderr(&o));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn repeated_invocation_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(short_run(tmp.path(), "a", "7", "3").status.success());
    assert!(short_run(tmp.path(), "b", "7", "3").status.success());
    let mut names: Vec<_> = fs::read_dir(tmp.path().join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 6);
    for n in names {
        let a = fs::read(tmp.path().join("a").join(&n)).unwrap();
        let b = fs::read(tmp.path().join("b").join(&n)).unwrap();
        assert!(a == b, "{n:?} differs");
    }
}

#[test]
fn different_seed_changes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(short_run(tmp.path(), "a", "7", "2").status.success());
    assert!(short_run(tmp.path(), "b", "8", "2").status.success());
    let a = fs::read(tmp.path().join("a/baseline_peace_seed7_sr_birth.csv")).unwrap();
    let b = fs::read(tmp.path().join("b/baseline_peace_seed8_sr_birth.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn writes_only_inside_output_directory() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(short_run(tmp.path(), "only/here", "7", "2").status.success());
    let top: Vec<_> = fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(top, vec!["only"]);
    let leftovers = fs::read_dir(tmp.path().join("only/here")).unwrap().filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with('.')).count();
    assert_eq!(leftovers, 0, "staging files left behind");
}

#[test]
fn output_directory_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["run", "--scenario", "baseline_peace", "--seed", "7", "--replicates", "2", "-q"];
    args.extend(SHORT);
    let o = bin().current_dir(tmp.path()).env("SEXRATIO_OUT", "from_env").args(&args).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(tmp.path().join("from_env/baseline_peace_seed7_summary.json").exists());
}

#[test]
fn json_only_format() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["run", "--scenario", "baseline_peace", "--seed", "7", "--replicates", "2", "--format", "json", "--out", "o", "-q"];
    args.extend(SHORT);
    assert!(run_in(tmp.path(), &args).status.success());
    let csv = fs::read_dir(tmp.path().join("o")).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv")).count();
    assert_eq!(csv, 0);
}

#[test]
fn violated_invariant_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in(tmp.path(), &["run", "--scenario", "baseline_peace", "--seed", "1", "--set", "config.hazard.female.quality_exponent=0.9"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("quality_exponent") || stderr(&o).contains("kappa"), "{}", stderr(&o));
}

#[test]
fn unknown_scenario_lists_catalog() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in(tmp.path(), &["run", "--scenario", "nope", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("baseline_peace"), "{}", stderr(&o));
}

#[test]
fn config_file_parse_error_has_line() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.toml"), "name = \"x\"\n[config\n").unwrap();
    let o = run_in(tmp.path(), &["run", "--config", "bad.toml", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn extinction_exits_with_three_and_keeps_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in(
        tmp.path(),
        &[
            "run",
            "--scenario",
            "baseline_peace",
            "--seed",
            "1",
            "--replicates",
            "2",
            "--out",
            "o",
            "--set",
            "config.initial.size=40",
            "--set",
            "config.reproduction.carrying_capacity=40",
            "--set",
            "config.hazard.male.bands=[{\"start\":0,\"rate\":3}]",
            "--set",
            "config.hazard.female.bands=[{\"start\":0,\"rate\":3}]",
            "--set",
            "config.horizon=20",
            "-q",
        ],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("extinct"));
    assert!(tmp.path().join("o/baseline_peace_seed1_summary.json").exists());
}

#[test]
fn sweep_empty_grid_is_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in(tmp.path(), &["sweep", "--scenario", "baseline_peace", "--seed", "1", "--param", "config.environment.harshness", "--grid="]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn sweep_unknown_parameter_is_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in(tmp.path(), &["sweep", "--scenario", "baseline_peace", "--seed", "1", "--param", "config.nope", "--grid", "1"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn single_cell_sweep_matches_run() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(short_run(tmp.path(), "r", "7", "3").status.success());
    let mut args = vec!["sweep", "--scenario", "baseline_peace", "--seed", "7", "--replicates", "3", "--out", "s", "--param", "config.environment.harshness", "--grid", "0.4", "-q"];
    args.extend(SHORT);
    let o = run_in(tmp.path(), &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let run = summary(&tmp.path().join("r"));
    let sw: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("s/baseline_peace_seed7_sweep_config_environment_harshness.json")).unwrap()).unwrap();
    let row = &sw["rows"][0];
    for key in ["sr_birth", "parity_age", "quality_parity_age"] {
        assert_eq!(row[key], run[key], "{key}");
    }
    let csv = fs::read_to_string(tmp.path().join("s/baseline_peace_seed7_sweep_config_environment_harshness.csv")).unwrap();
    assert!(csv.starts_with("parameter,value,sr_birth,sr_birth_lower,sr_birth_upper,parity_age"));
}

#[test]
fn race_at_zero_drift_has_no_extinctions() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in(tmp.path(), &["race", "--scenario", "tracking_race", "--seed", "3", "--replicates", "10", "--drift", "0", "--out", "o", "-q"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("o/tracking_race_seed3_race.json")).unwrap()).unwrap();
    assert_eq!(r["rows"][0]["extinct_sexual"], 0);
    assert_eq!(r["rows"][0]["extinct_asexual"], 0);
}

#[test]
fn race_in_band_flags_sexual_advantage() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in(tmp.path(), &["race", "--scenario", "tracking_race", "--seed", "5", "--replicates", "60", "--drift", "0.08", "--out", "o", "-q"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("o/tracking_race_seed5_race.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert!(row.ends_with(",true"), "{csv}");
}

#[test]
fn race_arm_mismatch_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("r.toml"), "base = \"tracking_race\"\n[race.asexual]\nmode = \"asexual\"\nmutation = 0.1\n").unwrap();
    let o = run_in(tmp.path(), &["race", "--config", "r.toml", "--seed", "1", "--replicates", "2", "--drift", "0"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("mutation"), "{}", stderr(&o));
}

#[test]
fn calibrate_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in(
        tmp.path(),
        &[
            "calibrate",
            "--scenario",
            "baseline_peace",
            "--seed",
            "2",
            "--budget",
            "6",
            "--replicates",
            "2",
            "--out",
            "c",
            "--set",
            "config.horizon=8",
            "--set",
            "targets=[{\"from\":2,\"to\":8,\"value\":105}]",
            "-q",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let r: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("c/baseline_peace_seed2_calibration.json")).unwrap()).unwrap();
    assert!(r["evaluations"].as_u64().unwrap() <= 6);
    let p = r["params"][0]["value"].as_f64().unwrap();
    assert!((0.55..=0.7).contains(&p));
    assert!(tmp.path().join("c/baseline_peace_seed2_fitted.toml").exists());
}

#[test]
fn report_verify_detects_tampering() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(short_run(tmp.path(), "o", "7", "2").status.success());
    let o = run_in(tmp.path(), &["report", "--verify", "o"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("identical baseline_peace_seed7_summary.json"));
    assert!(!tmp.path().join("o/.verify").exists());

    let path = tmp.path().join("o/baseline_peace_seed7_sr_birth.csv");
    let mut text = fs::read_to_string(&path).unwrap();
    text.push_str("99,0,1,1,100\r\n");
    fs::write(&path, text).unwrap();
    let o = run_in(tmp.path(), &["report", "--verify", "o"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("DIFFERS baseline_peace_seed7_sr_birth.csv"));
}
