use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gossip-est"));
    cmd.env_remove("GOSSIP_EST_OUT");
    cmd
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn quick_run(cfg: &str, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("run")
        .arg(config(cfg))
        .args(["--iterations", "2000", "--trials", "4", "--out"])
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn validate_accepts_the_consistency_config() {
    let out = bin().arg("validate").arg(config("consistency.toml")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("all assumptions satisfied"));
}

#[test]
fn validate_names_the_violated_condition() {
    let out = bin().arg("validate").arg(config("invalid_tau.toml")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("mixed time-scale condition"));
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(quick_run("consistency.toml", &a, &[]).status.success());
    assert!(quick_run("consistency.toml", &b, &[]).status.success());
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.iter().any(|n| n == "summary.json"));
    for name in names {
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn seed_flag_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(quick_run("edge_list.toml", &a, &[]).status.success());
    assert!(quick_run("edge_list.toml", &b, &["--seed", "77"]).status.success());
    let read = |p: &Path| fs::read_to_string(p.join("trial_00000.csv")).unwrap();
    assert_ne!(read(&a), read(&b));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from_env");
    let out = bin()
        .env("GOSSIP_EST_OUT", &target)
        .arg("run")
        .arg(config("edge_list.toml"))
        .args(["--iterations", "500", "--trials", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(target.join("aggregate.csv").exists());
    assert!(target.join("trial_00001.csv").exists());
}

#[test]
fn divergent_configs_need_allow_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let refused = quick_run("fading.toml", &dir.path().join("x"), &[]);
    assert_eq!(refused.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("fading exponent"));
    let allowed = quick_run("fading.toml", &dir.path().join("y"), &["--allow-invalid"]);
    assert_eq!(allowed.status.code(), Some(0));
}

#[test]
fn usage_and_runtime_errors_exit_2() {
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["run", "--bogus"]).output().unwrap().status.code(), Some(2));
    let missing = bin().arg("validate").arg("/nonexistent/config.toml").output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn analyze_reports_closed_form_quantities() {
    let out = bin().arg("analyze").arg(config("covariance.toml")).output().unwrap();
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // K = G⁻¹ with a twice the critical scale gives S_c = G⁻¹.
    let s_c = &report["asymptotic_covariance"]["s_c"];
    for (r, c, v) in [(0, 0, 2.0 / 3.0), (0, 1, -1.0 / 3.0), (1, 1, 2.0 / 3.0)] {
        assert!((s_c[r][c].as_f64().unwrap() - v).abs() < 1e-12);
    }
    assert!(report["quadratic_form_bound"]["c4"].as_f64().unwrap() > 0.0);
    assert!((report["critical_innovation_scale"].as_f64().unwrap() - 1.5).abs() < 1e-12);
}

#[test]
fn analyze_reports_unavailable_pieces_inline() {
    let out = bin().arg("analyze").arg(config("fading.toml")).output().unwrap();
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["asymptotic_covariance"]["error"].is_string());
    assert_eq!(report["violations"].as_array().unwrap().len(), 3);
}

#[test]
fn lemma_oracle_prints_one_row_per_setting() {
    let out = bin()
        .args(["lemma-oracle", "--iterations", "20000", "--trials", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    for line in &lines[1..] {
        assert_eq!(line.split(',').count(), 6);
        let scaled: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!(scaled > 0.0 && scaled < 0.1);
    }
}

#[test]
fn plot_writes_svg_charts() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().join("r");
    assert!(quick_run("consistency.toml", &results, &[]).status.success());
    let charts = dir.path().join("charts");
    let out = bin().arg("plot").arg(&results).arg("--out").arg(&charts).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["error.svg", "disagreement.svg", "gap.svg"] {
        let svg = fs::read_to_string(charts.join(name)).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("<polyline"));
    }
}

#[test]
fn plot_without_results_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bin().arg("plot").arg(dir.path()).output().unwrap().status.code(), Some(2));
}
