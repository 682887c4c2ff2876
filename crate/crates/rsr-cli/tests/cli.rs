use std::path::PathBuf;
use std::process::{Command, Output};

fn rsr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsr")).args(args).arg("-q").output().unwrap()
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../rsr-core/data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(rsr(&["fit", "--bogus"]).status.code(), Some(1));
    assert_eq!(rsr(&["fit", "--preset", "sat"]).status.code(), Some(1));
    let o = rsr(&["fit", "--data", &fixture("sat_fixture.csv"), "--preset", "sat", "--model", "car"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown model"));
    assert_eq!(rsr(&["--help"]).status.code(), Some(0));
}

#[test]
fn dimension_mismatch_is_reported() {
    let o = rsr(&["fit", "--data", &fixture("sat_fixture.csv"), "--preset", "sat", "--graph", "slovenia"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("48 rows"));
}

#[test]
fn fit_writes_outputs_and_flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, "{\"command\": \"fit\", \"model\": \"rhz\", \"iters\": 900, \"preset\": \"sat\"}").unwrap();
    let out = tmp.path().join("o");
    let o = rsr(&[
        "fit",
        "--config",
        cfg.to_str().unwrap(),
        "--data",
        &fixture("sat_fixture.csv"),
        "--iters",
        "1500",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let written: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(written["iters"], 1500);
    assert_eq!(written["model"], "rhz");
    assert_eq!(written["burnin"], 150);
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.starts_with("coefficient,mean,variance,ci_lo,ci_hi,median,mcse"));
    assert!(summary.contains("percent_sq"));
    assert!(out.join("fit.json").exists() && out.join("diagnostics.csv").exists());
}

#[test]
fn config_for_another_command_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, "{\"command\": \"simulate\"}").unwrap();
    assert_eq!(rsr(&["fit", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
    std::fs::write(&cfg, "{\"itres\": 3}").unwrap();
    assert_eq!(rsr(&["fit", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn summarize_reproduces_fit_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let fit = tmp.path().join("fit");
    let o = rsr(&["fit", "--data", &fixture("sat_fixture.csv"), "--preset", "sat", "--iters", "2000", "--save-chain", "--out", fit.to_str().unwrap()]);
    assert!(o.status.success());
    let sum = tmp.path().join("sum");
    let chain = fit.join("chain.csv");
    let o = rsr(&["summarize", "--chain", chain.to_str().unwrap(), "--out", sum.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let a = std::fs::read_to_string(fit.join("summary.csv")).unwrap();
    let b = std::fs::read_to_string(sum.join("summary.csv")).unwrap();
    // the chain CSV stores shortest round-trip decimals, so the summaries agree exactly
    assert_eq!(a, b);
}

#[test]
fn verify_minimal_run_is_fast_and_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let t = std::time::Instant::now();
    let o = rsr(&["verify-theorems", "--instances", "1", "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(t.elapsed().as_secs() < 60);
    let csv = std::fs::read_to_string(tmp.path().join("verification.csv")).unwrap();
    assert!(csv.contains("thm4_negative_control"));
}
