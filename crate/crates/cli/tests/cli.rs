use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name).display().to_string()
}

fn ergame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ergame"))
        .args(args)
        .env_remove("ERGAME_WORD_CAP")
        .output()
        .expect("run ergame")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p: PathBuf = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn verify_golden_profile() {
    let out = ergame(&["verify", &data("golden_game.json"), &data("dirac1_profile.json")]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["command"], "verify");
    assert_eq!(r["result"]["epsilon"], 0.0);
    assert_eq!(r["result"]["within_tolerance"], true);
    assert_eq!(r["result"]["multiplicity1"], false);
}

#[test]
fn wasserstein_identical_inputs() {
    let mu = data("uniform_bernoulli.json");
    let out = ergame(&["wasserstein", &mu, &mu, "--depth", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &report(&out)["result"];
    assert_eq!(r["lo"], 0.0);
    assert!((r["hi"].as_f64().unwrap() - 0.0625).abs() <= 1e-12);
    assert_eq!(r["markov"]["hi"], 0.0);
}

#[test]
fn thermodynamic_nash_converges() {
    let out = ergame(&["nash", &data("golden_game.json"), "--mode", "thermodynamic", "--tol", "1e-9"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["converged"], true);
    let runs = r["result"]["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 2);
    for run in runs {
        assert_eq!(run["converged"], true);
        assert!(run["eps1"].as_f64().unwrap() <= 1e-9);
        assert!(run["eps2"].as_f64().unwrap() <= 1e-9);
    }
}

#[test]
fn zerosum_and_common() {
    let out = ergame(&["zerosum", &data("matching_pennies.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert!(report(&out)["result"]["value"].as_f64().unwrap().abs() <= 1e-9);

    let out = ergame(&["common", &data("common_indicator.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert!((report(&out)["result"]["value"].as_f64().unwrap() - 1.0).abs() <= 1e-9);
}

#[test]
fn transport_diagonal() {
    let out = ergame(&["transport", "--a2", &data("diagonal_indicator.json"), "--mu", &data("uniform_bernoulli.json")]);
    assert_eq!(out.status.code(), Some(0));
    let r = &report(&out)["result"];
    assert!((r["value"].as_f64().unwrap() - 1.0).abs() <= 1e-9);
    assert!((r["benchmark"].as_f64().unwrap() - 0.5).abs() <= 1e-9);
}

#[test]
fn missing_file_exits_1() {
    let out = ergame(&["verify", "/nonexistent/game.json", &data("dirac0_profile.json")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{ not json");
    let out = ergame(&["verify", &bad, &data("dirac0_profile.json")]);
    assert_eq!(out.status.code(), Some(2));

    let improper = write(dir.path(), "mu.json", r#"{"d": 2, "order": 0, "pi": {"0": 0.7, "1": 0.7}}"#);
    let out = ergame(&["wasserstein", &improper, &data("uniform_bernoulli.json")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn nonconvergence_exits_3_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.json");
    let out = ergame(&[
        "nash",
        &data("matching_pennies.json"),
        "--max-iter",
        "5",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let r: Value = serde_json::from_slice(&std::fs::read(&out_path).unwrap()).unwrap();
    assert_eq!(r["converged"], false);
}

#[test]
fn trace_csv_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.json");
    let trace_path = dir.path().join("t.csv");
    let args = [
        "nash",
        &data("golden_game.json"),
        "--mode",
        "thermodynamic",
        "--random-starts",
        "2",
        "--seed",
        "3",
        "--out",
        out_path.to_str().unwrap(),
        "--trace-csv",
        trace_path.to_str().unwrap(),
    ];
    assert_eq!(ergame(&args).status.code(), Some(0));
    let (r1, t1) = (std::fs::read(&out_path).unwrap(), std::fs::read(&trace_path).unwrap());
    assert_eq!(ergame(&args).status.code(), Some(0));
    assert_eq!(std::fs::read(&out_path).unwrap(), r1);
    assert_eq!(std::fs::read(&trace_path).unwrap(), t1);

    let text = String::from_utf8(t1).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "run,step,w1_mu,w1_nu,payoff1,payoff2,eps1,eps2,multiplicity1,multiplicity2"
    );
    let runs: std::collections::BTreeSet<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(runs.len(), 4);
}

#[test]
fn word_cap_from_environment() {
    let mu = data("uniform_bernoulli.json");
    let out = Command::new(env!("CARGO_BIN_EXE_ergame"))
        .args(["wasserstein", &mu, &mu])
        .env("ERGAME_WORD_CAP", "16")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["config"]["w1_word_cap"], 16);
    assert_eq!(r["result"]["depth"], 4);
}
