use std::path::PathBuf;
use std::process::{Command, Output};

use nonlocality_cli::{execute, Report, RunConfig, EXIT_INPUT, EXIT_OK, EXIT_VERDICT};
use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonlocality"))
        .args(args)
        .env_remove("NONLOCALITY_TOL")
        .env_remove("NONLOCALITY_PROB_TOL")
        .output()
        .unwrap()
}

fn json(args: &[&str]) -> (i32, Report) {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let out = run(&all);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let report = serde_json::from_str(&stdout)
        .unwrap_or_else(|e| panic!("{e}: {stdout} {}", String::from_utf8_lossy(&out.stderr)));
    (out.status.code().unwrap(), report)
}

#[test]
fn superquantum_at_preset_angles() {
    let (code, r) = json(&["chsh", "--model", "superquantum", "--angles", "eq2"]);
    assert_eq!(code, i32::from(EXIT_OK));
    assert_eq!(r.results["result"]["value"], 4.0);
    assert_eq!(r.results["classification"], "superquantum");
}

#[test]
fn singlet_optimum_is_quantum_maximal() {
    let (code, r) = json(&["chsh", "--model", "singlet", "--optimize", "--expect", "quantum-maximal"]);
    assert_eq!(code, 0);
    let m = r.results["optimum"]["magnitude"].as_f64().unwrap();
    assert!((m - 2.0 * 2f64.sqrt()).abs() <= 1e-6);
}

#[test]
fn deterministic_table() {
    let (_, r) = json(&["chsh", "--deterministic", "all"]);
    let rows = r.results["strategies"].as_array().unwrap();
    assert_eq!(rows.len(), 16);
    assert_eq!(r.results["max_abs"], 2.0);
    assert_eq!(r.results["classification"], "classical");
}

#[test]
fn failed_expectation_exits_with_verdict_code() {
    let out = run(&["chsh", "--model", "singlet", "--angles", "tsirelson", "--expect", "classical"]);
    assert_eq!(out.status.code(), Some(i32::from(EXIT_VERDICT)));
}

#[test]
fn no_signalling_fixtures() {
    let (code, r) = json(&["nosig", "--builtin", "superquantum-eq2"]);
    assert_eq!(code, 0);
    assert_eq!(r.results[0]["report"]["max_deviation"], 0.0);

    let (code, r) = json(&["nosig", "--box", &fixture("signalling_box.json")]);
    assert_eq!(code, i32::from(EXIT_VERDICT));
    let report = &r.results[0]["report"];
    assert_eq!(report["max_deviation"], 0.5);
    assert_eq!(report["worst"]["party"], "alice");

    let (code, _) = json(&["nosig", "--box", &fixture("product_box.json")]);
    assert_eq!(code, 0);
    let (code, _) = json(&["nosig", "--all"]);
    assert_eq!(code, 0);
}

#[test]
fn jam_commands() {
    let (code, r) = json(&["jam", "--config", &fixture("canonical_1d.json")]);
    assert_eq!(code, 0);
    assert_eq!(r.results["binary"]["margin"], 0.5);

    let (code, r) = json(&["jam", "--a=-1,0", "--b", "1,0", "--j", "0,1.5"]);
    assert_eq!(code, i32::from(EXIT_VERDICT));
    assert_eq!(r.results["validation"]["valid"], false);

    let (_, r) = json(&["jam", "--latest", "--d", "1"]);
    assert!((r.results["time"].as_f64().unwrap() - 1.0).abs() <= 1e-6);
    assert_eq!(r.results["attained"], false);
    let (_, r) = json(&["jam", "--latest", "--d", "2"]);
    assert!(r.results["time"].as_f64().unwrap().abs() <= 1e-6);

    let (code, r) = json(&["jam", "--scenario", &fixture("scenario_acyclic.json")]);
    assert_eq!(code, 0);
    assert_eq!(r.results["loops"]["verdict"], "acyclic");
    let (code, r) = json(&["jam", "--scenario", &fixture("scenario_cycle.json")]);
    assert_eq!(code, i32::from(EXIT_VERDICT));
    assert_eq!(r.results["loops"]["path"], serde_json::json!([0, 1, 0]));

    let (code, r) = json(&["jam", "--builtin", "superquantum-eq2"]);
    assert_eq!(code, 0);
    assert_eq!(r.results["unary"]["max_deviation"], 0.0);
    assert_eq!(r.results["chsh_after"], 0.0);
}

#[test]
fn boost_commands() {
    let (_, r) = json(&["boost", "--event=-1,0", "--event", "0,0.5", "--v", "0.8"]);
    let t = &r.results["transformed"];
    assert!(t[0][1].as_f64().unwrap() > t[1][1].as_f64().unwrap());

    let (_, r) = json(&["boost", "--event", "0.3,0.7", "--v", "0"]);
    assert_eq!(r.results["transformed"], r.results["events"]);

    let (_, r) = json(&["boost", "--event=-1,0", "--event", "1,0", "--event", "0,0.5", "--enumerate"]);
    let orderings = r.results["orderings"].as_array().unwrap();
    // Events: 0 = a, 1 = b, 2 = j.
    let j_last = orderings.iter().any(|o| {
        let tiers = o["tiers"].as_array().unwrap();
        tiers.last().unwrap() == &serde_json::json!([2])
    });
    assert!(j_last);
    assert_eq!(r.seed, Some(0));

    let out = run(&["boost", "--event", "0,0", "--v", "1"]);
    assert_eq!(out.status.code(), Some(i32::from(EXIT_INPUT)));
}

#[test]
fn sampling_commands() {
    let (code, r) = json(&[
        "sample", "--builtin", "superquantum-eq2", "--n", "1000000", "--seed", "5", "--expect-chsh", "4",
    ]);
    assert_eq!(code, 0);
    assert_eq!(r.seed, Some(5));

    let (_, r) = json(&["sample", "--builtin", "perfect", "--n", "10", "--seed", "1"]);
    assert_eq!(r.results["sample"]["correlations"], serde_json::json!([[1.0, 1.0], [1.0, 1.0]]));

    let (_, r) = json(&["sample", "--builtin", "perfect", "--n", "10"]);
    assert!(r.seed.is_some(), "a generated seed is echoed");

    let out = run(&["sample", "--builtin", "perfect", "--n", "0"]);
    assert_eq!(out.status.code(), Some(i32::from(EXIT_INPUT)));
}

#[test]
fn same_seed_gives_identical_bytes() {
    let args = ["sample", "--model", "singlet", "--angles", "tsirelson", "--n", "5000", "--seed", "77", "--format", "json"];
    let first = run(&args).stdout;
    let second = run(&args).stdout;
    assert!(!first.is_empty());
    assert_eq!(first, second);
}

#[test]
fn report_config_reruns_the_same_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["run", &fixture("run_sample.json")]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let path = dir.path().join("again.json");
    std::fs::write(&path, serde_json::to_string(&report["config"]).unwrap()).unwrap();
    let again = run(&["run", path.to_str().unwrap()]);
    assert_eq!(again.stdout, out.stdout);
}

#[test]
fn reports_round_trip() {
    for args in [
        vec!["chsh", "--model", "singlet", "--angles", "tsirelson"],
        vec!["jam", "--latest", "--d", "3"],
        vec!["boost", "--event", "0,0,0", "--event", "2,0,0.5", "--enumerate", "--timing"],
    ] {
        let out = run(&[args.clone(), vec!["--format", "json"]].concat());
        let text = String::from_utf8(out.stdout).unwrap();
        let r: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::from_str::<Report>(&serde_json::to_string(&r).unwrap()).unwrap(), r);
        assert_eq!(serde_json::to_string_pretty(&r).unwrap() + "\n", text);
    }
}

#[test]
fn tolerances_come_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_nonlocality"))
        .args(["jam", "--latest", "--d", "1", "--format", "json"])
        .env("NONLOCALITY_TOL", "1e-6")
        .env("NONLOCALITY_PROB_TOL", "1e-10")
        .output()
        .unwrap();
    let r: Report = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r.config.tolerances.geometric, 1e-6);
    assert_eq!(r.config.tolerances.probability, 1e-10);
}

#[test]
fn csv_outputs_have_headers() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("curve.csv");
    let out = run(&["chsh", "--model", "singlet", "--curve", curve.to_str().unwrap(), "--points", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&curve).unwrap();
    assert_eq!(text.lines().next(), Some("theta,correlation"));
    assert_eq!(text.lines().count(), 4);

    let sweep = dir.path().join("sweep.csv");
    let out = run(&[
        "jam", "--config", &fixture("canonical_1d.json"), "--sweep", sweep.to_str().unwrap(),
        "--sweep-from", "0", "--sweep-to", "1.5", "--sweep-steps", "4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&sweep).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "jt,valid,margin,holds");
    assert_eq!(rows[1], "0.0,true,1.0,true");
    assert_eq!(rows[4], "1.5,false,-0.5,false");
}

#[test]
fn malformed_input_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"P\": [1, 2]}").unwrap();
    let out = run(&["nosig", "--box", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(i32::from(EXIT_INPUT)));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed JSON"));
    let out = run(&["chsh", "--model", "singlet", "--a", "7", "--a-prime", "0", "--b", "0", "--b-prime", "0"]);
    assert_eq!(out.status.code(), Some(i32::from(EXIT_INPUT)));
}

#[test]
fn library_and_binary_agree() {
    let cfg: RunConfig = serde_json::from_str(
        r#"{"command": "chsh", "model": "superquantum", "interpolant": "smoothstep", "angles": "eq2"}"#,
    )
    .unwrap();
    let lib = execute(cfg, false).unwrap();
    let (_, bin) = json(&["chsh", "--model", "superquantum", "--interpolant", "smoothstep", "--angles", "eq2"]);
    assert_eq!(lib.results, bin.results);
}
