use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qps(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qps"))
        .args(args)
        .env_remove("QPS_COST_MODEL")
        .output()
        .expect("run qps")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad json ({e}): {}", stdout(o)))
}

#[test]
fn demo_human() {
    let o = qps(&["demo"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("0.552988, 0.674065, 0.489736"), "{text}");
    assert!(text.contains("0.670075"));
}

#[test]
fn demo_json_schema() {
    let o = qps(&["demo", "--output", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    for key in [
        "n",
        "solution",
        "reference",
        "fidelity",
        "success_probability",
        "resources",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["n"], 2);
    assert_eq!(v["resources"]["qubits"], 6);
    let sol: Vec<f64> = serde_json::from_value(v["solution"].clone()).unwrap();
    for (a, e) in sol.iter().zip([0.552987, 0.674065, 0.489736]) {
        assert!((a - e).abs() <= 1e-6);
    }
}

#[test]
fn demo_is_deterministic() {
    assert_eq!(
        stdout(&qps(&["demo", "--output", "json"])),
        stdout(&qps(&["demo", "--output", "json"]))
    );
}

#[test]
fn demo_parallel_rejected() {
    let o = qps(&["demo", "--mode", "parallel"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n >= 3"));
}

#[test]
fn solve_preset_sin() {
    let o = qps(&["solve", "--n", "4", "--preset", "sin", "--output", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert!(v["fidelity"].as_f64().unwrap() >= 1.0 - 1e-10);
    assert_eq!(v["solution"].as_array().unwrap().len(), 15);
    assert_eq!(v["config"]["source"], "preset:sin");
}

#[test]
fn solve_parallel_and_semantic() {
    for args in [
        ["solve", "--n", "3", "--mode", "parallel", "--output", "json"],
        ["solve", "--n", "3", "--ry", "semantic", "--output", "json"],
    ] {
        let o = qps(&args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(json(&o)["fidelity"].as_f64().unwrap() >= 1.0 - 1e-10);
    }
}

#[test]
fn solve_csv_is_one_value_per_line() {
    let o = qps(&["solve", "--n", "2", "--b", "0.7,0.5,0.5", "--output", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<f64> = stdout(&o).lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(lines.len(), 3);
}

#[test]
fn solve_input_errors() {
    let zero = qps(&["solve", "--n", "2", "--b", "0,0,0"]);
    assert_eq!(zero.status.code(), Some(2));
    assert!(stderr(&zero).contains("zero right-hand side"));

    let missing = qps(&["solve", "--n", "2", "--file", "missing.csv"]);
    assert_eq!(missing.status.code(), Some(3));
    assert!(stderr(&missing).contains("missing.csv"));

    let short = qps(&["solve", "--n", "3", "--b", "1,2,3"]);
    assert_eq!(short.status.code(), Some(2));
    assert!(stderr(&short).contains("needs 7"));

    let junk = qps(&["solve", "--n", "2", "--b", "1,x,3"]);
    assert_eq!(junk.status.code(), Some(2));
    assert!(stderr(&junk).contains("not a number"));

    let big = qps(&["solve", "--n", "7"]);
    assert_eq!(big.status.code(), Some(2));

    let both = qps(&["solve", "--n", "2", "--preset", "sin", "--b", "1,2,3"]);
    assert_eq!(both.status.code(), Some(2));
}

#[test]
fn solve_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.csv");
    std::fs::write(&path, "1.0\n-2.5\n0.25\n").unwrap();
    let o = qps(&[
        "solve",
        "--n",
        "2",
        "--file",
        path.to_str().unwrap(),
        "--output",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json(&o)["config"]["b"], serde_json::json!([1.0, -2.5, 0.25]));
}

#[test]
fn json_round_trip_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let first = qps(&[
        "solve", "--n", "4", "--seed", "17", "--mode", "parallel", "--output", "json",
    ]);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let path = dir.path().join("run.json");
    std::fs::write(&path, &first.stdout).unwrap();
    let second = qps(&["solve", "--config", path.to_str().unwrap(), "--output", "json"]);
    assert_eq!(second.status.code(), Some(0), "{}", stderr(&second));
    let (a, b) = (json(&first), json(&second));
    let bits = |v: &Value| -> Vec<u64> {
        v["solution"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap().to_bits())
            .collect()
    };
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(a["config"], b["config"]);
}

#[test]
fn cost_model_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cost.json");
    std::fs::write(&path, r#"{"block_coefficient": 0}"#).unwrap();
    let run = |env: Option<&Path>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_qps"));
        cmd.args(["report", "--n", "3"]);
        match env {
            Some(p) => cmd.env("QPS_COST_MODEL", p),
            None => cmd.env_remove("QPS_COST_MODEL"),
        };
        cmd.output().unwrap()
    };
    let base = json(&run(None))["elementary_gates"].as_u64().unwrap();
    let cheap = json(&run(Some(&path)))["elementary_gates"].as_u64().unwrap();
    // Two 3-qubit BC blocks at 2 * 3^2 each.
    assert_eq!(base - cheap, 36);

    std::fs::write(&path, r#"{"bogus": 1}"#).unwrap();
    assert_eq!(run(Some(&path)).status.code(), Some(2));
    assert_eq!(run(Some(&dir.path().join("none.json"))).status.code(), Some(3));
}

#[test]
fn report_n2_and_n15() {
    let v = json(&qps(&["report", "--n", "2"]));
    assert_eq!(v["qubits"], 6);
    let gates = v["elementary_gates"].as_u64().unwrap();
    assert!((45..=180).contains(&gates), "{gates}");

    let serial = json(&qps(&["report", "--n", "15"]));
    assert_eq!(serial["qubits"], 45);
    assert_eq!(serial["estimates"]["qubits_3n_plus_1"], 46);
    assert_eq!(serial["reference_depth"], 8000);
    assert_eq!(serial["within_factor_two"], true);
    let parallel = json(&qps(&["report", "--n", "15", "--mode", "parallel"]));
    assert_eq!(parallel["qubits"], 58);
    assert_eq!(parallel["reference_depth"], 1800);
    assert_eq!(parallel["within_factor_two"], true);
    assert!(parallel["depth_serial"].as_u64() < serial["depth_serial"].as_u64());

    assert_eq!(qps(&["report", "--n", "16"]).status.code(), Some(2));
}

#[test]
fn identities_table() {
    let o = qps(&["identities", "--n-max", "12", "--output", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = json(&o);
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 12);
    assert!(rows[0]["sine_formula_residual"].as_f64().unwrap() <= 1e-15);
    assert!(rows[0]["inversion_max_relative_error"].is_null());
    assert!(rows[11]["sine_formula_residual"].as_f64().unwrap() <= 1e-9);
    for r in &rows[1..] {
        assert!(r["inversion_max_relative_error"].as_f64().unwrap() <= 1e-12);
    }
    assert_eq!(qps(&["identities", "--n-max", "15"]).status.code(), Some(2));
}

#[test]
fn verify_default_passes() {
    let o = qps(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let text = stdout(&o);
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
    assert!(text.contains("equivalence/serial-parallel"));
}

#[test]
fn verify_detects_injected_fault() {
    let o = qps(&[
        "verify",
        "--n-max",
        "3",
        "--samples",
        "2",
        "--inject-fault",
        "--output",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).lines().any(|l| l.contains(",false,")));
}
