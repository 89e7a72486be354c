use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_liptest"))
}

fn run(args: &[&str]) -> (i32, String, Value) {
    let out: Output = bin().args(args).output().expect("binary runs");
    let stdout = String::from_utf8(out.stdout).expect("utf-8");
    let doc: Value = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap_or(-1), stdout, doc)
}

fn schema() -> jsonschema::Validator {
    let text = include_str!("../schema/report.schema.json");
    let schema: Value = serde_json::from_str(text).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_valid(doc: &Value) {
    let v = schema();
    let errors: Vec<String> = v.iter_errors(doc).map(|e| format!("{e} at {}", e.instance_path)).collect();
    assert!(errors.is_empty(), "schema violations: {errors:#?}\n{doc:#}");
}

const HAMMING: &[&str] = &[
    "test-lipschitz", "--dim", "4", "--function", "builtin:hamming-weight", "--dist", "uniform",
    "--epsilon", "0.3", "--omega", "0.1", "--delta", "0.01", "--seed", "7",
];

#[test]
fn lipschitz_builtin_exits_zero() {
    let (code, _, doc) = run(HAMMING);
    assert_eq!(code, 0);
    assert_eq!(doc["report"]["verdict"], "YES");
    assert_eq!(doc["config"]["seed"], 7);
    assert_eq!(doc["config"]["mode"], "grid");
    assert_valid(&doc);
    let mut broken = doc.clone();
    broken["report"]["verdict"] = "MAYBE".into();
    assert!(!schema().is_valid(&broken));
}

#[test]
fn far_builtin_exits_one_with_witness() {
    let (code, _, doc) = run(&[
        "test-lipschitz", "--dim", "4", "--function", "builtin:scaled-dictator?k=4",
        "--epsilon", "0.3", "--omega", "0.1", "--delta", "0.01", "--seed", "1",
    ]);
    assert_eq!(code, 1);
    assert_eq!(doc["report"]["verdict"], "NO");
    assert!(doc["report"]["witness"]["gap"].as_f64().unwrap() > 1.0);
    assert_valid(&doc);
}

#[test]
fn randomized_response_audit_exits_one() {
    let (code, _, doc) = run(&[
        "test-privacy", "--mech", "builtin:randomized_response?q=0.25", "--alpha", "1.0",
        "--beta", "0.5", "--gamma", "0.1", "--seed", "7",
    ]);
    assert_eq!(code, 1);
    let ratio = doc["report"]["witness"]["ratio"].as_f64().unwrap();
    assert!((ratio - 3.0).abs() < 1e-9);
    assert_eq!(doc["config"]["delta"], 0.05);
    assert_valid(&doc);
}

#[test]
fn replay_is_byte_identical() {
    let (_, a, _) = run(HAMMING);
    let (_, b, _) = run(HAMMING);
    assert_eq!(a, b);
    let args = [
        "test-privacy", "--mech", "builtin:truncated_geometric?alpha0=0.7&d=3", "--alpha", "0.7",
        "--beta", "0.9", "--gamma", "0.1", "--seed", "99", "--threads", "2",
    ];
    let (code, a, _) = run(&args);
    let (_, b, _) = run(&args);
    assert_eq!(code, 0);
    assert_eq!(a, b);
}

#[test]
fn echoed_config_replays() {
    // No seed: one is drawn and echoed; feeding the echo back reproduces the run.
    let (_, first, doc) = run(&[
        "test-lipschitz", "--dim", "3", "--function", "builtin:random-lipschitz?seed=4",
        "--dist", "[0.2,0.5,0.7]", "--epsilon", "0.9", "--omega", "0.2", "--delta", "0.05",
    ]);
    let c = &doc["config"];
    let dist = c["dist"].to_string();
    let seed = c["seed"].to_string();
    let (_, second, _) = run(&[
        "test-lipschitz", "--dim", "3", "--function", c["function"].as_str().unwrap(),
        "--dist", &dist, "--epsilon", "0.9", "--omega", "0.2", "--delta", "0.05",
        "--mode", c["mode"].as_str().unwrap(), "--seed", &seed,
    ]);
    assert_eq!(first, second);
}

#[test]
fn files_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.json");
    std::fs::write(&f, r#"{"d": 2, "delta": 0.5, "values": [0, 2, 0, 2]}"#).unwrap();
    let p = dir.path().join("p.json");
    std::fs::write(&p, "[0.5, 0.5]").unwrap();
    let m = dir.path().join("m.json");
    std::fs::write(&m, r#"{"outputs": ["a", "b"], "table": {"0": [0.75, 0.25], "1": [0.25, 0.75]}}"#).unwrap();

    let (code, _, doc) = run(&[
        "oracle-distance", "--function", f.to_str().unwrap(), "--dist", p.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(doc["report"]["certificate"]["distance"], 0.5);
    assert_eq!(doc["report"]["verified"], true);
    assert_valid(&doc);

    let (code, _, doc) = run(&[
        "test-lipschitz", "--function", f.to_str().unwrap(), "--epsilon", "0.9", "--omega", "0.1",
        "--delta", "0.1", "--seed", "3",
    ]);
    assert_eq!(code, 1);
    assert_valid(&doc);

    let (code, _, doc) = run(&[
        "privgen", "--mech", m.to_str().unwrap(), "--dataset", "1", "--alpha", "1.2", "--beta", "0.5",
        "--gamma", "0.1", "--delta", "0.05", "--seed", "4",
    ]);
    assert_eq!(code, 0);
    assert!(doc["report"]["release"]["output"].is_string());
    assert_eq!(doc["config"]["dataset"], "1");
    assert_valid(&doc);

    let (code, _, doc) = run(&[
        "privgen", "--mech", m.to_str().unwrap(), "--dataset", "1", "--alpha", "1.0", "--beta", "0.5",
        "--gamma", "0.1", "--seed", "4",
    ]);
    assert_eq!(code, 1);
    assert_eq!(doc["report"]["release"], "failure");
    assert_valid(&doc);
}

#[test]
fn configuration_errors_exit_two() {
    let (code, _, doc) = run(&[
        "test-lipschitz", "--dim", "4", "--function", "builtin:hamming-weight",
        "--epsilon", "0.1", "--omega", "0.1", "--delta", "0.01", "--seed", "1",
    ]);
    assert_eq!(code, 2);
    assert!(doc["error"].as_str().unwrap().contains("epsilon_prime <= d^2 * delta"));
    assert_valid(&doc);

    for args in [
        vec!["test-lipschitz", "--function", "builtin:nope", "--dim", "2", "--epsilon", "0.5", "--omega", "0.1", "--delta", "0.1"],
        vec!["test-lipschitz", "--function", "/no/such/file.json", "--epsilon", "0.5", "--omega", "0.1", "--delta", "0.1"],
        vec!["test-lipschitz", "--function", "builtin:hamming-weight", "--dim", "2", "--epsilon", "0.5", "--omega", "0.1", "--delta", "0.3"],
        vec!["test-privacy", "--mech", "builtin:randomized_response", "--alpha", "1", "--beta", "0.5", "--gamma", "0.1", "--dist", "[0.5, 0.5]"],
        vec!["privgen", "--mech", "builtin:randomized_response", "--dataset", "01x", "--alpha", "1", "--beta", "0.5", "--gamma", "0.1"],
        vec!["verify-all", "--scale", "0"],
        vec!["frobnicate"],
        vec!["test-lipschitz", "--epsilon", "0.5"],
    ] {
        let (code, _, _) = run(&args);
        assert_eq!(code, 2, "{args:?}");
    }
}

#[test]
fn verify_repair_passes_and_fault_is_caught() {
    let (code, _, doc) = run(&["verify-repair", "--seed", "5", "--scale", "0.05"]);
    assert_eq!(code, 0);
    let report = &doc["report"];
    assert_eq!(report["all_passed"], true);
    assert_eq!(report["suites_run"], report["results"].as_array().unwrap().len());
    assert_valid(&doc);

    let (code, _, doc) = run(&["verify-repair", "--seed", "5", "--scale", "0.05", "--fault", "flip-strictness"]);
    assert_eq!(code, 1);
    let failed: Vec<&str> = doc["report"]["results"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["passed"] == false)
        .map(|r| r["name"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"rounding-safety"), "{failed:?}");
}

#[test]
fn verify_all_registers_every_suite() {
    let (code, _, doc) = run(&["verify-all", "--seed", "2", "--scale", "0.01"]);
    let report = &doc["report"];
    assert_eq!(report["suites_registered"], liptest::verify::SUITES.len());
    assert_eq!(report["suites_run"], liptest::verify::SUITES.len());
    let passed = report["passed"].as_u64().unwrap() + report["failed"].as_u64().unwrap();
    assert_eq!(passed as usize, liptest::verify::SUITES.len());
    assert_eq!(code, if report["all_passed"] == true { 0 } else { 1 });
    assert_valid(&doc);
}
