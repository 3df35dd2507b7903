use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn qlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlab")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write_json(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn read(p: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn purify_descriptor() -> Value {
    json!({"kind": "nonlinear_purify", "dim": 2, "parameters": {}})
}

fn hadamard_descriptor() -> Value {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    json!({"kind": "unitary", "dim": 2, "parameters": {"matrix": {
        "rows": 2, "cols": 2, "entries": [[h, 0.0], [h, 0.0], [h, 0.0], [-h, 0.0]]
    }}})
}

#[test]
fn ic_build_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert_eq!(code(&qlab(&["ic", "build", "--dim", "2", "--seed", "7", "--out", s(&a)])), 0);
    assert_eq!(code(&qlab(&["ic", "build", "--dim", "2", "--seed", "7", "--out", s(&b)])), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let v = read(&a);
    assert_eq!(v["report"]["povm"]["effects"].as_array().unwrap().len(), 4);
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn ic_build_dimension_six() {
    let o = qlab(&["ic", "build", "--dim", "6", "--seed", "1"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["report"]["povm"]["effects"].as_array().unwrap().len(), 36);
    assert_eq!(v["report"]["gram_rank"], 36);
}

#[test]
fn degenerate_dimension_is_a_usage_error() {
    assert_eq!(code(&qlab(&["ic", "build", "--dim", "1", "--seed", "0"])), 64);
    assert_eq!(code(&qlab(&["ic", "build", "--dim", "2"])), 64);
}

#[test]
fn audit_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let u = write_json(dir.path(), "u.json", &hadamard_descriptor());
    let p = write_json(dir.path(), "p.json", &purify_descriptor());
    let base = ["map", "audit", "--dim", "2", "--trials", "10", "--seed", "3"];

    let o = qlab(&[&base[..], &["--map", s(&u)]].concat());
    assert_eq!(code(&o), 0);

    let out = dir.path().join("audit.json");
    let o = qlab(&[&base[..], &["--map", s(&p), "--include-witness", "--out", s(&out)]].concat());
    assert_eq!(code(&o), 1);
    let v = read(&out);
    assert_eq!(v["report"]["verdict"], "non-convex-linear");
    assert!(v["report"]["witness"]["gap"].as_f64().unwrap() > 0.1);
    // the canonical witness is checked after the random trials
    let probe = v["report"]["gaps"].as_array().unwrap().last().unwrap().as_f64().unwrap();
    assert!((probe - 2f64.sqrt() / 12.0).abs() < 1e-10);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(code(&qlab(&[&base[..], &["--map", s(&bad)]].concat())), 2);
}

#[test]
fn gpt_check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let u = write_json(dir.path(), "u.json", &hadamard_descriptor());
    let p = write_json(dir.path(), "p.json", &purify_descriptor());
    let args = ["gpt", "check", "--dim", "2", "--trials", "10", "--seed", "3", "--map"];
    assert_eq!(code(&qlab(&[&args[..], &[s(&u)]].concat())), 0);
    let o = qlab(&[&args[..], &[s(&p)]].concat());
    assert_eq!(code(&o), 1);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["report"]["ic_ref"], "ic-d2-seed3");
}

#[test]
fn scenario_run_reports_and_sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"K": 2, "lambda": [0.25, 0.75], "map": purify_descriptor(), "povm": "computational"});
    let c = write_json(dir.path(), "c.json", &cfg);
    let out = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let o = qlab(&["scenario", "run", "--config", s(&c), "--out", s(&out), "--csv", s(&csv)]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    let v = read(&out);
    assert!((v["report"]["protocol"]["tv_distance"].as_f64().unwrap() - 0.15).abs() < 1e-12);
    assert_eq!(v["report"]["protocol"]["verdict"], "ld-violated");
    let table = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().next().unwrap(), "family,measurement,tv_distance,verdict");
    assert!(table.lines().nth(1).unwrap().starts_with("nonlinear_purify,0,0.15"));

    let id = json!({"K": 2, "lambda": [0.25, 0.75], "map": hadamard_descriptor(), "povm": "ic", "seed": 4,
                    "phases": [[0.0, 1.0], [1.0, 0.0]]});
    let c = write_json(dir.path(), "id.json", &id);
    assert_eq!(code(&qlab(&["scenario", "run", "--config", s(&c)])), 0);
}

#[test]
fn scenario_search_writes_one_row_per_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let m = |e: [[f64; 2]; 4]| json!({"rows": 2, "cols": 2, "entries": e});
    let cfg = json!({
        "K": 2, "lambda": [0.25, 0.75], "povm": "computational",
        "search": {
            "family": {
                "kind": "nonlinear_meanfield",
                "h0": m([[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 0.0]]),
                "coupling": m([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [-1.0, 0.0]]),
                "tau": 1.0, "steps": 200, "g_range": [0.0, 5.0]
            },
            "budget": 6
        }
    });
    let c = write_json(dir.path(), "c.json", &cfg);
    let out = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    assert_eq!(code(&qlab(&["scenario", "run", "--config", s(&c), "--out", s(&out), "--csv", s(&csv)])), 1);
    let v = read(&out);
    let n = v["report"]["search"]["evaluations"].as_array().unwrap().len();
    let table = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().next().unwrap(), "family,g,measurement,tv_distance,verdict");
    assert_eq!(table.lines().count(), n + 1);
    assert!(n > 6);
}

#[test]
fn scenario_config_is_strict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"K": 2, "lambda": [0.5, 0.5], "map": purify_descriptor(), "povm": "computational", "extra": 1});
    let c = write_json(dir.path(), "c.json", &cfg);
    assert_eq!(code(&qlab(&["scenario", "run", "--config", s(&c)])), 2);
    // an IC measurement needs a seed
    let cfg = json!({"K": 2, "lambda": [0.5, 0.5], "map": purify_descriptor(), "povm": "ic"});
    let c = write_json(dir.path(), "c.json", &cfg);
    assert_eq!(code(&qlab(&["scenario", "run", "--config", s(&c)])), 2);
}

#[test]
fn config_hash_ignores_key_order() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    std::fs::write(&a, r#"{"K": 2, "lambda": [0.5, 0.5], "povm": "computational",
        "map": {"kind": "nonlinear_purify", "dim": 2, "parameters": {}}}"#)
    .unwrap();
    std::fs::write(&b, r#"{"map": {"parameters": {}, "dim": 2, "kind": "nonlinear_purify"},
        "povm": "computational", "lambda": [0.5, 0.5], "K": 2}"#)
    .unwrap();
    let ha: Value = serde_json::from_slice(&qlab(&["scenario", "run", "--config", s(&a)]).stdout).unwrap();
    let hb: Value = serde_json::from_slice(&qlab(&["scenario", "run", "--config", s(&b)]).stdout).unwrap();
    assert_eq!(ha["config_hash"], hb["config_hash"]);
}

#[test]
fn paper_suite_negative_control() {
    let dir = tempfile::tempdir().unwrap();
    let bad = json!({"kind": "kraus", "dim": 2, "parameters": {"operators": [
        {"rows": 2, "cols": 2, "entries": [[0.5, 0.0], [0.0, 0.0], [0.0, 0.0], [0.5, 0.0]]}
    ]}});
    let m = write_json(dir.path(), "bad.json", &bad);
    let out = dir.path().join("suite.json");
    let o = qlab(&["paper-suite", "--seed", "2", "--extra-map", s(&m), "--out", s(&out)]);
    assert_eq!(code(&o), 1);
    let v = read(&out);
    let checks = v["report"]["checks"].as_array().unwrap();
    let inv = checks.iter().find(|c| c["check_name"] == "map_invariants").unwrap();
    assert_eq!(inv["status"], "fail");
    assert!(checks.iter().filter(|c| c["check_name"] != "map_invariants").all(|c| c["status"] == "pass"));
}

#[test]
fn paper_suite_timings_live_in_a_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("suite.json");
    assert_eq!(code(&qlab(&["paper-suite", "--out", s(&out)])), 0);
    let v = read(&out);
    assert!(!serde_json::to_string(&v).unwrap().contains("runtime_ms"));
    let side = read(&dir.path().join("suite.json.timing.json"));
    assert_eq!(side["checks"].as_array().unwrap().len(), v["report"]["checks"].as_array().unwrap().len());
}

#[test]
fn thread_cap_is_honoured_and_validated() {
    let ok = Command::new(env!("CARGO_BIN_EXE_qlab"))
        .args(["ic", "build", "--dim", "3", "--seed", "1"])
        .env("QLAB_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&ok), 0);
    let bad = Command::new(env!("CARGO_BIN_EXE_qlab"))
        .args(["ic", "build", "--dim", "3", "--seed", "1"])
        .env("QLAB_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(code(&bad), 64);
}

#[test]
fn help_is_available() {
    let o = qlab(&["--help"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for sub in ["ic", "map", "gpt", "scenario", "paper-suite"] {
        assert!(text.contains(sub), "missing {sub}");
    }
}
