mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::{fixture, INVOICE_QUERY};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_skillgroup"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn build_pool(name: &str, dir: &Path) -> PathBuf {
    let out = dir.join(format!("{name}.json"));
    let o = run(&["build-pool", fixture(name).to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

#[test]
fn build_pool_writes_stable_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let first = build_pool("invoice", dir.path());
    let bytes = std::fs::read(&first).unwrap();
    let again = dir.path().join("again.json");
    let o = run(&["build-pool", fixture("invoice").to_str().unwrap(), "--out", again.to_str().unwrap(), "--sequential"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("skills=6 groups="));
    assert_eq!(std::fs::read(&again).unwrap(), bytes);

    let o = run(&["inspect", "pool", "--pool", first.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["skills"], 6);
    assert!(v["groups_by_size"][0].as_u64().unwrap() >= 6);
}

#[test]
fn build_pool_reports_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["build-pool", dir.path().to_str().unwrap(), "--out", dir.path().join("p.json").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("missing skills.json"), "{}", stderr(&o));
}

#[test]
fn retrieve_text_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let pool = build_pool("invoice", dir.path());
    let o = run(&["retrieve", "--pool", pool.to_str().unwrap(), "--query", INVOICE_QUERY]);
    assert!(o.status.success(), "{}", stderr(&o));
    let golden = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/invoice_contract.txt")).unwrap();
    assert!(stdout(&o).starts_with("START"));
    assert_eq!(stdout(&o), golden);

    let o = run(&["retrieve", "--pool", pool.to_str().unwrap(), "--query", INVOICE_QUERY, "--trace"]);
    assert!(stdout(&o).contains("\nTRACE\n"));
}

#[test]
fn retrieve_json_carries_config_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let pool = build_pool("invoice", dir.path());
    let o = run(&["retrieve", "--pool", pool.to_str().unwrap(), "--query", INVOICE_QUERY, "--json", "--ablate", "no_backfill"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["plan", "skills", "debt", "contract", "contract_text", "config"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!(v.get("trace").is_none());
    assert_eq!(v["config"]["source"], "default");
    assert_eq!(v["config"]["ablations"], serde_json::json!(["no_backfill"]));
}

#[test]
fn retrieve_rejects_bad_inputs() {
    let o = run(&["retrieve", "--pool", "/nonexistent/pool.json", "--query", "x"]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error:"));

    let dir = tempfile::tempdir().unwrap();
    let pool = build_pool("invoice", dir.path());
    let o = run(&["retrieve", "--pool", pool.to_str().unwrap(), "--query", "x", "--ablate", "no_such_thing"]);
    assert!(!o.status.success());
}

fn gate(pool: &Path, out: &Path, extra: &[&str]) -> Output {
    let ann = fixture("gate").join("gate.json");
    let mut args = vec!["gate", "--pool", pool.to_str().unwrap(), "--annotations", ann.to_str().unwrap(), "--out-dir", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn gate_scores_retrievers() {
    let dir = tempfile::tempdir().unwrap();
    let pool = build_pool("gate", dir.path());

    let o = gate(&pool, dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines.iter().all(|l| l.starts_with("retriever=grouped ") && l.ends_with("must_hit=1.000")), "{text}");
    assert!(dir.path().join("gate_report.csv").exists());
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("gate_report.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["rows"].as_array().unwrap().len(), 40);

    let o = gate(&pool, dir.path(), &["--ablate", "no_backfill"]);
    assert!(!stdout(&o).contains("must_hit=1.000"));

    let o = gate(&pool, dir.path(), &["--retriever", "no-skills"]);
    assert!(stdout(&o).lines().all(|l| l.ends_with("must_hit=0.000")));

    let o = gate(&pool, dir.path(), &["--retriever", "goskills"]);
    assert!(stdout(&o).starts_with("retriever=grouped "));
}

#[test]
fn gate_rejects_unknown_skills() {
    let dir = tempfile::tempdir().unwrap();
    let pool = build_pool("gate", dir.path());
    let ann = dir.path().join("bad.json");
    std::fs::write(
        &ann,
        r#"{"tasks":[{"id":"t","query":"q","items":[{"requirement":"r","must_have":["ghost-skill"]}]}]}"#,
    )
    .unwrap();
    let o = run(&["gate", "--pool", pool.to_str().unwrap(), "--annotations", ann.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("ghost-skill"), "{}", stderr(&o));
}

#[test]
fn inspect_schema_prints_json() {
    let o = run(&["inspect", "schema", "--query", "convert pdf to xlsx offline", "--mode", "instruction-auto"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.get("schema").is_some());
    assert!(v["high_confidence"].is_array() || v["high_confidence"].is_object());
}
