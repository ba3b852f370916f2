use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hyperweave::cli::parse_strategy;
use hyperweave_core::strategy::Strategy;
use proptest::prelude::*;
use proptest::strategy::Strategy as _;

const SAFE: &str = "var x, y;\nx := 0;\n{ x := x + 1; } || { y := 2; }\nassume(x != 1);\n";
const UNSAFE: &str = "var x, y;\nx := 0;\n{ x := x + 1; } || { y := 2; }\nassume(x = 1);\n";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperweave")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let safe = write(dir.path(), "safe.imp", SAFE);
    let unsafe_ = write(dir.path(), "unsafe.imp", UNSAFE);
    let broken = write(dir.path(), "broken.imp", "var x;\nx := ;\n");

    assert_eq!(code(&run(&["verify", &safe])), 0);
    let o = run(&["verify", &unsafe_]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("UNSAFE"));
    assert_eq!(code(&run(&["verify", &broken])), 64);
    assert_eq!(code(&run(&["verify", &safe, "--strategy", "sideways"])), 64);
    assert_eq!(code(&run(&["verify", &safe, "--timeout", "0"])), 64);
    assert_eq!(code(&run(&["verify", "/nonexistent/file.imp"])), 64);
    assert_eq!(code(&run(&["frobnicate"])), 64);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn round_limit_gives_unknown() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "loop.imp",
        "var x, n;\nx := 0;\nwhile (x < n) { x := x + 1; }\nassume(x < 0);\n",
    );
    let o = run(&["verify", &f, "--max-rounds", "1", "--format", "json"]);
    assert_eq!(code(&o), 2);
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["verdict"], "unknown");
    assert!(doc["reason"].is_string());
}

#[test]
fn unsafe_json_carries_trace_and_model() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "u.imp", UNSAFE);
    let o = run(&["verify", &f, "--format", "json"]);
    assert_eq!(code(&o), 1);
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["verdict"], "unsafe");
    let trace: Vec<&str> = doc["trace"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(trace.first(), Some(&"x := 0"));
    assert_eq!(trace.last(), Some(&"assume(x = 1)"));
    assert!(doc["model"].as_object().unwrap().contains_key("x"));
    assert_eq!(doc["progress_audit"], true);
}

#[test]
fn saved_proof_checks_and_truncated_proof_does_not() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "s.imp", SAFE);
    let proof = dir.path().join("proof.json");
    let stats = dir.path().join("rounds.jsonl");
    let o = run(&[
        "verify",
        &f,
        "--proof-out",
        proof.to_str().unwrap(),
        "--stats",
        stats.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let rounds = fs::read_to_string(&stats).unwrap();
    assert!(rounds.lines().count() >= 1);
    for line in rounds.lines() {
        let r: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(r["proof_size"].as_u64().unwrap() >= 2);
    }

    let o = run(&["check", &f, "--proof", proof.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("COVERED"));

    let weak = write(dir.path(), "weak.json", r#"{"assertions": ["true", "false"]}"#);
    let o = run(&["check", &f, "--proof", &weak]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("NOT COVERED"));

    let bad = write(dir.path(), "bad.json", r#"{"assertions": ["z = 1"]}"#);
    assert_eq!(code(&run(&["check", &f, "--proof", &bad])), 64);
}

#[test]
fn bench_on_empty_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["bench", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("no benchmarks"));
}

#[test]
fn bench_reports_mismatches_and_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite");
    fs::create_dir_all(suite.join("g")).unwrap();
    write(&suite.join("g"), "ok.imp", SAFE);
    write(&suite.join("g"), "ok.expect", "safe\n");
    write(&suite, "wrong.imp", UNSAFE);
    write(&suite, "wrong.expect", "safe\ngroup: custom\n");
    let csv = dir.path().join("out.csv");
    let json = dir.path().join("out.json");
    let o = run(&[
        "bench",
        suite.to_str().unwrap(),
        "--strategies",
        "bpe-rr,bpe-m1",
        "--antichains",
        "on,off",
        "--csv",
        csv.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("MISMATCH"));

    let mut rdr = csv::Reader::from_path(&csv).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 8);
    for r in &rows {
        let expect_match = &r[col("name")] == "ok";
        assert_eq!(&r[col("matches")] == "true", expect_match, "{r:?}");
    }
    assert!(rows.iter().any(|r| &r[col("group")] == "custom"));
    assert!(rows.iter().any(|r| &r[col("group")] == "g"));

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 8);
    assert!(!report["groups"].as_array().unwrap().is_empty());
}

fn strategies() -> impl proptest::strategy::Strategy<Value = Strategy> {
    prop_oneof![
        Just(Strategy::Naive),
        Just(Strategy::Pe),
        Just(Strategy::BpeRr),
        (1usize..50).prop_map(Strategy::BpeL),
        (1usize..50).prop_map(Strategy::BpeM),
    ]
}

proptest! {
    #[test]
    fn strategy_names_parse_back(s in strategies()) {
        let parts: Vec<String> = s.to_string().split(' ').map(str::to_string).collect();
        prop_assert_eq!(parse_strategy(&parts).unwrap(), s);
        prop_assert_eq!(parse_strategy(&[s.to_string().replace(' ', "")]).unwrap(), s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Straight-line programs are unsafe exactly when concrete evaluation
    /// reaches the final assumption.
    #[test]
    fn verdict_matches_concrete_run(c1 in -5i64..5, c2 in -5i64..5, m in 1i64..4, k in -20i64..20) {
        let src = format!(
            "var x, y;\nx := {c1};\n{{ x := {m} * x; }} || {{ y := {c2}; }}\nx := x + y;\nassume(x = {k});\n"
        );
        let dir = tempfile::tempdir().unwrap();
        let f = write(dir.path(), "p.imp", &src);
        let expect = if m * c1 + c2 == k { 1 } else { 0 };
        prop_assert_eq!(code(&run(&["verify", &f])), expect);
    }
}
