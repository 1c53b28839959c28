mod common;

use std::path::Path;
use std::process::{Command, Output};

fn stmtbugs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stmtbugs"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn usage_and_help() {
    assert_eq!(code(&stmtbugs(&["--help"])), 0);
    assert_eq!(code(&stmtbugs(&["mine", "--help"])), 0);
    assert_eq!(code(&stmtbugs(&[])), 64);
    assert_eq!(code(&stmtbugs(&["frobnicate"])), 64);
    assert_eq!(code(&stmtbugs(&["mine", "--out", "x"])), 64);
    assert_eq!(code(&stmtbugs(&["mine", "--repos", "r", "--out", "x", "--workers", "0"])), 64);
    let v = stmtbugs(&["--version"]);
    assert_eq!(code(&v), 0);
    let v = String::from_utf8(v.stdout).unwrap();
    assert!(v.contains(env!("CARGO_PKG_VERSION")) && v.contains("labels v1"), "{v}");
}

#[test]
fn mine_classify_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let fx = common::fixture_repo::build(dir.path());
    let out = dir.path().join("out");
    let o = stmtbugs(&["-v", "mine", "--repos", p(&fx.repo_list), "--out", p(&out), "--workers", "2", "--gzip"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let log = String::from_utf8(o.stderr).unwrap();
    assert!(log.lines().all(|l| l.starts_with("level=") && l.contains(" stage=") && l.contains(" repo=")), "{log}");

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["outputs"], serde_json::json!({"ssc": 8, "ssb": 7, "tssb": 5}));
    assert_eq!(manifest["repo_list_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["labels_version"], "1");
    assert_eq!(manifest["repos"].as_array().unwrap().len(), 2);

    // reclassifying from the stored diffs reproduces every row
    let ssc = out.join("ssc.jsonl.gz");
    let again = dir.path().join("again.jsonl");
    assert_eq!(code(&stmtbugs(&["classify", "--in", p(&ssc), "--out", p(&again)])), 0);
    let a = stmtbugs::record::read_records(&ssc).unwrap();
    let b = stmtbugs::record::read_records(&again).unwrap();
    let json = |v: &[stmtbugs::record::BugRecord]| serde_json::to_string(&v).unwrap();
    assert_eq!(json(&a), json(&b));

    let report = dir.path().join("report");
    let o = stmtbugs(&["analyze", "--in", p(&ssc), "--report", p(&report), "--compare", p(&out.join("ssb.jsonl.gz"))]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "frequencies.csv",
        "spearman.json",
        "distance_report.json",
        "length_histogram.csv",
        "op_types.csv",
        "typo_stats.json",
        "manifest.json",
    ] {
        assert!(report.join(f).is_file(), "{f}");
    }
    let freq = std::fs::read_to_string(report.join("frequencies.csv")).unwrap();
    assert!(freq.starts_with("pattern,count,percent\n"));
    assert!(freq.contains("total,8,"));
}

#[test]
fn partial_and_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let fx = common::fixture_repo::build(dir.path());
    let list = dir.path().join("list.txt");
    std::fs::write(&list, format!("{}\n{}\n", fx.origin.display(), dir.path().join("gone").display())).unwrap();
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_stmtbugs"))
        .args(["mine", "--repos", p(&list), "--out", p(&out)])
        .env(stmtbugs::pipeline::CACHE_DIR_ENV, dir.path().join("cache"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(out.join("ssc.jsonl").is_file());

    assert_eq!(code(&stmtbugs(&["mine", "--repos", p(&dir.path().join("no-list")), "--out", p(&out)])), 1);
    assert_eq!(code(&stmtbugs(&["analyze", "--in", p(&dir.path().join("no.jsonl")), "--report", p(&out)])), 1);
}

#[test]
fn editscript_command() {
    let dir = tempfile::tempdir().unwrap();
    let (b, a) = (dir.path().join("b.py"), dir.path().join("a.py"));
    std::fs::write(&b, "x = a\n").unwrap();
    std::fs::write(&a, "x = b\n").unwrap();
    let o = stmtbugs(&["editscript", "--before", p(&b), "--after", p(&a)]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        String::from_utf8(o.stdout).unwrap().trim(),
        r#"[{"kind":"UPDATE","node":"identifier","parent":"assignment","pos":1,"value":"b"}]"#
    );
    let o = stmtbugs(&["editscript", "--before", p(&b), "--after", p(&a), "--types"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "Update(identifier)");
}
