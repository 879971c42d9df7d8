//! Runs the quick examples. `cargo test` builds them next to the test
//! binaries; `desk_matrix` and `make_fixture` are left out because they are
//! slow or write into the source tree.

use std::path::PathBuf;
use std::process::Command;

fn example(name: &str) -> PathBuf {
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let path = deps.parent().unwrap().join("examples").join(name);
    assert!(path.exists(), "{} not built; run `cargo build --examples`", path.display());
    path
}

fn run(name: &str, args: &[&str]) -> String {
    let out = Command::new(example(name)).args(args).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(out.status.success(), "{name} failed:\n{stdout}\n{}", String::from_utf8_lossy(&out.stderr));
    stdout
}

#[test]
fn parse_and_extract() {
    let out = run("parse_and_extract", &[]);
    assert!(out.contains("-> 某地於某時是否有歇業之事實？"), "{out}");
    assert!(out.contains("60 documents, 0 unreadable, 57 eligible"), "{out}");
}

#[test]
fn llm_chain() {
    assert!(run("llm_chain", &[]).contains("Ok after 3 calls"));
}

#[test]
fn finetune_pairs() {
    assert!(run("finetune_pairs", &[]).contains("6 same pairs, 9 diff pairs"));
}

#[test]
fn cluster_disputes() {
    assert!(run("cluster_disputes", &[]).contains("190 statements"));
}

#[test]
fn similarity_image() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("pair.pgm");
    run("similarity_image", &[pgm.to_str().unwrap()]);
    assert!(std::fs::read(&pgm).unwrap().starts_with(b"P5"));
}

#[test]
fn train_classifier() {
    assert!(run("train_classifier", &[]).contains("test F1"));
}

#[test]
fn rouge_eval() {
    assert!(run("rouge_eval", &[]).contains("macro"));
}
