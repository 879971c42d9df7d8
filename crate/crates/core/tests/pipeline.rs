use std::path::{Path, PathBuf};
use std::process::Command;

use casesim::pipeline::{
    finetune, finetune_pairs, ingest, llm_disputes, prepare, run_experiment, run_matrix, stage, split_seed,
    ExperimentCode, PipelineConfig, PipelineError, SourceKind, Workspace,
};

fn desk_toml() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/desk/desk.toml")
}

fn quoted(path: &Path) -> String {
    toml::Value::String(path.display().to_string()).to_string()
}

/// The shipped fixture writing to `out`, with short training.
fn workspace(out: &Path, extra: &[&str]) -> Workspace {
    let mut overrides = vec![
        format!("output={}", quoted(out)),
        "repeats=1".to_string(),
        "train.max_epochs=3".to_string(),
        "embedding.stub_finetune=true".to_string(),
    ];
    overrides.extend(extra.iter().map(|s| s.to_string()));
    Workspace::new(PipelineConfig::load(&desk_toml(), &overrides).unwrap()).unwrap()
}

#[test]
fn a_missing_source_fails_only_its_cells() {
    let out = tempfile::tempdir().unwrap();
    let ws = workspace(out.path(), &[]);
    ingest(&ws).unwrap();
    llm_disputes(&ws, &[SourceKind::LlmA]).unwrap();
    finetune_pairs(&ws).unwrap();
    finetune(&ws).unwrap();

    let report = run_matrix(&ws, false).unwrap();
    assert_eq!(report.runs.len(), 8);
    assert_eq!(report.failures.len(), 4);
    for f in &report.failures {
        assert_eq!(f.code.source, SourceKind::LlmB);
        assert_eq!(f.stage.as_deref(), Some(stage::LLM_DISPUTES));
    }
    for run in &report.runs {
        assert_eq!(run.repeats.len(), 1);
        assert_eq!(run.f1.min, run.f1.max);
        assert_eq!(run.f1.mean, run.f1.min);
        assert_eq!(run.accuracy.mean, run.accuracy.max);
        // every code sees the same resampling
        assert_eq!(run.repeats[0].split_seed, split_seed(ws.config().seed, 0));
    }
    let summary = std::fs::read_to_string(out.path().join("matrix/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 9);
    let failures = std::fs::read_to_string(out.path().join("matrix/failures.jsonl")).unwrap();
    assert_eq!(failures.lines().count(), 4);
}

#[test]
fn finetuning_runs_once_per_backend() {
    let out = tempfile::tempdir().unwrap();
    let ws = workspace(out.path(), &["embedding.stub_finetune=false"]);
    prepare(&ws).unwrap();
    let again = finetune(&ws).unwrap();
    assert_eq!(again.len(), 2);
    assert!(again.iter().all(|r| r.reused), "{again:?}");
    assert!(again.iter().all(|r| r.model_tag.starts_with(&format!("{}+ft.", r.backend))));
}

#[test]
fn experiments_are_reproducible() {
    let code: ExperimentCode = "ns_lf".parse().unwrap();
    let mut results = Vec::new();
    for _ in 0..2 {
        let out = tempfile::tempdir().unwrap();
        let ws = workspace(out.path(), &["repeats=2"]);
        ingest(&ws).unwrap();
        let run = run_experiment(&ws, &code).unwrap();
        let runs_csv = std::fs::read_to_string(out.path().join("runs/ns_lf/runs.csv")).unwrap();
        results.push((run.f1, run.accuracy, runs_csv));
    }
    assert_eq!(results[0], results[1]);
    assert_eq!(results[0].2.lines().count(), 3);
}

#[test]
fn llm_cells_need_their_dispute_lists() {
    let out = tempfile::tempdir().unwrap();
    let ws = workspace(out.path(), &[]);
    ingest(&ws).unwrap();
    match run_experiment(&ws, &"gpt4_lf".parse().unwrap()) {
        Err(PipelineError::MissingArtifact { stage, .. }) => assert_eq!(stage, "llm_disputes"),
        other => panic!("expected a missing artifact, got {other:?}"),
    }
    match run_experiment(&ws, &"ns_ftlf".parse().unwrap()) {
        Err(PipelineError::MissingArtifact { stage, .. }) => assert_eq!(stage, "finetune"),
        other => panic!("expected a missing artifact, got {other:?}"),
    }
}

fn casesim(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_casesim")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn cli_stages_and_exit_codes() {
    let out = tempfile::tempdir().unwrap();
    let config = desk_toml();
    let base = |extra: &[&str]| -> Vec<String> {
        let mut v = vec![
            "--config".to_string(),
            config.display().to_string(),
            "--output".to_string(),
            out.path().display().to_string(),
            "--set".to_string(),
            "train.max_epochs=2".to_string(),
        ];
        v.extend(extra.iter().map(|s| s.to_string()));
        v
    };
    let run = |extra: &[&str]| {
        let args = base(extra);
        casesim(&args.iter().map(String::as_str).collect::<Vec<_>>())
    };

    let (code, _, err) = run(&["images", "--code", "ns_lf"]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("`ingest`"), "{err}");

    let (code, stdout, err) = run(&["ingest"]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("\"eligible\": 57"), "{stdout}");

    let (code, _, err) = run(&["evaluate", "--code", "ns_lf", "--repeat", "0"]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("`train`"), "{err}");

    let (code, _, err) = run(&["train", "--code", "ns_lf", "--repeat", "0"]);
    assert_eq!(code, 0, "{err}");
    let (code, stdout, err) = run(&["evaluate", "--code", "ns_lf", "--repeat", "0"]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("\"f1\""), "{stdout}");

    let (code, stdout, err) = run(&["stats"]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("per_year"), "{stdout}");

    let (code, _, err) = run(&["--set", "repeats=0", "stats"]);
    assert_eq!(code, 2, "{err}");
    let (code, _, err) = run(&["--set", "no_such_key=1", "stats"]);
    assert_eq!(code, 2, "{err}");
    let (code, _, err) = run(&["images", "--code", "xx_lf"]);
    assert_eq!(code, 2, "{err}");

    let bad_labels = out.path().join("bad.jsonl");
    std::fs::write(&bad_labels, "{not json\n").unwrap();
    let set = format!("labels={}", quoted(&bad_labels));
    let (code, _, err) = run(&["--set", &set, "images", "--code", "ns_lf"]);
    assert_eq!(code, 4, "{err}");
}
