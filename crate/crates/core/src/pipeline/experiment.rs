use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::stages::{derive_seed, images_for_code, PairDataset, Workspace};
use super::{emit_plots, stage, ExperimentCode, PipelineError};
use crate::classifier::{
    load_checkpoint, save_checkpoint, stratified_split, train, Cnn, History, Sample, Split, SplitSpec, TrainConfig,
};
use crate::evaluation::{boxplot_stats, classification_metrics, write_runs_csv, BoxplotStats, RunMetrics, RunRecord};

/// Split seed of repeat `r`; shared by every experiment code.
pub fn split_seed(global: u64, repeat: usize) -> u64 {
    derive_seed(global, &format!("split/{repeat}"))
}

/// Network seed of repeat `r`; shared by every experiment code.
pub fn train_seed(global: u64, repeat: usize) -> u64 {
    derive_seed(global, &format!("train/{repeat}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatResult {
    pub repeat_index: usize,
    pub split_seed: u64,
    pub train_seed: u64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub metrics: RunMetrics,
    /// Always predicting the training majority class.
    pub majority: RunMetrics,
    /// Thresholded cluster-code overlap between the two cases.
    pub overlap: RunMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRun {
    pub code: ExperimentCode,
    pub pairs: usize,
    pub positives: usize,
    pub skipped_pairs: usize,
    pub repeats: Vec<RepeatResult>,
    pub f1: BoxplotStats,
    pub accuracy: BoxplotStats,
}

impl ExperimentRun {
    pub fn f1_values(&self) -> Vec<f64> {
        self.repeats.iter().map(|r| r.metrics.f1).collect()
    }

    pub fn accuracy_values(&self) -> Vec<f64> {
        self.repeats.iter().map(|r| r.metrics.accuracy).collect()
    }
}

fn split_for(ws: &Workspace, labels: &[u8], repeat: usize) -> Result<Split, PipelineError> {
    let spec = SplitSpec {
        seed: split_seed(ws.config().seed, repeat),
        ..ws.config().split.clone()
    };
    Ok(stratified_split(labels, &spec)?)
}

fn train_config(ws: &Workspace, repeat: usize) -> TrainConfig {
    TrainConfig {
        seed: train_seed(ws.config().seed, repeat),
        ..ws.config().train.clone()
    }
}

fn pick(samples: &[Sample], idx: &[usize]) -> Vec<Sample> {
    idx.iter().map(|&i| samples[i].clone()).collect()
}

fn majority_baseline(labels: &[u8], split: &Split) -> Result<RunMetrics, PipelineError> {
    let pos = split.train.iter().filter(|&&i| labels[i] == 1).count();
    let guess = u8::from(2 * pos > split.train.len());
    let truth: Vec<u8> = split.test.iter().map(|&i| labels[i]).collect();
    Ok(classification_metrics(&vec![guess; truth.len()], &truth)?)
}

fn jaccard(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        0.0
    } else {
        a.intersection(b).count() as f64 / union as f64
    }
}

/// Predicts "similar" when the Jaccard overlap of the two cases' cluster
/// codes reaches a threshold chosen for F1 on the training and validation
/// pairs.
pub fn overlap_baseline(
    cluster_sets: &[(BTreeSet<usize>, BTreeSet<usize>)],
    labels: &[u8],
    split: &Split,
) -> Result<RunMetrics, PipelineError> {
    let score: Vec<f64> = cluster_sets.iter().map(|(a, b)| jaccard(a, b)).collect();
    let fit: Vec<usize> = split.train.iter().chain(&split.val).copied().collect();
    let fit_labels: Vec<u8> = fit.iter().map(|&i| labels[i]).collect();
    let mut candidates: Vec<f64> = fit.iter().map(|&i| score[i]).collect();
    candidates.push(f64::INFINITY);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let mut best = (f64::INFINITY, -1.0, -1.0);
    for &t in &candidates {
        let preds: Vec<u8> = fit.iter().map(|&i| u8::from(score[i] >= t)).collect();
        let m = classification_metrics(&preds, &fit_labels)?;
        if (m.f1, m.accuracy) > (best.1, best.2) {
            best = (t, m.f1, m.accuracy);
        }
    }
    let preds: Vec<u8> = split.test.iter().map(|&i| u8::from(score[i] >= best.0)).collect();
    let truth: Vec<u8> = split.test.iter().map(|&i| labels[i]).collect();
    Ok(classification_metrics(&preds, &truth)?)
}

fn test_metrics(net: &Cnn, data: &PairDataset, split: &Split) -> Result<RunMetrics, PipelineError> {
    let images: Vec<&Array2<u8>> = split.test.iter().map(|&i| &data.samples[i].pixels).collect();
    let preds: Vec<u8> = net.predict_batch(&images)?.iter().map(|p| p.label).collect();
    let truth: Vec<u8> = split.test.iter().map(|&i| data.samples[i].label).collect();
    Ok(classification_metrics(&preds, &truth)?)
}

fn fit(ws: &Workspace, data: &PairDataset, split: &Split, repeat: usize) -> Result<(Cnn, History), PipelineError> {
    let train_set = pick(&data.samples, &split.train);
    let val_set = pick(&data.samples, &split.val);
    Ok(train(&ws.config().cnn, &train_config(ws, repeat), &train_set, &val_set)?)
}

fn run_repeat(ws: &Workspace, data: &PairDataset, repeat: usize) -> Result<RepeatResult, PipelineError> {
    let labels = data.labels();
    let split = split_for(ws, &labels, repeat)?;
    let (net, history) = fit(ws, data, &split, repeat)?;
    let result = RepeatResult {
        repeat_index: repeat,
        split_seed: split_seed(ws.config().seed, repeat),
        train_seed: train_seed(ws.config().seed, repeat),
        epochs_run: history.epochs.len(),
        best_epoch: history.best_epoch,
        metrics: test_metrics(&net, data, &split)?,
        majority: majority_baseline(&labels, &split)?,
        overlap: overlap_baseline(&data.cluster_sets, &labels, &split)?,
    };
    log::info!(
        "{} repeat {repeat}: F1 {:.3} acc {:.3} ({} epochs)",
        data.code,
        result.metrics.f1,
        result.metrics.accuracy,
        result.epochs_run
    );
    Ok(result)
}

fn runs_dir(ws: &Workspace, code: &ExperimentCode) -> PathBuf {
    ws.dir(stage::RUNS).join(code.to_string())
}

/// Trains and tests `code` once per repeat on freshly drawn splits and
/// writes the per-repeat table and summary under `runs/<code>/`.
pub fn run_experiment(ws: &Workspace, code: &ExperimentCode) -> Result<ExperimentRun, PipelineError> {
    let data = images_for_code(ws, code)?;
    let repeats = (0..ws.config().repeats)
        .map(|r| run_repeat(ws, &data, r))
        .collect::<Result<Vec<_>, _>>()?;
    let f1: Vec<f64> = repeats.iter().map(|r| r.metrics.f1).collect();
    let acc: Vec<f64> = repeats.iter().map(|r| r.metrics.accuracy).collect();
    let run = ExperimentRun {
        code: code.clone(),
        pairs: data.samples.len(),
        positives: data.labels().iter().filter(|&&l| l == 1).count(),
        skipped_pairs: data.skipped.len(),
        f1: boxplot_stats(&f1)?,
        accuracy: boxplot_stats(&acc)?,
        repeats,
    };
    let dir = runs_dir(ws, code);
    let rows: Vec<RunRecord> = run
        .repeats
        .iter()
        .map(|r| RunRecord {
            repeat_index: r.repeat_index,
            f1: r.metrics.f1,
            accuracy: r.metrics.accuracy,
        })
        .collect();
    write_runs_csv(&dir.join("runs.csv"), &rows)?;
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&run).unwrap())?;
    Ok(run)
}

/// Trains repeat `repeat` of `code` and saves the network under
/// `train/<code>/r<repeat>`.
pub fn train_repeat(ws: &Workspace, code: &ExperimentCode, repeat: usize) -> Result<History, PipelineError> {
    let data = images_for_code(ws, code)?;
    let split = split_for(ws, &data.labels(), repeat)?;
    let (net, history) = fit(ws, &data, &split, repeat)?;
    let stem = ws.dir(stage::TRAIN).join(code.to_string()).join(format!("r{repeat}"));
    let metrics = serde_json::to_value(&history).unwrap();
    save_checkpoint(&net, &train_config(ws, repeat), metrics, &stem)?;
    Ok(history)
}

/// Scores the saved network of `repeat` on that repeat's test pairs.
pub fn evaluate_repeat(ws: &Workspace, code: &ExperimentCode, repeat: usize) -> Result<RunMetrics, PipelineError> {
    let stem = ws.dir(stage::TRAIN).join(code.to_string()).join(format!("r{repeat}"));
    if !stem.with_extension("json").exists() {
        return Err(PipelineError::missing(stage::TRAIN, format!("no checkpoint at {}", stem.display())));
    }
    let (net, _) = load_checkpoint(&stem)?;
    let data = images_for_code(ws, code)?;
    let split = split_for(ws, &data.labels(), repeat)?;
    let metrics = test_metrics(&net, &data, &split)?;
    std::fs::write(
        stem.with_extension("metrics.json"),
        serde_json::to_string_pretty(&metrics).unwrap(),
    )?;
    Ok(metrics)
}

/// A matrix cell that could not run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub code: ExperimentCode,
    /// The stage to run first, for missing artifacts.
    pub stage: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatrixReport {
    /// Completed cells in figure order.
    pub runs: Vec<ExperimentRun>,
    pub failures: Vec<CellFailure>,
}

#[derive(Serialize)]
struct SummaryRow {
    code: String,
    pairs: usize,
    repeats: usize,
    f1_mean: f64,
    f1_median: f64,
    accuracy_mean: f64,
    accuracy_median: f64,
    majority_f1_mean: f64,
    majority_accuracy_mean: f64,
    overlap_f1_mean: f64,
    overlap_accuracy_mean: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

/// Runs every code of the matrix, up to `workers` cells at once. A cell
/// whose inputs are missing is reported and the others still run. Writes
/// `matrix/summary.csv`, `matrix/failures.jsonl`, and the boxplot data.
pub fn run_matrix(ws: &Workspace, render_svg: bool) -> Result<MatrixReport, PipelineError> {
    let codes = ExperimentCode::matrix(&ws.config().backend_ids());
    let results: Mutex<Vec<Option<Result<ExperimentRun, PipelineError>>>> =
        Mutex::new((0..codes.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..ws.config().workers.min(codes.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(code) = codes.get(i) else { break };
                let r = run_experiment(ws, code);
                if let Err(e) = &r {
                    log::warn!("{code}: {e}");
                }
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    let mut report = MatrixReport::default();
    for (code, r) in codes.iter().zip(results.into_inner().unwrap()) {
        match r.expect("every cell ran") {
            Ok(run) => report.runs.push(run),
            Err(e) => report.failures.push(CellFailure {
                code: code.clone(),
                stage: match &e {
                    PipelineError::MissingArtifact { stage, .. } => Some(stage.clone()),
                    _ => None,
                },
                message: e.to_string(),
            }),
        }
    }
    let dir = ws.dir(stage::MATRIX);
    std::fs::create_dir_all(&dir)?;
    let mut w = csv::Writer::from_path(dir.join("summary.csv")).map_err(PipelineError::data)?;
    for run in &report.runs {
        w.serialize(SummaryRow {
            code: run.code.to_string(),
            pairs: run.pairs,
            repeats: run.repeats.len(),
            f1_mean: run.f1.mean,
            f1_median: run.f1.median,
            accuracy_mean: run.accuracy.mean,
            accuracy_median: run.accuracy.median,
            majority_f1_mean: mean(run.repeats.iter().map(|r| r.majority.f1)),
            majority_accuracy_mean: mean(run.repeats.iter().map(|r| r.majority.accuracy)),
            overlap_f1_mean: mean(run.repeats.iter().map(|r| r.overlap.f1)),
            overlap_accuracy_mean: mean(run.repeats.iter().map(|r| r.overlap.accuracy)),
        })
        .map_err(PipelineError::data)?;
    }
    w.flush()?;
    crate::jsonl::write(&dir.join("failures.jsonl"), &report.failures)?;
    if !report.runs.is_empty() {
        emit_plots(&report.runs, &dir, render_svg)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_by_repeat_and_purpose() {
        let s: BTreeSet<u64> = (0..30).map(|r| split_seed(7, r)).collect();
        assert_eq!(s.len(), 30);
        assert_ne!(split_seed(7, 0), train_seed(7, 0));
        assert_ne!(split_seed(7, 0), split_seed(8, 0));
        assert_eq!(split_seed(7, 3), split_seed(7, 3));
    }

    #[test]
    fn overlap_baseline_separates_planted_overlap() {
        let set = |v: &[usize]| v.iter().copied().collect::<BTreeSet<_>>();
        let mut sets = Vec::new();
        let mut labels = Vec::new();
        for i in 0..20 {
            if i % 2 == 0 {
                sets.push((set(&[1, 2]), set(&[1, 2, 3])));
                labels.push(1);
            } else {
                sets.push((set(&[1]), set(&[4, 5])));
                labels.push(0);
            }
        }
        let split = stratified_split(&labels, &SplitSpec::with_seed(1)).unwrap();
        let m = overlap_baseline(&sets, &labels, &split).unwrap();
        assert_eq!(m.f1, 1.0);
        assert_eq!(m.accuracy, 1.0);
    }

    #[test]
    fn majority_baseline_predicts_the_larger_class() {
        let labels = [0, 0, 0, 1, 1];
        let split = Split {
            train: vec![0, 1, 3],
            val: vec![],
            test: vec![2, 4],
        };
        let m = majority_baseline(&labels, &split).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.f1, 0.0);
    }
}
