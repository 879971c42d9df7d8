//! Classification metrics, repeat-run summaries, and ROUGE.

mod metrics;
mod rouge;

pub use metrics::{
    boxplot_stats, classification_metrics, write_runs_csv, BoxplotStats, Confusion, RunMetrics,
    RunRecord,
};
pub use rouge::{
    macro_rouge, rouge_scores, tokenize_zh, write_rouge_report, CharSegmenter, DocRouge, Prf,
    RougeReport, RougeScores, Segmenter,
};

#[derive(Debug, thiserror::Error)]
pub enum EvaluationError {
    #[error("{0} predictions for {1} labels")]
    LengthMismatch(usize, usize),
    #[error("no values")]
    Empty,
    #[error("empty reference for {0}")]
    EmptyReference(String),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

pub(crate) fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub(crate) fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}
