//! Configuration, on-disk stages, and the 12-cell experiment matrix.
//!
//! Every stage writes under `<output>/<stage>/` and records the hashes of its
//! inputs in a manifest, so stages can be re-run one at a time and stale
//! derived artifacts are rebuilt.

mod config;
mod experiment;
mod manifest;
mod plots;
mod stages;

pub use config::{EmbeddingSettings, LlmSourceConfig, LlmSettings, PipelineConfig};
pub use experiment::{
    evaluate_repeat, overlap_baseline, CellFailure, run_experiment, run_matrix, split_seed, train_repeat, train_seed, ExperimentRun,
    MatrixReport, RepeatResult,
};
pub use manifest::{sha256_file, sha256_json, Manifest};
pub use plots::{emit_plots, PlotFiles};
pub use stages::{
    cluster_code, embed_code, finetune, finetune_pairs, images_for_code, ingest, llm_disputes, load_disputes, prepare,
    rouge, stats, FinetuneReport, IngestReport, LlmReport, PairsReport, PairDataset, Workspace,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Stage names, also the directory names under the output root.
pub mod stage {
    pub const INGEST: &str = "ingest";
    pub const LLM_DISPUTES: &str = "llm_disputes";
    pub const FINETUNE_PAIRS: &str = "finetune_pairs";
    pub const FINETUNE: &str = "finetune";
    pub const TRAIN: &str = "train";
    pub const EMBED: &str = "embed";
    pub const CLUSTER: &str = "cluster";
    pub const IMAGES: &str = "images";
    pub const RUNS: &str = "runs";
    pub const MATRIX: &str = "matrix";
    pub const ROUGE: &str = "rouge";
    pub const STATS: &str = "stats";
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("missing artifact from stage `{stage}`: {detail}")]
    MissingArtifact { stage: String, detail: String },
    #[error("data error: {0}")]
    Data(String),
}

impl PipelineError {
    /// Process exit status for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::MissingArtifact { .. } => 3,
            PipelineError::Data(_) => 4,
        }
    }

    pub(crate) fn missing(stage: &str, detail: impl Into<String>) -> Self {
        PipelineError::MissingArtifact {
            stage: stage.to_string(),
            detail: detail.into(),
        }
    }

    pub(crate) fn data(e: impl fmt::Display) -> Self {
        PipelineError::Data(e.to_string())
    }
}

macro_rules! data_error_from {
    ($($t:ty),*) => {$(
        impl From<$t> for PipelineError {
            fn from(e: $t) -> Self {
                PipelineError::data(e)
            }
        }
    )*};
}

data_error_from!(
    std::io::Error,
    crate::jsonl::JsonlError,
    crate::llm::LlmError,
    crate::embedding::EmbeddingError,
    crate::clustering::ClusteringError,
    crate::simimage::SimImageError,
    crate::classifier::ClassifierError,
    crate::evaluation::EvaluationError
);

/// Where a code's dispute sets come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Court,
    LlmA,
    LlmB,
}

impl SourceKind {
    pub const ALL: [SourceKind; 3] = [SourceKind::Court, SourceKind::LlmA, SourceKind::LlmB];
    pub const LLM: [SourceKind; 2] = [SourceKind::LlmA, SourceKind::LlmB];

    /// Prefix used in experiment codes.
    pub fn prefix(self) -> &'static str {
        match self {
            SourceKind::Court => "ns",
            SourceKind::LlmA => "gpt35",
            SourceKind::LlmB => "gpt4",
        }
    }

    /// Key used in the config and in directory names.
    pub fn key(self) -> &'static str {
        match self {
            SourceKind::Court => "court",
            SourceKind::LlmA => "llm_a",
            SourceKind::LlmB => "llm_b",
        }
    }
}

impl FromStr for SourceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SourceKind::ALL
            .into_iter()
            .find(|k| k.key() == s || k.prefix() == s)
            .ok_or_else(|| format!("unknown source {s:?}"))
    }
}

/// A (dispute source, embedding backend, fine-tuned?) triple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ExperimentCode {
    pub source: SourceKind,
    pub backend: String,
    pub finetuned: bool,
}

impl ExperimentCode {
    pub fn new(source: SourceKind, backend: impl Into<String>, finetuned: bool) -> Self {
        ExperimentCode {
            source,
            backend: backend.into(),
            finetuned,
        }
    }

    /// All codes for `backends`, in figure order: per source, per backend,
    /// fine-tuned first.
    pub fn matrix(backends: &[String]) -> Vec<ExperimentCode> {
        let mut codes = Vec::new();
        for source in SourceKind::ALL {
            for backend in backends {
                for finetuned in [true, false] {
                    codes.push(ExperimentCode::new(source, backend.clone(), finetuned));
                }
            }
        }
        codes
    }
}

impl fmt::Display for ExperimentCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ft = if self.finetuned { "ft" } else { "" };
        write!(f, "{}_{ft}{}", self.source.prefix(), self.backend)
    }
}

impl FromStr for ExperimentCode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (src, rest) = s.split_once('_').ok_or_else(|| format!("bad experiment code {s:?}"))?;
        let source = src.parse()?;
        let (finetuned, backend) = match rest.strip_prefix("ft") {
            Some(b) => (true, b),
            None => (false, rest),
        };
        if backend.is_empty() {
            return Err(format!("bad experiment code {s:?}"));
        }
        Ok(ExperimentCode::new(source, backend, finetuned))
    }
}

impl TryFrom<String> for ExperimentCode {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ExperimentCode> for String {
    fn from(c: ExperimentCode) -> Self {
        c.to_string()
    }
}
