//! Pair-similarity classifier: labeled pairs, stratified splits, and a
//! small CNN over similarity images.

mod checkpoint;
mod cnn;
mod split;
mod train;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
pub use cnn::{Cnn, CnnSpec};
pub use split::{stratified_split, Split, SplitSpec};
pub use train::{train, EpochRecord, History, Prediction, Sample, TrainConfig};

#[derive(Debug, thiserror::Error)]
pub enum ClassifierError {
    #[error("invalid CNN spec: {0}")]
    InvalidSpec(String),
    #[error("invalid split spec: {0}")]
    InvalidSplit(String),
    #[error("class {class} has {count} members, fewer than the 3 splits")]
    DegenerateClass { class: u8, count: usize },
    #[error("empty {0} split")]
    EmptySplit(&'static str),
    #[error("expected a {expected}x{expected} image, got {rows}x{cols}")]
    ShapeMismatch { expected: usize, rows: usize, cols: usize },
    #[error("invalid labels: {0}")]
    InvalidLabels(String),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityLabel {
    Similar,
    NotSimilar,
    BarelySimilar,
}

/// What to do with "barely similar" pairs in binary training.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarelyPolicy {
    #[default]
    Exclude,
    AsSimilar,
    AsNotSimilar,
}

impl SimilarityLabel {
    /// 1 for similar, 0 for not similar, `None` when excluded.
    pub fn binary(self, policy: BarelyPolicy) -> Option<u8> {
        match (self, policy) {
            (SimilarityLabel::Similar, _) | (SimilarityLabel::BarelySimilar, BarelyPolicy::AsSimilar) => Some(1),
            (SimilarityLabel::NotSimilar, _) | (SimilarityLabel::BarelySimilar, BarelyPolicy::AsNotSimilar) => Some(0),
            (SimilarityLabel::BarelySimilar, BarelyPolicy::Exclude) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub case_a: String,
    pub case_b: String,
    pub label: SimilarityLabel,
}

impl LabeledPair {
    pub fn pair_id(&self) -> String {
        format!("{}|{}", self.case_a, self.case_b)
    }
}

/// Rejects self-pairs and repeated unordered pairs.
pub fn validate_pairs(pairs: &[LabeledPair]) -> Result<(), ClassifierError> {
    let mut seen = HashSet::new();
    for p in pairs {
        if p.case_a == p.case_b {
            return Err(ClassifierError::InvalidLabels(format!("{} is paired with itself", p.case_a)));
        }
        let key = if p.case_a < p.case_b {
            (p.case_a.as_str(), p.case_b.as_str())
        } else {
            (p.case_b.as_str(), p.case_a.as_str())
        };
        if !seen.insert(key) {
            return Err(ClassifierError::InvalidLabels(format!("duplicate pair {}", p.pair_id())));
        }
    }
    Ok(())
}

pub fn read_labels(path: &Path) -> Result<Vec<LabeledPair>, ClassifierError> {
    let pairs = crate::jsonl::read::<LabeledPair>(path).map_err(|e| ClassifierError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    validate_pairs(&pairs)?;
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(a: &str, b: &str, label: SimilarityLabel) -> LabeledPair {
        LabeledPair { case_a: a.into(), case_b: b.into(), label }
    }

    #[test]
    fn barely_policy() {
        use SimilarityLabel::*;
        assert_eq!(BarelySimilar.binary(BarelyPolicy::Exclude), None);
        assert_eq!(BarelySimilar.binary(BarelyPolicy::AsSimilar), Some(1));
        assert_eq!(BarelySimilar.binary(BarelyPolicy::AsNotSimilar), Some(0));
        assert_eq!(Similar.binary(BarelyPolicy::AsNotSimilar), Some(1));
        assert_eq!(NotSimilar.binary(BarelyPolicy::AsSimilar), Some(0));
    }

    #[test]
    fn pair_validation() {
        use SimilarityLabel::*;
        assert!(validate_pairs(&[pair("a", "b", Similar), pair("a", "c", NotSimilar)]).is_ok());
        assert!(validate_pairs(&[pair("a", "a", Similar)]).is_err());
        assert!(validate_pairs(&[pair("a", "b", Similar), pair("b", "a", NotSimilar)]).is_err());
    }

    #[test]
    fn labels_file_format() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("labels.jsonl");
        std::fs::write(&p, "{\"case_a\":\"x\",\"case_b\":\"y\",\"label\":\"barely_similar\"}\n").unwrap();
        assert_eq!(read_labels(&p).unwrap(), vec![pair("x", "y", SimilarityLabel::BarelySimilar)]);
    }
}
