//! Sentence vectors for dispute statements and the pair data used to
//! fine-tune the encoder.

mod encoder;
mod pairs;
mod store;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use encoder::{backend, EncoderConfig, FinetuneOptions, NgramEncoder, BACKEND_IDS};
pub use pairs::{
    generate_pairs, materialize_pairs, pair_counts, sample_pairs, IndexPair, PairCategory,
    PairCounts, PairIter,
};
pub use store::{embed_batch, VectorStore};

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("embedding backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("vector length {found} does not match {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty statement batch")]
    EmptyBatch,
    #[error("backend produced a non-finite value for {0:?}")]
    NonFinite(String),
    #[error("no fine-tuning pairs")]
    EmptyTrainingSet,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Format { path: String, line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub model_tag: String,
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn dims(&self) -> usize {
        self.values.len()
    }
}

/// Something that turns sentences into fixed-length vectors.
pub trait EmbeddingProvider: Send + Sync {
    /// Identifies the weights; vectors are cached under this tag.
    fn model_tag(&self) -> &str;
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbeddingError>;
}

/// Sentence data used for a fine-tuning pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinetunePair {
    pub sentence_a: String,
    pub sentence_b: String,
    pub category: PairCategory,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HeldoutSplit {
    /// Statements of unlabeled cases, free for fine-tuning.
    pub finetune: Vec<String>,
    /// Statements of labeled cases, kept away from the encoder.
    pub reserved: Vec<String>,
}

/// Sets aside the statements of `labeled` cases.
pub fn heldout_split(
    statements: &BTreeMap<String, Vec<String>>,
    labeled: &BTreeSet<String>,
) -> HeldoutSplit {
    let unknown = labeled.iter().filter(|id| !statements.contains_key(*id)).count();
    if unknown > 0 {
        log::warn!("{unknown} labeled case ids are not in the corpus");
    }
    let mut split = HeldoutSplit::default();
    for (case_id, items) in statements {
        let side = if labeled.contains(case_id) {
            &mut split.reserved
        } else {
            &mut split.finetune
        };
        side.extend(items.iter().cloned());
    }
    split
}

/// Indices of sentences whose cluster has at least `min_size` members.
/// Label 0 is noise and never survives.
pub fn prune_small_clusters(labels: &[usize], min_size: usize) -> Vec<usize> {
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        *sizes.entry(l).or_default() += 1;
    }
    (0..labels.len())
        .filter(|&i| labels[i] != 0 && sizes[&labels[i]] >= min_size)
        .collect()
}

/// Fine-tunes `encoder` on `pairs`, rejecting an empty set.
pub fn finetune(
    encoder: &NgramEncoder,
    pairs: &[FinetunePair],
    options: &FinetuneOptions,
) -> Result<NgramEncoder, EmbeddingError> {
    if pairs.is_empty() {
        return Err(EmbeddingError::EmptyTrainingSet);
    }
    Ok(encoder.finetune(pairs, options))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn corpus() -> BTreeMap<String, Vec<String>> {
        [("a", vec!["1", "2"]), ("b", vec!["3"]), ("c", vec!["4", "5", "6"])]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.into_iter().map(String::from).collect()))
            .collect()
    }

    #[test]
    fn heldout_edges() {
        let all = heldout_split(&corpus(), &BTreeSet::new());
        assert_eq!(all.finetune.len(), 6);
        assert!(all.reserved.is_empty());
        let ids: BTreeSet<String> = corpus().keys().cloned().collect();
        let none = heldout_split(&corpus(), &ids);
        assert!(none.finetune.is_empty());
        let b = heldout_split(&corpus(), &["b".to_string()].into());
        assert_eq!(b.reserved, vec!["3"]);
    }

    #[test]
    fn prune_threshold_boundary() {
        let mut labels = vec![1; 12];
        labels.extend([2; 9]);
        labels.extend([3; 10]);
        labels.extend([0; 15]);
        let kept = prune_small_clusters(&labels, 10);
        assert_eq!(kept.len(), 22);
        assert!(kept.iter().all(|&i| labels[i] == 1 || labels[i] == 3));
    }

    #[test]
    fn empty_training_set_is_rejected() {
        let enc = backend("lf").unwrap();
        assert!(matches!(
            finetune(&enc, &[], &FinetuneOptions::default()),
            Err(EmbeddingError::EmptyTrainingSet)
        ));
    }

    proptest! {
        #[test]
        fn heldout_partitions(labeled in proptest::collection::btree_set("[abcd]", 0..4)) {
            let split = heldout_split(&corpus(), &labeled);
            let mut all: Vec<String> = split.finetune.iter().chain(&split.reserved).cloned().collect();
            all.sort();
            prop_assert_eq!(all, vec!["1", "2", "3", "4", "5", "6"]);
            let reserved: BTreeSet<_> = split.reserved.iter().collect();
            prop_assert!(split.finetune.iter().all(|s| !reserved.contains(s)));
        }
    }
}
