use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::FinetunePair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairCategory {
    Same,
    Diff,
}

/// Pair of sentence indices with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct IndexPair {
    pub a: usize,
    pub b: usize,
    pub category: PairCategory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    pub same: u64,
    pub diff: u64,
}

fn choose2(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Closed-form pair counts for the given cluster sizes.
pub fn pair_counts(cluster_sizes: &[usize]) -> PairCounts {
    let n: u64 = cluster_sizes.iter().map(|&s| s as u64).sum();
    let same = cluster_sizes.iter().map(|&s| choose2(s as u64)).sum();
    PairCounts {
        same,
        diff: choose2(n) - same,
    }
}

/// Every unordered pair over `labels`, generated on demand.
pub struct PairIter<'a> {
    labels: &'a [usize],
    a: usize,
    b: usize,
}

impl Iterator for PairIter<'_> {
    type Item = IndexPair;

    fn next(&mut self) -> Option<IndexPair> {
        if self.b >= self.labels.len() {
            self.a += 1;
            self.b = self.a + 1;
            if self.b >= self.labels.len() {
                return None;
            }
        }
        let (a, b) = (self.a, self.b);
        self.b += 1;
        let category = if self.labels[a] == self.labels[b] {
            PairCategory::Same
        } else {
            PairCategory::Diff
        };
        Some(IndexPair { a, b, category })
    }
}

/// Lazily enumerates same-cluster and cross-cluster pairs.
pub fn generate_pairs(labels: &[usize]) -> PairIter<'_> {
    PairIter { labels, a: 0, b: 1 }
}

/// Uniform sample of up to `per_category` pairs from each category, by
/// reservoir sampling. The result is sorted by category then index.
pub fn sample_pairs(
    pairs: impl Iterator<Item = IndexPair>,
    per_category: usize,
    seed: u64,
) -> Vec<IndexPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reservoirs: BTreeMap<PairCategory, (u64, Vec<IndexPair>)> = BTreeMap::new();
    for pair in pairs {
        let (seen, kept) = reservoirs.entry(pair.category).or_default();
        *seen += 1;
        if kept.len() < per_category {
            kept.push(pair);
        } else {
            let slot = rng.random_range(0..*seen);
            if (slot as usize) < per_category {
                kept[slot as usize] = pair;
            }
        }
    }
    let mut out = Vec::new();
    for (category, (seen, mut kept)) in reservoirs {
        if (seen as usize) < per_category {
            log::warn!("only {seen} {category:?} pairs available, wanted {per_category}");
        }
        kept.sort();
        out.extend(kept);
    }
    out
}

/// Attaches the sentence text to sampled index pairs.
pub fn materialize_pairs(pairs: &[IndexPair], sentences: &[String]) -> Vec<FinetunePair> {
    pairs
        .iter()
        .map(|p| FinetunePair {
            sentence_a: sentences[p.a].clone(),
            sentence_b: sentences[p.b].clone(),
            category: p.category,
        })
        .collect()
}
