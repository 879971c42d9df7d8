//! Global density-based clustering of dispute vectors.
//!
//! Distances are `1 - cosine`. The cluster-selection threshold follows the
//! 0.8 rule over the off-diagonal distance range, and the resulting clusters
//! get dense codes `1..=gamma` in order of first appearance; noise is 0.

mod engine;
mod persist;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use engine::{ClusterEngine, HdbscanEngine};
pub use persist::{load_clustering, save_clustering};

#[derive(Debug, thiserror::Error)]
pub enum ClusteringError {
    #[error("vector {0} has zero norm")]
    ZeroVector(usize),
    #[error("need at least 2 vectors, got {0}")]
    TooFewVectors(usize),
    #[error("vector {index} has {found} dims, expected {expected}")]
    DimensionMismatch { index: usize, expected: usize, found: usize },
    #[error("{0} ids for {1} vectors")]
    IdCountMismatch(usize, usize),
    #[error("clustering engine failed: {0}")]
    Engine(String),
    #[error("{path}: {msg}")]
    Persist { path: String, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub sentence_id: String,
    pub cluster_code: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterParams {
    pub min_cluster_size: usize,
    /// Neighbourhood size for core distances; defaults to `min_cluster_size`.
    pub min_samples: Option<usize>,
    /// Overrides the 0.8 rule when set.
    pub epsilon: Option<f64>,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            min_cluster_size: 10,
            min_samples: None,
            epsilon: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub assignments: Vec<ClusterAssignment>,
    pub gamma: usize,
    pub epsilon: f64,
    pub params: ClusterParams,
}

impl Clustering {
    pub fn codes(&self) -> Vec<usize> {
        self.assignments.iter().map(|a| a.cluster_code).collect()
    }

    pub fn code_of(&self, sentence_id: &str) -> Option<usize> {
        self.assignments
            .iter()
            .find(|a| a.sentence_id == sentence_id)
            .map(|a| a.cluster_code)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Pairwise `1 - cosine` distances; symmetric with an exact zero diagonal.
pub fn distance_matrix(vectors: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, ClusteringError> {
    let n = vectors.len();
    if n < 2 {
        return Err(ClusteringError::TooFewVectors(n));
    }
    let dims = vectors[0].len();
    let mut norms = Vec::with_capacity(n);
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != dims {
            return Err(ClusteringError::DimensionMismatch {
                index: i,
                expected: dims,
                found: v.len(),
            });
        }
        let nv = norm(v);
        if nv == 0.0 {
            return Err(ClusteringError::ZeroVector(i));
        }
        norms.push(nv);
    }
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|a| {
            (a + 1..n)
                .map(|b| {
                    let dot: f64 = vectors[a].iter().zip(&vectors[b]).map(|(x, y)| x * y).sum();
                    (1.0 - dot / (norms[a] * norms[b])).clamp(0.0, 2.0)
                })
                .collect()
        })
        .collect();
    let mut m = vec![vec![0.0; n]; n];
    for a in 0..n {
        for (k, &d) in upper[a].iter().enumerate() {
            m[a][a + 1 + k] = d;
            m[a + 1 + k][a] = d;
        }
    }
    Ok(m)
}

/// `min + 0.8 * (max - min)`.
pub fn select_epsilon(values_min: f64, values_max: f64) -> f64 {
    values_min + 0.8 * (values_max - values_min)
}

/// Smallest and largest entries off the diagonal of a square matrix.
pub fn off_diagonal_range(m: &[Vec<f64>]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (a, row) in m.iter().enumerate() {
        for (b, &x) in row.iter().enumerate() {
            if a != b {
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
    }
    (lo, hi)
}

/// Dense codes in first-appearance order; `None` becomes 0.
pub fn renumber(labels: &[Option<usize>]) -> Vec<usize> {
    let mut seen = std::collections::HashMap::new();
    labels
        .iter()
        .map(|l| match l {
            None => 0,
            Some(raw) => {
                let next = seen.len() + 1;
                *seen.entry(*raw).or_insert(next)
            }
        })
        .collect()
}

/// Clusters with the reference engine.
pub fn cluster(
    ids: &[String],
    vectors: &[Vec<f64>],
    params: &ClusterParams,
) -> Result<Clustering, ClusteringError> {
    cluster_with(&HdbscanEngine, ids, vectors, params)
}

pub fn cluster_with(
    engine: &dyn ClusterEngine,
    ids: &[String],
    vectors: &[Vec<f64>],
    params: &ClusterParams,
) -> Result<Clustering, ClusteringError> {
    if ids.len() != vectors.len() {
        return Err(ClusteringError::IdCountMismatch(ids.len(), vectors.len()));
    }
    let distances = distance_matrix(vectors)?;
    let epsilon = params.epsilon.unwrap_or_else(|| {
        let (lo, hi) = off_diagonal_range(&distances);
        select_epsilon(lo, hi)
    });
    let raw = engine.partition(&distances, params, epsilon)?;
    let codes = renumber(&raw);
    let gamma = codes.iter().copied().max().unwrap_or(0);
    Ok(Clustering {
        assignments: ids
            .iter()
            .zip(codes)
            .map(|(id, cluster_code)| ClusterAssignment {
                sentence_id: id.clone(),
                cluster_code,
            })
            .collect(),
        gamma,
        epsilon,
        params: params.clone(),
    })
}
