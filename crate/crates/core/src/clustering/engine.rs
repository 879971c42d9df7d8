use hdbscan::{DistanceMetric, Hdbscan, HdbscanHyperParams};

use super::{ClusterParams, ClusteringError};

/// Partitions points given their distance matrix. `None` marks noise; the
/// raw labels only need to be consistent within one call.
pub trait ClusterEngine: Send + Sync {
    fn partition(
        &self,
        distances: &[Vec<f64>],
        params: &ClusterParams,
        epsilon: f64,
    ) -> Result<Vec<Option<usize>>, ClusteringError>;
}

/// HDBSCAN with excess-of-mass selection and a selection epsilon.
///
/// The root of the hierarchy is only chosen when nothing else would be: if
/// the ordinary selection leaves every point as noise, the run is repeated
/// with a single cluster allowed.
#[derive(Debug, Default, Clone, Copy)]
pub struct HdbscanEngine;

impl HdbscanEngine {
    fn run(
        distances: &[Vec<f64>],
        params: &ClusterParams,
        epsilon: f64,
        allow_single: bool,
    ) -> Result<Vec<i32>, ClusteringError> {
        let hp = HdbscanHyperParams::builder()
            .min_cluster_size(params.min_cluster_size)
            .min_samples(params.min_samples.unwrap_or(params.min_cluster_size))
            .dist_metric(DistanceMetric::Precalculated)
            .epsilon(epsilon.max(0.0))
            .allow_single_cluster(allow_single)
            .build();
        Hdbscan::new(distances, hp)
            .cluster()
            .map_err(|e| ClusteringError::Engine(e.to_string()))
    }
}

impl ClusterEngine for HdbscanEngine {
    fn partition(
        &self,
        distances: &[Vec<f64>],
        params: &ClusterParams,
        epsilon: f64,
    ) -> Result<Vec<Option<usize>>, ClusteringError> {
        let n = distances.len();
        let min_samples = params.min_samples.unwrap_or(params.min_cluster_size);
        if params.min_cluster_size < 2 {
            return Err(ClusteringError::Engine("min_cluster_size must be at least 2".into()));
        }
        if n < params.min_cluster_size || n < min_samples.max(1) {
            return Ok(vec![None; n]);
        }
        let mut labels = Self::run(distances, params, epsilon, false)?;
        if labels.iter().all(|&l| l < 0) {
            labels = Self::run(distances, params, epsilon, true)?;
        }
        Ok(labels
            .into_iter()
            .map(|l| usize::try_from(l).ok())
            .collect())
    }
}
