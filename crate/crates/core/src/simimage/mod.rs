//! Case-pair similarity images.
//!
//! Each case's disputes are reordered by cluster code, the two lists are
//! concatenated, and the pairwise cosine similarities form a square matrix Z.
//! Z is projected to 8-bit grey with a knee at the 0.8 point of its value
//! range (the upper half of the grey scale covers the top fifth of values)
//! and resized bilinearly for the CNN.

mod cache;
mod grey;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use cache::{read_pgm, write_pgm, ImageCache, ImageKey, ImageSidecar};
pub use grey::{project_grey, project_value, resize_bilinear};

pub const DEFAULT_SIDE: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum SimImageError {
    #[error("zero-norm vector")]
    ZeroVector,
    #[error("vectors have {0} and {1} dims")]
    DimensionMismatch(usize, usize),
    #[error("case {0} has no disputes")]
    EmptyCase(String),
    #[error("case {case_id}: {vectors} vectors but {codes} cluster codes")]
    CodeCountMismatch { case_id: String, vectors: usize, codes: usize },
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

/// One side of a case pair: a vector and a cluster code per dispute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseInput {
    pub case_id: String,
    pub vectors: Vec<Vec<f64>>,
    pub codes: Vec<usize>,
}

impl CaseInput {
    fn check(&self) -> Result<(), SimImageError> {
        if self.vectors.is_empty() {
            return Err(SimImageError::EmptyCase(self.case_id.clone()));
        }
        if self.vectors.len() != self.codes.len() {
            return Err(SimImageError::CodeCountMismatch {
                case_id: self.case_id.clone(),
                vectors: self.vectors.len(),
                codes: self.codes.len(),
            });
        }
        Ok(())
    }

    fn reordered(&self) -> impl Iterator<Item = &Vec<f64>> {
        reorder_by_cluster(&self.codes).into_iter().map(|i| &self.vectors[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityImage {
    pub pixels: Array2<u8>,
    /// Side of Z before resizing, |K_i| + |K_j|.
    pub raw_side: usize,
    pub epsilon_used: f64,
}

impl SimilarityImage {
    pub fn side(&self) -> usize {
        self.pixels.nrows()
    }
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, SimImageError> {
    if a.len() != b.len() {
        return Err(SimImageError::DimensionMismatch(a.len(), b.len()));
    }
    let na = crate::clustering::norm(a);
    let nb = crate::clustering::norm(b);
    if na == 0.0 || nb == 0.0 {
        return Err(SimImageError::ZeroVector);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Indices that stably sort `codes` ascending.
pub fn reorder_by_cluster(codes: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..codes.len()).collect();
    order.sort_by_key(|&i| codes[i]);
    order
}

/// Cosine similarities over the reordered disputes of `i` followed by `j`.
/// Symmetric by construction, with an exact unit diagonal.
pub fn build_z(i: &CaseInput, j: &CaseInput) -> Result<Array2<f64>, SimImageError> {
    i.check()?;
    j.check()?;
    let k: Vec<&Vec<f64>> = i.reordered().chain(j.reordered()).collect();
    let n = k.len();
    let mut z = Array2::from_elem((n, n), 1.0);
    for a in 0..n {
        if crate::clustering::norm(k[a]) == 0.0 {
            return Err(SimImageError::ZeroVector);
        }
        for b in a + 1..n {
            let s = cosine_similarity(k[a], k[b])?;
            z[[a, b]] = s;
            z[[b, a]] = s;
        }
    }
    Ok(z)
}

/// Builds Z, projects it with the 0.8 knee over its own value range, and
/// resizes to `side`.
pub fn make_image(i: &CaseInput, j: &CaseInput, side: usize) -> Result<SimilarityImage, SimImageError> {
    let z = build_z(i, j)?;
    let (lo, hi) = z
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let epsilon = crate::clustering::select_epsilon(lo, hi);
    let grey = project_grey(&z, epsilon);
    Ok(SimilarityImage {
        pixels: resize_bilinear(&grey, side),
        raw_side: z.nrows(),
        epsilon_used: epsilon,
    })
}
