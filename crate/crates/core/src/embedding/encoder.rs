use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EmbeddingError, EmbeddingProvider, FinetunePair, PairCategory};

/// Backend ids accepted by [`backend`].
pub const BACKEND_IDS: [&str; 2] = ["lf", "rob"];

/// Shape of a hashed character n-gram encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub backend: String,
    pub ngram_min: usize,
    pub ngram_max: usize,
    /// Width of the hashed feature space.
    pub features: usize,
    pub dims: usize,
    pub seed: u64,
    /// When false, fine-tuning only renames the model.
    pub trainable: bool,
}

impl EncoderConfig {
    pub fn lf() -> Self {
        EncoderConfig {
            backend: "lf".into(),
            ngram_min: 1,
            ngram_max: 3,
            features: 4096,
            dims: 128,
            seed: 0x6c66,
            trainable: true,
        }
    }

    pub fn rob() -> Self {
        EncoderConfig {
            backend: "rob".into(),
            ngram_min: 1,
            ngram_max: 2,
            features: 4096,
            dims: 128,
            seed: 0x726f62,
            trainable: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FinetuneOptions {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for FinetuneOptions {
    fn default() -> Self {
        FinetuneOptions {
            epochs: 1,
            learning_rate: 0.05,
            seed: 7,
        }
    }
}

/// Looks up a stock encoder by id.
pub fn backend(id: &str) -> Result<NgramEncoder, EmbeddingError> {
    match id {
        "lf" => Ok(NgramEncoder::new(EncoderConfig::lf())),
        "rob" => Ok(NgramEncoder::new(EncoderConfig::rob())),
        other => Err(EmbeddingError::BackendUnavailable(other.to_string())),
    }
}

/// Linear projection of hashed, signed character n-gram counts.
///
/// Stands in for a transformer sentence encoder: texts sharing n-grams land
/// close in cosine terms. The projection is trainable with a cosine
/// regression loss on same/diff pairs, which is what fine-tuning does.
#[derive(Debug, Clone)]
pub struct NgramEncoder {
    config: EncoderConfig,
    model_tag: String,
    /// Row-major `dims x features`.
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SavedHeader {
    config: EncoderConfig,
    model_tag: String,
    weights_sha256: String,
}

type SparseFeatures = Vec<(usize, f64)>;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf29ce484222325, |h, &b| (h ^ b as u64).wrapping_mul(0x100000001b3))
}

impl NgramEncoder {
    pub fn new(config: EncoderConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let scale = 1.0 / (config.dims as f64).sqrt();
        let weights = (0..config.dims * config.features)
            .map(|_| rng.sample::<f64, _>(StandardNormal) * scale)
            .collect();
        NgramEncoder {
            model_tag: config.backend.clone(),
            config,
            weights,
        }
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn dims(&self) -> usize {
        self.config.dims
    }

    pub fn is_finetuned(&self) -> bool {
        self.model_tag.contains("+ft")
    }

    fn features(&self, text: &str) -> SparseFeatures {
        let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        let mut counts = std::collections::BTreeMap::<usize, f64>::new();
        let mut buf = [0u8; 4];
        for n in self.config.ngram_min..=self.config.ngram_max {
            for gram in chars.windows(n) {
                let mut bytes = Vec::with_capacity(4 * n + 1);
                bytes.push(n as u8);
                for c in gram {
                    bytes.extend_from_slice(c.encode_utf8(&mut buf).as_bytes());
                }
                let h = fnv1a(&bytes);
                let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
                *counts.entry((h % self.config.features as u64) as usize).or_default() += sign;
            }
        }
        counts.into_iter().filter(|&(_, v)| v != 0.0).collect()
    }

    fn project(&self, x: &SparseFeatures) -> Vec<f64> {
        let f = self.config.features;
        (0..self.config.dims)
            .map(|d| {
                let row = &self.weights[d * f..(d + 1) * f];
                x.iter().map(|&(j, v)| row[j] * v).sum()
            })
            .collect()
    }

    /// Returns a copy trained on `pairs`. Untrainable configs keep their
    /// weights and only gain the `+ft` tag.
    pub fn finetune(&self, pairs: &[FinetunePair], options: &FinetuneOptions) -> NgramEncoder {
        let mut tuned = self.clone();
        tuned.model_tag = format!("{}+ft", self.config.backend);
        if !self.config.trainable {
            return tuned;
        }
        let encoded: Vec<(SparseFeatures, SparseFeatures, f64)> = pairs
            .iter()
            .map(|p| {
                let target = match p.category {
                    PairCategory::Same => 1.0,
                    PairCategory::Diff => 0.0,
                };
                (self.features(&p.sentence_a), self.features(&p.sentence_b), target)
            })
            .collect();
        let mut order: Vec<usize> = (0..encoded.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        for _ in 0..options.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let (xa, xb, target) = &encoded[i];
                tuned.sgd_step(xa, xb, *target, options.learning_rate);
            }
        }
        let digest = Sha256::digest(tuned.weight_bytes());
        tuned.model_tag = format!("{}+ft.{}", self.config.backend, &hex::encode(digest)[..8]);
        tuned
    }

    /// One step of `(cos(u, v) - target)^2` on a single pair.
    fn sgd_step(&mut self, xa: &SparseFeatures, xb: &SparseFeatures, target: f64, lr: f64) {
        let u = self.project(xa);
        let v = self.project(xb);
        let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nu < 1e-12 || nv < 1e-12 {
            return;
        }
        let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
        let cos = dot / (nu * nv);
        let g = 2.0 * (cos - target);
        let f = self.config.features;
        for d in 0..self.config.dims {
            let du = g * (v[d] / (nu * nv) - cos * u[d] / (nu * nu));
            let dv = g * (u[d] / (nu * nv) - cos * v[d] / (nv * nv));
            let row = &mut self.weights[d * f..(d + 1) * f];
            for &(j, x) in xa {
                row[j] -= lr * du * x;
            }
            for &(j, x) in xb {
                row[j] -= lr * dv * x;
            }
        }
    }

    fn weight_bytes(&self) -> Vec<u8> {
        self.weights.iter().flat_map(|w| w.to_le_bytes()).collect()
    }

    /// Writes `<stem>.json` and `<stem>.bin` (little-endian f64 weights).
    pub fn save(&self, stem: &Path) -> Result<(), EmbeddingError> {
        let bytes = self.weight_bytes();
        let header = SavedHeader {
            config: self.config.clone(),
            model_tag: self.model_tag.clone(),
            weights_sha256: hex::encode(Sha256::digest(&bytes)),
        };
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| EmbeddingError::Io { path, source }
        };
        let json_path = stem.with_extension("json");
        let bin_path = stem.with_extension("bin");
        if let Some(parent) = stem.parent() {
            std::fs::create_dir_all(parent).map_err(io(parent))?;
        }
        std::fs::write(&bin_path, bytes).map_err(io(&bin_path))?;
        let text = serde_json::to_string_pretty(&header).expect("header serializes");
        std::fs::write(&json_path, text).map_err(io(&json_path))
    }

    pub fn load(stem: &Path) -> Result<Self, EmbeddingError> {
        let json_path = stem.with_extension("json");
        let bin_path = stem.with_extension("bin");
        let format = |path: &Path, msg: String| EmbeddingError::Format {
            path: path.display().to_string(),
            line: 0,
            msg,
        };
        let text = std::fs::read_to_string(&json_path).map_err(|source| EmbeddingError::Io {
            path: json_path.display().to_string(),
            source,
        })?;
        let header: SavedHeader =
            serde_json::from_str(&text).map_err(|e| format(&json_path, e.to_string()))?;
        let bytes = std::fs::read(&bin_path).map_err(|source| EmbeddingError::Io {
            path: bin_path.display().to_string(),
            source,
        })?;
        if hex::encode(Sha256::digest(&bytes)) != header.weights_sha256 {
            return Err(format(&bin_path, "weights checksum mismatch".into()));
        }
        let expected = header.config.dims * header.config.features;
        if bytes.len() != expected * 8 {
            return Err(format(&bin_path, format!("expected {expected} weights")));
        }
        let weights = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(NgramEncoder {
            config: header.config,
            model_tag: header.model_tag,
            weights,
        })
    }
}

impl EmbeddingProvider for NgramEncoder {
    fn model_tag(&self) -> &str {
        &self.model_tag
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbeddingError> {
        use rayon::prelude::*;
        Ok(texts.par_iter().map(|t| self.project(&self.features(t))).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        dot / (na * nb)
    }

    fn embed1(e: &NgramEncoder, t: &str) -> Vec<f64> {
        e.embed(&[t]).unwrap().remove(0)
    }

    #[test]
    fn unknown_backend_is_unavailable() {
        assert!(matches!(backend("bert"), Err(EmbeddingError::BackendUnavailable(_))));
    }

    #[test]
    fn shared_ngrams_raise_similarity() {
        let e = backend("lf").unwrap();
        let a = embed1(&e, "被告是否積欠原告工資");
        let b = embed1(&e, "被告是否積欠原告加班費");
        let c = embed1(&e, "系爭契約是否業經合法終止");
        assert!(cos(&a, &b) > cos(&a, &c) + 0.2);
        assert_eq!(a, embed1(&e, "被告 是否積欠原告工資"));
    }

    #[test]
    fn stub_finetune_renames_but_keeps_vectors() {
        let mut cfg = EncoderConfig::rob();
        cfg.trainable = false;
        let e = NgramEncoder::new(cfg);
        let pair = FinetunePair {
            sentence_a: "甲".into(),
            sentence_b: "乙".into(),
            category: PairCategory::Same,
        };
        let t = e.finetune(&[pair], &FinetuneOptions::default());
        assert_eq!(t.model_tag(), "rob+ft");
        assert_eq!(embed1(&t, "工資"), embed1(&e, "工資"));
    }

    #[test]
    fn training_moves_pairs_toward_targets() {
        let e = backend("lf").unwrap();
        let same = FinetunePair {
            sentence_a: "是否積欠工資".into(),
            sentence_b: "資遣費數額為何".into(),
            category: PairCategory::Same,
        };
        let diff = FinetunePair {
            sentence_a: "是否積欠工資".into(),
            sentence_b: "是否積欠加班費".into(),
            category: PairCategory::Diff,
        };
        let before_same = cos(&embed1(&e, &same.sentence_a), &embed1(&e, &same.sentence_b));
        let before_diff = cos(&embed1(&e, &diff.sentence_a), &embed1(&e, &diff.sentence_b));
        let opts = FinetuneOptions { epochs: 20, ..Default::default() };
        let t = e.finetune(&[same.clone(), diff.clone()], &opts);
        assert_ne!(t.model_tag(), e.model_tag());
        assert!(t.model_tag().starts_with("lf+ft."));
        let after_same = cos(&embed1(&t, &same.sentence_a), &embed1(&t, &same.sentence_b));
        let after_diff = cos(&embed1(&t, &diff.sentence_a), &embed1(&t, &diff.sentence_b));
        assert!(after_same > before_same);
        assert!(after_diff < before_diff);
    }

    #[test]
    fn save_load_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let e = backend("rob").unwrap();
        let pair = FinetunePair {
            sentence_a: "甲乙".into(),
            sentence_b: "丙丁".into(),
            category: PairCategory::Diff,
        };
        let t = e.finetune(&[pair], &FinetuneOptions::default());
        let stem = dir.path().join("enc");
        t.save(&stem).unwrap();
        let back = NgramEncoder::load(&stem).unwrap();
        assert_eq!(back.model_tag(), t.model_tag());
        assert_eq!(back.weights, t.weights);
    }
}
