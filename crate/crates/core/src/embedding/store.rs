use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EmbeddingError, EmbeddingProvider, EmbeddingVector};

#[derive(Serialize, Deserialize)]
struct Record {
    model_tag: String,
    sha256: String,
    dims: usize,
    /// IEEE-754 bit patterns as 16 hex digits, so values round-trip exactly.
    values: Vec<String>,
}

#[derive(Default)]
struct Cache {
    vectors: HashMap<(String, String), Vec<f64>>,
    dims: HashMap<String, usize>,
}

/// Vectors keyed by model tag and the SHA-256 of the statement text,
/// optionally backed by an append-only file.
#[derive(Default)]
pub struct VectorStore {
    path: Option<PathBuf>,
    file: Option<Mutex<File>>,
    cache: RwLock<Cache>,
}

fn text_key(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

impl VectorStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens or creates the store file at `path`.
    pub fn open(path: &Path) -> Result<Self, EmbeddingError> {
        let io = |source| EmbeddingError::Io {
            path: path.display().to_string(),
            source,
        };
        let format = |line: usize, msg: String| EmbeddingError::Format {
            path: path.display().to_string(),
            line,
            msg,
        };
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
        let mut cache = Cache::default();
        if path.exists() {
            for (i, line) in BufReader::new(File::open(path).map_err(io)?).lines().enumerate() {
                let line = line.map_err(io)?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: Record = serde_json::from_str(&line).map_err(|e| format(i + 1, e.to_string()))?;
                let values = rec
                    .values
                    .iter()
                    .map(|h| u64::from_str_radix(h, 16).map(f64::from_bits))
                    .collect::<Result<Vec<f64>, _>>()
                    .map_err(|e| format(i + 1, e.to_string()))?;
                if values.len() != rec.dims {
                    return Err(format(i + 1, format!("{} values for dims {}", values.len(), rec.dims)));
                }
                cache.dims.insert(rec.model_tag.clone(), rec.dims);
                cache.vectors.insert((rec.model_tag, rec.sha256), values);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
        Ok(VectorStore {
            path: Some(path.to_path_buf()),
            file: Some(Mutex::new(file)),
            cache: RwLock::new(cache),
        })
    }

    pub fn len(&self) -> usize {
        self.cache.read().unwrap().vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, model_tag: &str, text: &str) -> Option<Vec<f64>> {
        let cache = self.cache.read().unwrap();
        cache.vectors.get(&(model_tag.to_string(), text_key(text))).cloned()
    }

    fn insert(&self, model_tag: &str, entries: Vec<(String, Vec<f64>)>) -> Result<(), EmbeddingError> {
        let mut cache = self.cache.write().unwrap();
        if let Some(file) = &self.file {
            let mut buf = String::new();
            for (key, values) in &entries {
                let rec = Record {
                    model_tag: model_tag.to_string(),
                    sha256: key.clone(),
                    dims: values.len(),
                    values: values.iter().map(|v| format!("{:016x}", v.to_bits())).collect(),
                };
                buf.push_str(&serde_json::to_string(&rec).expect("records serialize"));
                buf.push('\n');
            }
            let mut file = file.lock().unwrap();
            file.write_all(buf.as_bytes())
                .and_then(|_| file.flush())
                .map_err(|source| EmbeddingError::Io {
                    path: self.path.as_ref().unwrap().display().to_string(),
                    source,
                })?;
        }
        for (key, values) in entries {
            cache.dims.insert(model_tag.to_string(), values.len());
            cache.vectors.insert((model_tag.to_string(), key), values);
        }
        Ok(())
    }
}

/// Embeds `statements` in order, serving repeats from `store`.
///
/// Only texts missing from the store reach the provider, once each.
pub fn embed_batch(
    statements: &[String],
    provider: &dyn EmbeddingProvider,
    store: &VectorStore,
) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
    if statements.is_empty() {
        return Err(EmbeddingError::EmptyBatch);
    }
    let tag = provider.model_tag().to_string();
    let keys: Vec<String> = statements.iter().map(|s| text_key(s)).collect();
    let mut missing = Vec::new();
    let known_dims = {
        let cache = store.cache.read().unwrap();
        let mut queued = std::collections::HashSet::new();
        for (i, key) in keys.iter().enumerate() {
            if !cache.vectors.contains_key(&(tag.clone(), key.clone())) && queued.insert(key.clone()) {
                missing.push(i);
            }
        }
        cache.dims.get(&tag).copied()
    };
    if !missing.is_empty() {
        let texts: Vec<&str> = missing.iter().map(|&i| statements[i].as_str()).collect();
        let out = provider.embed(&texts)?;
        if out.len() != texts.len() {
            return Err(EmbeddingError::BackendUnavailable(format!(
                "{tag} returned {} vectors for {} texts",
                out.len(),
                texts.len()
            )));
        }
        let expected = known_dims.unwrap_or(out[0].len());
        for (v, text) in out.iter().zip(&texts) {
            if v.len() != expected {
                return Err(EmbeddingError::DimensionMismatch {
                    expected,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(EmbeddingError::NonFinite(text.to_string()));
            }
        }
        store.insert(&tag, missing.iter().map(|&i| keys[i].clone()).zip(out).collect())?;
    }
    let cache = store.cache.read().unwrap();
    Ok(keys
        .into_iter()
        .map(|key| EmbeddingVector {
            model_tag: tag.clone(),
            values: cache.vectors[&(tag.clone(), key)].clone(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use std::sync::atomic::{AtomicUsize, Ordering};

    use super::*;

    struct Mock {
        tag: String,
        lens: Vec<usize>,
        calls: AtomicUsize,
    }

    impl Mock {
        fn new(tag: &str, lens: Vec<usize>) -> Self {
            Mock { tag: tag.into(), lens, calls: AtomicUsize::new(0) }
        }
    }

    impl EmbeddingProvider for Mock {
        fn model_tag(&self) -> &str {
            &self.tag
        }
        fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbeddingError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(texts
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let n = self.lens[i.min(self.lens.len() - 1)];
                    (0..n).map(|d| t.len() as f64 + d as f64 / 3.0).collect()
                })
                .collect())
        }
    }

    fn strings(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn order_and_cache() {
        let store = VectorStore::in_memory();
        let m = Mock::new("m", vec![4]);
        let v = embed_batch(&strings(&["a", "bb", "a"]), &m, &store).unwrap();
        assert_eq!(v.len(), 3);
        assert!(v.iter().all(|x| x.dims() == 4 && x.model_tag == "m"));
        assert_eq!(v[0], v[2]);
        assert_eq!(v[1].values[0], 2.0);
        assert_eq!(store.len(), 2);
        embed_batch(&strings(&["bb", "a"]), &m, &store).unwrap();
        assert_eq!(m.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn varying_lengths_are_rejected() {
        let m = Mock::new("m", vec![4, 5]);
        let err = embed_batch(&strings(&["a", "b"]), &m, &VectorStore::in_memory()).unwrap_err();
        assert!(matches!(err, EmbeddingError::DimensionMismatch { expected: 4, found: 5 }));
    }

    #[test]
    fn empty_batch_is_rejected() {
        let m = Mock::new("m", vec![4]);
        assert!(matches!(
            embed_batch(&[], &m, &VectorStore::in_memory()),
            Err(EmbeddingError::EmptyBatch)
        ));
    }

    #[test]
    fn tags_do_not_share_entries() {
        let store = VectorStore::in_memory();
        let base = Mock::new("lf", vec![3]);
        let tuned = Mock::new("lf+ft", vec![3]);
        embed_batch(&strings(&["x"]), &base, &store).unwrap();
        embed_batch(&strings(&["x"]), &tuned, &store).unwrap();
        assert_eq!(tuned.calls.load(Ordering::SeqCst), 1);
        assert_eq!(store.len(), 2);
    }

    #[test]
    fn file_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.jsonl");
        let m = Mock::new("m", vec![5]);
        let texts = strings(&["甲", "乙丙"]);
        let first = embed_batch(&texts, &m, &VectorStore::open(&path).unwrap()).unwrap();
        let reopened = VectorStore::open(&path).unwrap();
        assert_eq!(reopened.len(), 2);
        let again = embed_batch(&texts, &m, &reopened).unwrap();
        assert_eq!(m.calls.load(Ordering::SeqCst), 1);
        for (a, b) in first.iter().zip(&again) {
            let bits = |v: &EmbeddingVector| v.values.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(a), bits(b));
        }
    }
}
