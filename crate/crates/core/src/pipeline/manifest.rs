use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;

pub fn sha256_file(path: &Path) -> Result<String, PipelineError> {
    let mut f = std::fs::File::open(path).map_err(|e| PipelineError::data(format!("{}: {e}", path.display())))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

pub fn sha256_json<T: Serialize>(value: &T) -> String {
    hex::encode(Sha256::digest(serde_json::to_vec(value).expect("value serializes")))
}

/// Input and output hashes of one stage product.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub inputs: BTreeMap<String, String>,
    /// Output file names (relative to the manifest) and their hashes.
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(stage: &str) -> Self {
        Manifest {
            stage: stage.to_string(),
            ..Default::default()
        }
    }

    pub fn input(mut self, name: &str, hash: impl Into<String>) -> Self {
        self.inputs.insert(name.to_string(), hash.into());
        self
    }

    /// `<dir>/<item>.manifest.json`, or `<dir>/manifest.json` for a whole stage.
    pub fn path(dir: &Path, item: Option<&str>) -> PathBuf {
        match item {
            Some(item) => dir.join(format!("{item}.manifest.json")),
            None => dir.join("manifest.json"),
        }
    }

    pub fn read(path: &Path) -> Option<Manifest> {
        serde_json::from_str(&std::fs::read_to_string(path).ok()?).ok()
    }

    /// Hashes `outputs` (relative to `path`'s directory) and writes the manifest.
    pub fn write(mut self, path: &Path, outputs: &[&str]) -> Result<Manifest, PipelineError> {
        let dir = path.parent().unwrap_or(Path::new("."));
        for name in outputs {
            self.outputs.insert(name.to_string(), sha256_file(&dir.join(name))?);
        }
        std::fs::create_dir_all(dir)?;
        std::fs::write(path, serde_json::to_string_pretty(&self).expect("manifest serializes"))?;
        Ok(self)
    }

    /// True when the manifest at `path` was written for the same inputs and
    /// its outputs are unchanged on disk.
    pub fn is_fresh(&self, path: &Path) -> bool {
        let Some(old) = Manifest::read(path) else {
            return false;
        };
        let dir = path.parent().unwrap_or(Path::new("."));
        old.stage == self.stage
            && old.inputs == self.inputs
            && old
                .outputs
                .iter()
                .all(|(name, hash)| sha256_file(&dir.join(name)).is_ok_and(|h| &h == hash))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staleness() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.txt"), "x").unwrap();
        let path = Manifest::path(dir.path(), Some("a"));
        let m = Manifest::new("s").input("labels", "h1");
        assert!(!m.is_fresh(&path));
        m.clone().write(&path, &["a.txt"]).unwrap();
        assert!(m.is_fresh(&path));
        assert!(!Manifest::new("s").input("labels", "h2").is_fresh(&path));
        std::fs::write(dir.path().join("a.txt"), "y").unwrap();
        assert!(!m.is_fresh(&path));
    }

    #[test]
    fn file_hash_matches_digest() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f");
        std::fs::write(&p, "abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
