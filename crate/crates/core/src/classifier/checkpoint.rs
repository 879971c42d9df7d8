use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ClassifierError, Cnn, CnnSpec, TrainConfig};

/// Portable description stored next to the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub spec: CnnSpec,
    pub train: TrainConfig,
    pub seed: u64,
    pub metrics: serde_json::Value,
    pub weights_sha256: String,
}

fn io(path: &Path, e: impl ToString) -> ClassifierError {
    ClassifierError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

/// Writes `<stem>.bin` (little-endian f32 parameters in layer order) and
/// `<stem>.json`.
pub fn save_checkpoint(
    net: &Cnn,
    train: &TrainConfig,
    metrics: serde_json::Value,
    stem: &Path,
) -> Result<CheckpointMeta, ClassifierError> {
    let bytes: Vec<u8> = net
        .params
        .iter()
        .flat_map(|p| p.iter().flat_map(|v| v.to_le_bytes()).collect::<Vec<u8>>())
        .collect();
    let meta = CheckpointMeta {
        spec: net.spec.clone(),
        train: train.clone(),
        seed: train.seed,
        metrics,
        weights_sha256: hex::encode(Sha256::digest(&bytes)),
    };
    if let Some(parent) = stem.parent() {
        std::fs::create_dir_all(parent).map_err(|e| io(stem, e))?;
    }
    let bin = stem.with_extension("bin");
    let json = stem.with_extension("json");
    std::fs::write(&bin, bytes).map_err(|e| io(&bin, e))?;
    std::fs::write(&json, serde_json::to_string_pretty(&meta).unwrap()).map_err(|e| io(&json, e))?;
    Ok(meta)
}

pub fn load_checkpoint(stem: &Path) -> Result<(Cnn, CheckpointMeta), ClassifierError> {
    let bin = stem.with_extension("bin");
    let json = stem.with_extension("json");
    let meta: CheckpointMeta =
        serde_json::from_str(&std::fs::read_to_string(&json).map_err(|e| io(&json, e))?).map_err(|e| io(&json, e))?;
    meta.spec.validate()?;
    let bytes = std::fs::read(&bin).map_err(|e| io(&bin, e))?;
    if hex::encode(Sha256::digest(&bytes)) != meta.weights_sha256 {
        return Err(io(&bin, "weights checksum mismatch"));
    }
    let mut values = bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()));
    let params = meta
        .spec
        .param_shapes()
        .into_iter()
        .map(|shape| Array2::from_shape_simple_fn(shape, || values.next().unwrap_or(f32::NAN)))
        .collect::<Vec<_>>();
    if values.next().is_some() || params.iter().any(|p| p.iter().any(|v| v.is_nan())) {
        return Err(io(&bin, "weight count does not match the architecture"));
    }
    Ok((Cnn { spec: meta.spec.clone(), params }, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let net = Cnn::new(CnnSpec::default(), 21).unwrap();
        let stem = dir.path().join("model");
        let meta = save_checkpoint(&net, &TrainConfig::default(), serde_json::json!({"f1": 0.5}), &stem).unwrap();
        let (back, meta2) = load_checkpoint(&stem).unwrap();
        assert_eq!(back, net);
        assert_eq!(meta, meta2);
        std::fs::write(stem.with_extension("bin"), [0u8; 8]).unwrap();
        assert!(load_checkpoint(&stem).is_err());
    }
}
