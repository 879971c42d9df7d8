use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder, ImageFormat};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{SimImageError, SimilarityImage};

fn io_err(path: &Path, msg: impl ToString) -> SimImageError {
    SimImageError::Io {
        path: path.display().to_string(),
        msg: msg.to_string(),
    }
}

/// Writes an 8-bit binary grey map (P5).
pub fn write_pgm(path: &Path, pixels: &Array2<u8>) -> Result<(), SimImageError> {
    let (h, w) = pixels.dim();
    let data: Vec<u8> = pixels.iter().copied().collect();
    let mut buf = Vec::new();
    PnmEncoder::new(&mut buf)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(&data, w as u32, h as u32, ExtendedColorType::L8)
        .map_err(|e| io_err(path, e))?;
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| io_err(path, e))?;
    }
    std::fs::write(path, buf).map_err(|e| io_err(path, e))
}

pub fn read_pgm(path: &Path) -> Result<Array2<u8>, SimImageError> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    let img = image::load(Cursor::new(bytes), ImageFormat::Pnm)
        .map_err(|e| io_err(path, e))?
        .into_luma8();
    let (w, h) = img.dimensions();
    Array2::from_shape_vec((h as usize, w as usize), img.into_raw()).map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSidecar {
    pub pair_id: String,
    pub raw_side: usize,
    pub epsilon_used: f64,
    pub label: Option<u8>,
}

/// Identifies one cached image.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ImageKey {
    pub pair_id: String,
    pub model_tag: String,
    pub clustering_id: String,
}

impl ImageKey {
    fn stem(&self) -> String {
        let mut h = Sha256::new();
        for part in [&self.pair_id, &self.model_tag, &self.clustering_id] {
            h.update(part.as_bytes());
            h.update([0]);
        }
        let safe: String = self
            .pair_id
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
            .take(48)
            .collect();
        format!("{safe}.{}", &hex::encode(h.finalize())[..12])
    }
}

/// Directory of `<stem>.pgm` images with `<stem>.json` sidecars.
#[derive(Debug, Clone)]
pub struct ImageCache {
    dir: PathBuf,
}

impl ImageCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ImageCache { dir: dir.into() }
    }

    pub fn paths(&self, key: &ImageKey) -> (PathBuf, PathBuf) {
        let stem = key.stem();
        (self.dir.join(format!("{stem}.pgm")), self.dir.join(format!("{stem}.json")))
    }

    pub fn get(&self, key: &ImageKey) -> Option<(SimilarityImage, ImageSidecar)> {
        let (pgm, json) = self.paths(key);
        let sidecar: ImageSidecar = serde_json::from_str(&std::fs::read_to_string(json).ok()?).ok()?;
        let pixels = read_pgm(&pgm).ok()?;
        let image = SimilarityImage {
            pixels,
            raw_side: sidecar.raw_side,
            epsilon_used: sidecar.epsilon_used,
        };
        Some((image, sidecar))
    }

    /// Writes the sidecar last, so a half-written entry is never read back.
    pub fn put(&self, key: &ImageKey, image: &SimilarityImage, label: Option<u8>) -> Result<ImageSidecar, SimImageError> {
        let (pgm, json) = self.paths(key);
        write_pgm(&pgm, &image.pixels)?;
        let sidecar = ImageSidecar {
            pair_id: key.pair_id.clone(),
            raw_side: image.raw_side,
            epsilon_used: image.epsilon_used,
            label,
        };
        let text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
        std::fs::write(&json, text).map_err(|e| io_err(&json, e))?;
        Ok(sidecar)
    }

    pub fn get_or_make(
        &self,
        key: &ImageKey,
        label: Option<u8>,
        make: impl FnOnce() -> Result<SimilarityImage, SimImageError>,
    ) -> Result<SimilarityImage, SimImageError> {
        if let Some((image, _)) = self.get(key) {
            return Ok(image);
        }
        let image = make()?;
        self.put(key, &image, label)?;
        Ok(image)
    }
}
