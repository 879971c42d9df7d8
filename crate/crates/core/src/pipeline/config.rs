use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{PipelineError, SourceKind};
use crate::classifier::{BarelyPolicy, CnnSpec, SplitSpec, TrainConfig};
use crate::clustering::ClusterParams;
use crate::corpus::{CaseFilter, DisputeExtractor};
use crate::embedding::{EncoderConfig, FinetuneOptions};
use crate::llm::{LlmProfile, PromptTemplates};

/// Everything a run needs, read from one TOML document.
///
/// Relative paths in a config file are taken relative to that file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Judgment files, directories, or `.tar.gz` archives.
    pub corpus: Vec<PathBuf>,
    /// JSON-lines file of labeled case pairs.
    pub labels: PathBuf,
    pub output: PathBuf,
    /// Root of every derived seed.
    pub seed: u64,
    pub repeats: usize,
    /// Matrix cells run at once.
    pub workers: usize,
    pub image_side: usize,
    pub barely: BarelyPolicy,
    pub filter: CaseFilter,
    pub extractor: DisputeExtractor,
    pub llm: LlmSettings,
    pub embedding: EmbeddingSettings,
    /// Global dispute clustering for image reordering.
    pub clustering: ClusterParams,
    pub cnn: CnnSpec,
    /// The seed field is replaced per repeat.
    pub train: TrainConfig,
    /// The seed field is replaced per repeat.
    pub split: SplitSpec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: Vec::new(),
            labels: PathBuf::from("labels.jsonl"),
            output: PathBuf::from("out"),
            seed: 0,
            repeats: 30,
            workers: 1,
            image_side: crate::simimage::DEFAULT_SIDE,
            barely: BarelyPolicy::default(),
            filter: CaseFilter::default(),
            extractor: DisputeExtractor::default(),
            llm: LlmSettings::default(),
            embedding: EmbeddingSettings::default(),
            clustering: ClusterParams::default(),
            cnn: CnnSpec::default(),
            train: TrainConfig::default(),
            split: SplitSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSettings {
    pub llm_a: LlmSourceConfig,
    pub llm_b: LlmSourceConfig,
    pub templates: PromptTemplates,
    /// Cases in flight per model.
    pub workers: usize,
}

impl Default for LlmSettings {
    fn default() -> Self {
        LlmSettings {
            llm_a: LlmSourceConfig::new(LlmProfile::gpt35()),
            llm_b: LlmSourceConfig::new(LlmProfile::gpt4()),
            templates: PromptTemplates::default(),
            workers: 1,
        }
    }
}

/// One LLM dispute source. With `replies` set, answers come from a canned
/// reply file; otherwise from a chat-completions endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmSourceConfig {
    pub profile: LlmProfile,
    #[serde(default)]
    pub replies: Option<PathBuf>,
    #[serde(default)]
    pub endpoint: Option<String>,
    /// Environment variable holding the API key.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    /// Minimum spacing between requests.
    #[serde(default)]
    pub min_interval_ms: u64,
}

fn default_key_env() -> String {
    "OPENAI_API_KEY".into()
}

impl LlmSourceConfig {
    pub fn new(profile: LlmProfile) -> Self {
        LlmSourceConfig {
            profile,
            replies: None,
            endpoint: None,
            api_key_env: default_key_env(),
            min_interval_ms: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSettings {
    pub backends: Vec<EncoderConfig>,
    pub finetune: FinetuneOptions,
    /// Fine-tuning only renames the model (vectors unchanged).
    pub stub_finetune: bool,
    /// Clustering of the fine-tuning sentences.
    pub cluster: ClusterParams,
    /// Clusters smaller than this are dropped before pair generation.
    pub prune_min_size: usize,
    /// Sample size per pair category.
    pub pairs_per_category: usize,
}

impl Default for EmbeddingSettings {
    fn default() -> Self {
        EmbeddingSettings {
            backends: vec![EncoderConfig::lf(), EncoderConfig::rob()],
            finetune: FinetuneOptions::default(),
            stub_finetune: false,
            cluster: ClusterParams::default(),
            prune_min_size: 10,
            pairs_per_category: 50_000,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Config(e.to_string())
}

/// Sets `dotted.key = value` in `table`, creating tables on the way. The
/// value is read as a TOML literal, falling back to a plain string.
fn set_dotted(table: &mut toml::Table, key: &str, value: &str) -> Result<(), PipelineError> {
    let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(config_err(format!("bad override key {key:?}")));
    }
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| config_err(format!("override {key:?}: {part} is not a table")))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(())
}

impl PipelineConfig {
    /// Parses a config document, applying `key=value` overrides first.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, PipelineError> {
        let mut table: toml::Table = toml::from_str(text).map_err(config_err)?;
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| config_err(format!("override {o:?} is not key=value")))?;
            set_dotted(&mut table, k.trim(), v.trim())?;
        }
        table.try_into().map_err(config_err)
    }

    /// Reads `path` and resolves its relative paths against its directory.
    /// Override values that are paths should already be absolute.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml_str(&text, overrides)?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.corpus.iter_mut().for_each(fix);
        fix(&mut self.labels);
        fix(&mut self.output);
        for src in [&mut self.llm.llm_a, &mut self.llm.llm_b] {
            if let Some(p) = src.replies.as_mut() {
                fix(p);
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.repeats == 0 {
            return Err(config_err("repeats must be at least 1"));
        }
        if self.workers == 0 || self.llm.workers == 0 {
            return Err(config_err("worker counts must be at least 1"));
        }
        self.cnn.validate().map_err(config_err)?;
        if self.image_side != self.cnn.input_side {
            return Err(config_err(format!(
                "image_side {} differs from cnn.input_side {}",
                self.image_side, self.cnn.input_side
            )));
        }
        self.split.validate().map_err(config_err)?;
        self.filter.validate().map_err(config_err)?;
        if self.train.batch_size == 0 || self.train.max_epochs == 0 {
            return Err(config_err("train.batch_size and train.max_epochs must be positive"));
        }
        let ids = self.backend_ids();
        if ids.is_empty() {
            return Err(config_err("no embedding backends configured"));
        }
        for (i, id) in ids.iter().enumerate() {
            if id.is_empty() || id.starts_with("ft") || ids[..i].contains(id) {
                return Err(config_err(format!("invalid or repeated backend id {id:?}")));
            }
        }
        for kind in SourceKind::LLM {
            let src = self.source_config(kind).expect("llm source");
            src.profile.validate().map_err(config_err)?;
            if let Some(p) = &src.replies {
                if !p.exists() {
                    return Err(config_err(format!("{}: reply file {} not found", kind.key(), p.display())));
                }
            }
        }
        if self.corpus.is_empty() {
            return Err(config_err("no corpus paths configured"));
        }
        for p in self.corpus.iter().chain([&self.labels]) {
            if !p.exists() {
                return Err(config_err(format!("{} not found", p.display())));
            }
        }
        Ok(())
    }

    pub fn backend_ids(&self) -> Vec<String> {
        self.embedding.backends.iter().map(|b| b.backend.clone()).collect()
    }

    /// Encoder settings for `backend`, with the stub switch applied.
    pub fn encoder_config(&self, backend: &str) -> Result<EncoderConfig, PipelineError> {
        let mut cfg = self
            .embedding
            .backends
            .iter()
            .find(|b| b.backend == backend)
            .cloned()
            .ok_or_else(|| config_err(format!("backend {backend:?} is not configured")))?;
        if self.embedding.stub_finetune {
            cfg.trainable = false;
        }
        Ok(cfg)
    }

    pub fn source_config(&self, kind: SourceKind) -> Option<&LlmSourceConfig> {
        match kind {
            SourceKind::Court => None,
            SourceKind::LlmA => Some(&self.llm.llm_a),
            SourceKind::LlmB => Some(&self.llm.llm_b),
        }
    }

    pub fn stage_dir(&self, stage: &str) -> PathBuf {
        self.output.join(stage)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = PipelineConfig::default();
        let back = PipelineConfig::from_toml_str(&c.to_toml(), &[]).unwrap();
        assert_eq!(back.repeats, 30);
        assert_eq!(back.backend_ids(), ["lf", "rob"]);
        assert_eq!(back.llm.llm_b.profile, LlmProfile::gpt4());
        assert_eq!(back.extractor.patterns(), c.extractor.patterns());
    }

    #[test]
    fn partial_tables_and_overrides() {
        let text = "repeats = 5\n[cnn]\ndropout_rate = 0.5\n[train]\npatience = 3\n";
        let c = PipelineConfig::from_toml_str(
            text,
            &["repeats=2".into(), "clustering.min_cluster_size=4".into(), "output=/tmp/x y".into()],
        )
        .unwrap();
        assert_eq!(c.repeats, 2);
        assert_eq!(c.cnn.dropout_rate, 0.5);
        assert_eq!(c.cnn.input_side, 32);
        assert_eq!(c.train.patience, 3);
        assert_eq!(c.train.batch_size, 32);
        assert_eq!(c.clustering.min_cluster_size, 4);
        assert_eq!(c.output, PathBuf::from("/tmp/x y"));
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let e = PipelineConfig::from_toml_str("repeets = 3", &[]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(PipelineConfig::from_toml_str("", &["noequals".into()]).is_err());
    }

    #[test]
    fn validation() {
        let dir = tempfile::tempdir().unwrap();
        let labels = dir.path().join("labels.jsonl");
        std::fs::write(&labels, "").unwrap();
        let mut c = PipelineConfig {
            corpus: vec![dir.path().to_path_buf()],
            labels,
            ..Default::default()
        };
        assert!(c.validate().is_ok());
        c.repeats = 0;
        assert!(c.validate().is_err());
        c.repeats = 1;
        c.image_side = 16;
        assert!(c.validate().is_err());
        c.image_side = 32;
        c.labels = dir.path().join("missing.jsonl");
        assert!(c.validate().is_err());
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let mut c = PipelineConfig::from_toml_str("corpus = [\"docs\"]\nlabels = \"/abs/l.jsonl\"", &[]).unwrap();
        c.resolve_paths(Path::new("/data/run"));
        assert_eq!(c.corpus, [PathBuf::from("/data/run/docs")]);
        assert_eq!(c.labels, PathBuf::from("/abs/l.jsonl"));
        assert_eq!(c.output, PathBuf::from("/data/run/out"));
    }
}
