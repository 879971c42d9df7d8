use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::manifest::{sha256_file, sha256_json, Manifest};
use super::{stage, ExperimentCode, PipelineConfig, PipelineError, SourceKind};
use crate::classifier::{read_labels, LabeledPair, Sample};
use crate::clustering::{cluster, load_clustering, save_clustering, Clustering};
use crate::corpus::{
    corpus_stats, load_corpus, screen, BlurRules, CorpusStats, DisputeSet, DisputeSource, RuleBasedDetector,
};
use crate::embedding::{
    embed_batch, generate_pairs, EmbeddingProvider, heldout_split, materialize_pairs, pair_counts, prune_small_clusters, sample_pairs,
    NgramEncoder, PairCategory, PairCounts, VectorStore,
};
use crate::evaluation::{macro_rouge, rouge_scores, write_rouge_report, CharSegmenter, DocRouge, RougeReport};
use crate::llm::{
    extract_party_claims, outcomes_to_dispute_sets, run_batch, CannedReplyProvider, ChainStatus, CharTokenCounter,
    Journal, LlmProvider, PartyClaims, RateLimited,
};
use crate::simimage::{make_image, CaseInput, ImageCache, ImageKey};

/// A validated config plus the handles shared by the stages of one run.
pub struct Workspace {
    config: PipelineConfig,
    store: Mutex<Option<Arc<VectorStore>>>,
    encoders: Mutex<HashMap<(String, bool), Arc<NgramEncoder>>>,
}

impl Workspace {
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        Ok(Workspace {
            config,
            store: Mutex::new(None),
            encoders: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn dir(&self, stage: &str) -> PathBuf {
        self.config.stage_dir(stage)
    }

    pub(crate) fn store(&self) -> Result<Arc<VectorStore>, PipelineError> {
        let mut slot = self.store.lock().unwrap();
        if slot.is_none() {
            *slot = Some(Arc::new(VectorStore::open(&self.dir(stage::EMBED).join("vectors.jsonl"))?));
        }
        Ok(slot.as_ref().unwrap().clone())
    }

    /// The stock encoder, or the fine-tuned one saved by the finetune stage.
    pub fn encoder(&self, backend: &str, finetuned: bool) -> Result<Arc<NgramEncoder>, PipelineError> {
        let key = (backend.to_string(), finetuned);
        if let Some(e) = self.encoders.lock().unwrap().get(&key) {
            return Ok(e.clone());
        }
        let config = self.config.encoder_config(backend)?;
        let encoder = if finetuned {
            let stem = finetuned_stem(self, backend);
            if !stem.with_extension("json").exists() {
                return Err(PipelineError::missing(
                    stage::FINETUNE,
                    format!("no fine-tuned weights for backend {backend}"),
                ));
            }
            let e = NgramEncoder::load(&stem)?;
            if e.config() != &config {
                return Err(PipelineError::missing(
                    stage::FINETUNE,
                    format!("fine-tuned {backend} weights were built with a different encoder config"),
                ));
            }
            e
        } else {
            NgramEncoder::new(config)
        };
        let encoder = Arc::new(encoder);
        self.encoders.lock().unwrap().insert(key, encoder.clone());
        Ok(encoder)
    }

    pub fn labels(&self) -> Result<Vec<LabeledPair>, PipelineError> {
        read_labels(&self.config.labels).map_err(|e| PipelineError::Data(e.to_string()))
    }
}

fn finetuned_stem(ws: &Workspace, backend: &str) -> PathBuf {
    ws.dir(stage::FINETUNE).join(format!("{backend}+ft"))
}

fn require(path: &Path, stage: &str) -> Result<(), PipelineError> {
    if path.exists() {
        Ok(())
    } else {
        Err(PipelineError::missing(stage, format!("{} not found", path.display())))
    }
}

fn court_path(ws: &Workspace) -> PathBuf {
    ws.dir(stage::INGEST).join("court.jsonl")
}

fn claims_path(ws: &Workspace) -> PathBuf {
    ws.dir(stage::INGEST).join("claims.jsonl")
}

fn llm_dir(ws: &Workspace, kind: SourceKind) -> PathBuf {
    ws.dir(stage::LLM_DISPUTES).join(kind.key())
}

fn disputes_path(ws: &Workspace, kind: SourceKind) -> PathBuf {
    match kind {
        SourceKind::Court => court_path(ws),
        _ => llm_dir(ws, kind).join("disputes.jsonl"),
    }
}

/// Dispute sets of one source, as written by the ingest or llm-disputes stage.
pub fn load_disputes(ws: &Workspace, kind: SourceKind) -> Result<Vec<DisputeSet>, PipelineError> {
    let path = disputes_path(ws, kind);
    let stage = if kind == SourceKind::Court { stage::INGEST } else { stage::LLM_DISPUTES };
    require(&path, stage)?;
    Ok(crate::jsonl::read(&path)?)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub documents: usize,
    /// Records that could not be parsed.
    pub unreadable: usize,
    pub eligible: usize,
    pub excluded: BTreeMap<String, usize>,
    pub statements: usize,
    /// Eligible cases whose party statements were found.
    pub with_claims: usize,
}

#[derive(Serialize, Deserialize)]
struct Exclusion {
    case_id: String,
    reason: crate::corpus::ExclusionReason,
}

/// Loads and screens the corpus; writes the court dispute sets and the
/// party statements of the eligible cases.
pub fn ingest(ws: &Workspace) -> Result<IngestReport, PipelineError> {
    let config = ws.config();
    let corpus = load_corpus(&config.corpus)?;
    for (origin, e) in &corpus.failures {
        log::warn!("{origin}: {e}");
    }
    let detector = RuleBasedDetector::default();
    let rules = BlurRules::default();
    let mut report = IngestReport {
        documents: corpus.docs.len(),
        unreadable: corpus.failures.len(),
        ..Default::default()
    };
    let (mut sets, mut claims, mut exclusions) = (Vec::new(), Vec::new(), Vec::new());
    for doc in &corpus.docs {
        match screen(doc, &config.filter, &config.extractor) {
            Ok(items) => {
                report.eligible += 1;
                report.statements += items.len();
                sets.push(DisputeSet::from_raw(doc.jid.clone(), DisputeSource::Court, items, &detector, &rules));
                if let Some(c) = extract_party_claims(doc) {
                    claims.push(c);
                }
            }
            Err(reason) => {
                let name = serde_json::to_value(reason).unwrap().as_str().unwrap().to_string();
                *report.excluded.entry(name).or_default() += 1;
                exclusions.push(Exclusion {
                    case_id: doc.jid.clone(),
                    reason,
                });
            }
        }
    }
    report.with_claims = claims.len();
    let dir = ws.dir(stage::INGEST);
    std::fs::create_dir_all(&dir)?;
    crate::jsonl::write(&dir.join("court.jsonl"), &sets)?;
    crate::jsonl::write(&dir.join("claims.jsonl"), &claims)?;
    crate::jsonl::write(&dir.join("exclusions.jsonl"), &exclusions)?;
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report).unwrap())?;
    Manifest::new(stage::INGEST)
        .input("documents", sha256_json(&corpus.docs))
        .input("filter", sha256_json(&(&config.filter, &config.extractor)))
        .write(
            &Manifest::path(&dir, None),
            &["court.jsonl", "claims.jsonl", "exclusions.jsonl", "report.json"],
        )?;
    Ok(report)
}

/// Per-year and per-court counts over the eligible cases.
pub fn stats(ws: &Workspace) -> Result<CorpusStats, PipelineError> {
    let config = ws.config();
    let corpus = load_corpus(&config.corpus)?;
    let eligible: Vec<_> = corpus
        .docs
        .into_iter()
        .filter(|d| screen(d, &config.filter, &config.extractor).is_ok())
        .collect();
    let stats = corpus_stats(&eligible, &config.extractor);
    let dir = ws.dir(stage::STATS);
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("stats.json"), serde_json::to_string_pretty(&stats).unwrap())?;
    Ok(stats)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LlmReport {
    pub source: String,
    pub model_id: String,
    pub cases: usize,
    pub ok: usize,
    pub dropped_too_long: usize,
    pub dropped_no_output: usize,
    /// Cases whose provider failed; rerun the stage to retry them.
    pub failed: usize,
    pub resumed: usize,
    pub provider_calls: usize,
}

fn provider_for(ws: &Workspace, kind: SourceKind) -> Result<Box<dyn LlmProvider>, PipelineError> {
    let src = ws.config().source_config(kind).expect("llm source");
    let inner: Box<dyn LlmProvider> = match (&src.replies, &src.endpoint) {
        (Some(path), _) => Box::new(CannedReplyProvider::from_jsonl(path)?),
        #[cfg(feature = "http")]
        (None, Some(endpoint)) => Box::new(
            crate::llm::HttpChatProvider::from_env(endpoint, &src.profile.model_id, &src.api_key_env)
                .map_err(|e| PipelineError::Config(e.0))?,
        ),
        #[cfg(not(feature = "http"))]
        (None, Some(_)) => {
            return Err(PipelineError::Config(format!(
                "{}: an endpoint needs the `http` feature",
                kind.key()
            )))
        }
        (None, None) => {
            return Err(PipelineError::Config(format!(
                "{}: set either `replies` or `endpoint`",
                kind.key()
            )))
        }
    };
    Ok(if src.min_interval_ms > 0 {
        Box::new(RateLimited::new(inner, Duration::from_millis(src.min_interval_ms)))
    } else {
        inner
    })
}

/// Runs the prompt chain over every case with party statements, resuming
/// from the journal, and writes the blurred LLM dispute sets.
pub fn llm_disputes(ws: &Workspace, kinds: &[SourceKind]) -> Result<Vec<LlmReport>, PipelineError> {
    let config = ws.config();
    let claims_file = claims_path(ws);
    require(&claims_file, stage::INGEST)?;
    let claims: Vec<PartyClaims> = crate::jsonl::read(&claims_file)?;
    let detector = RuleBasedDetector::default();
    let rules = BlurRules::default();
    let mut reports = Vec::new();
    for &kind in kinds.iter().filter(|k| **k != SourceKind::Court) {
        let src = config.source_config(kind).expect("llm source");
        let provider = provider_for(ws, kind)?;
        let dir = llm_dir(ws, kind);
        std::fs::create_dir_all(&dir)?;
        let manifest_path = Manifest::path(&dir, None);
        let replies_hash = match &src.replies {
            Some(p) => sha256_file(p)?,
            None => src.endpoint.clone().unwrap_or_default(),
        };
        let manifest = Manifest::new(stage::LLM_DISPUTES)
            .input("profile", sha256_json(&src.profile))
            .input("templates", sha256_json(&config.llm.templates))
            .input("provider", replies_hash);
        let journal_path = dir.join("journal.jsonl");
        if journal_path.exists() {
            let same_setup = Manifest::read(&manifest_path)
                .is_some_and(|old| old.inputs.iter().all(|(k, v)| k == "claims" || manifest.inputs.get(k) == Some(v)));
            if !same_setup {
                log::warn!("{}: model settings changed, moving the old journal aside", kind.key());
                std::fs::rename(&journal_path, dir.join("journal.stale.jsonl"))?;
            }
        }
        let journal = Journal::open(&journal_path)?;
        let batch = run_batch(
            &claims,
            &src.profile,
            provider.as_ref(),
            &CharTokenCounter,
            &config.llm.templates,
            &journal,
            config.llm.workers,
        )?;
        for (case_id, e) in &batch.failed {
            log::warn!("{}: {case_id}: {e}", kind.key());
        }
        let count = |s: ChainStatus| batch.outcomes.iter().filter(|o| o.status == s).count();
        let report = LlmReport {
            source: kind.key().to_string(),
            model_id: src.profile.model_id.clone(),
            cases: claims.len(),
            ok: count(ChainStatus::Ok),
            dropped_too_long: count(ChainStatus::DroppedTooLong),
            dropped_no_output: count(ChainStatus::DroppedNoOutput),
            failed: batch.failed.len(),
            resumed: batch.resumed,
            provider_calls: batch.outcomes.iter().map(|o| o.provider_calls as usize).sum(),
        };
        let sets = outcomes_to_dispute_sets(&batch.outcomes, &src.profile.model_id, &detector, &rules);
        crate::jsonl::write(&dir.join("disputes.jsonl"), &sets)?;
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report).unwrap())?;
        manifest
            .input("claims", sha256_file(&claims_file)?)
            .write(&manifest_path, &["disputes.jsonl", "report.json"])?;
        reports.push(report);
    }
    Ok(reports)
}

/// A seed for `tag` derived from the global seed.
pub(crate) fn derive_seed(global: u64, tag: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(global.to_le_bytes());
    h.update(tag.as_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairsReport {
    pub backend: String,
    /// Distinct statements of unlabeled cases.
    pub sentences: usize,
    /// Statements of labeled cases kept out of fine-tuning.
    pub reserved: usize,
    pub gamma: usize,
    /// Statements in clusters that survived pruning.
    pub kept: usize,
    pub available: PairCounts,
    pub sampled_same: usize,
    pub sampled_diff: usize,
}

/// Clusters the unlabeled cases' court statements with each stock encoder
/// and samples same-cluster and cross-cluster sentence pairs.
pub fn finetune_pairs(ws: &Workspace) -> Result<Vec<PairsReport>, PipelineError> {
    let config = ws.config();
    let sets = load_disputes(ws, SourceKind::Court)?;
    let statements: BTreeMap<String, Vec<String>> = sets.iter().map(|s| (s.case_id.clone(), s.items.clone())).collect();
    let labeled: BTreeSet<String> = ws
        .labels()?
        .into_iter()
        .flat_map(|p| [p.case_a, p.case_b])
        .collect();
    let split = heldout_split(&statements, &labeled);
    let mut seen = BTreeSet::new();
    let sentences: Vec<String> = split.finetune.into_iter().filter(|s| seen.insert(s.clone())).collect();
    if sentences.is_empty() {
        return Err(PipelineError::Data("no unlabeled statements to fine-tune on".into()));
    }
    let dir = ws.dir(stage::FINETUNE_PAIRS);
    std::fs::create_dir_all(&dir)?;
    let store = ws.store()?;
    let mut reports = Vec::new();
    for backend in config.backend_ids() {
        let encoder = ws.encoder(&backend, false)?;
        let vectors: Vec<Vec<f64>> = embed_batch(&sentences, encoder.as_ref(), &store)?
            .into_iter()
            .map(|v| v.values)
            .collect();
        let ids: Vec<String> = (0..sentences.len()).map(|i| format!("s{i}")).collect();
        let clustering = cluster(&ids, &vectors, &config.embedding.cluster)?;
        let codes = clustering.codes();
        let kept = prune_small_clusters(&codes, config.embedding.prune_min_size);
        let kept_codes: Vec<usize> = kept.iter().map(|&i| codes[i]).collect();
        let kept_sentences: Vec<String> = kept.iter().map(|&i| sentences[i].clone()).collect();
        let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
        for &c in &kept_codes {
            *sizes.entry(c).or_default() += 1;
        }
        let available = pair_counts(&sizes.values().copied().collect::<Vec<_>>());
        let sampled = sample_pairs(
            generate_pairs(&kept_codes),
            config.embedding.pairs_per_category,
            derive_seed(config.seed, &format!("pairs/{backend}")),
        );
        let pairs = materialize_pairs(&sampled, &kept_sentences);
        let file = format!("{backend}.jsonl");
        crate::jsonl::write(&dir.join(&file), &pairs)?;
        let report = PairsReport {
            backend: backend.clone(),
            sentences: sentences.len(),
            reserved: split.reserved.len(),
            gamma: clustering.gamma,
            kept: kept.len(),
            available,
            sampled_same: pairs.iter().filter(|p| p.category == PairCategory::Same).count(),
            sampled_diff: pairs.iter().filter(|p| p.category == PairCategory::Diff).count(),
        };
        let report_file = format!("{backend}.report.json");
        std::fs::write(dir.join(&report_file), serde_json::to_string_pretty(&report).unwrap())?;
        Manifest::new(stage::FINETUNE_PAIRS)
            .input("court", sha256_file(&court_path(ws))?)
            .input("labels", sha256_file(&config.labels)?)
            .input("encoder", encoder.model_tag().to_string())
            .input(
                "settings",
                sha256_json(&(
                    &config.embedding.cluster,
                    config.embedding.prune_min_size,
                    config.embedding.pairs_per_category,
                    config.seed,
                )),
            )
            .write(&Manifest::path(&dir, Some(&backend)), &[&file, &report_file])?;
        reports.push(report);
    }
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetuneReport {
    pub backend: String,
    pub model_tag: String,
    pub pairs: usize,
    /// True when up-to-date weights were already on disk.
    pub reused: bool,
}

/// Fine-tunes each backend once on its sampled pairs. Weights already built
/// from the same pairs and settings are reused.
pub fn finetune(ws: &Workspace) -> Result<Vec<FinetuneReport>, PipelineError> {
    let config = ws.config();
    let pairs_dir = ws.dir(stage::FINETUNE_PAIRS);
    let dir = ws.dir(stage::FINETUNE);
    std::fs::create_dir_all(&dir)?;
    let mut reports = Vec::new();
    for backend in config.backend_ids() {
        let pairs_file = pairs_dir.join(format!("{backend}.jsonl"));
        require(&pairs_file, stage::FINETUNE_PAIRS)?;
        let encoder_config = config.encoder_config(&backend)?;
        let manifest = Manifest::new(stage::FINETUNE)
            .input("pairs", sha256_file(&pairs_file)?)
            .input("encoder", sha256_json(&encoder_config))
            .input("options", sha256_json(&config.embedding.finetune));
        let manifest_path = Manifest::path(&dir, Some(&backend));
        let stem = finetuned_stem(ws, &backend);
        let pairs: Vec<crate::embedding::FinetunePair> = crate::jsonl::read(&pairs_file)?;
        if manifest.is_fresh(&manifest_path) {
            let tag = ws.encoder(&backend, true)?.model_tag().to_string();
            log::info!("{backend}: fine-tuned weights are up to date ({tag})");
            reports.push(FinetuneReport {
                backend,
                model_tag: tag,
                pairs: pairs.len(),
                reused: true,
            });
            continue;
        }
        let base = ws.encoder(&backend, false)?;
        let tuned = crate::embedding::finetune(&base, &pairs, &config.embedding.finetune)?;
        tuned.save(&stem)?;
        let name = |ext: &str| format!("{backend}+ft.{ext}");
        manifest.write(&manifest_path, &[&name("json"), &name("bin")])?;
        let tag = tuned.model_tag().to_string();
        ws.encoders
            .lock()
            .unwrap()
            .insert((backend.clone(), true), Arc::new(tuned));
        reports.push(FinetuneReport {
            backend,
            model_tag: tag,
            pairs: pairs.len(),
            reused: false,
        });
    }
    Ok(reports)
}

/// Vectors of every statement of a code's source.
pub(crate) struct CodeVectors {
    pub sets: Vec<DisputeSet>,
    pub ids: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
    pub model_tag: String,
    pub disputes_hash: String,
}

fn statement_id(case_id: &str, k: usize) -> String {
    format!("{case_id}#{k}")
}

/// Embeds all disputes of the code's source with the code's encoder.
pub fn embed_code(ws: &Workspace, code: &ExperimentCode) -> Result<usize, PipelineError> {
    Ok(code_vectors(ws, code)?.vectors.len())
}

pub(crate) fn code_vectors(ws: &Workspace, code: &ExperimentCode) -> Result<CodeVectors, PipelineError> {
    let sets = load_disputes(ws, code.source)?;
    let encoder = ws.encoder(&code.backend, code.finetuned)?;
    let mut ids = Vec::new();
    let mut texts = Vec::new();
    for set in &sets {
        for (k, item) in set.items.iter().enumerate() {
            ids.push(statement_id(&set.case_id, k));
            texts.push(item.clone());
        }
    }
    if texts.is_empty() {
        return Err(PipelineError::Data(format!("{code}: no dispute statements")));
    }
    let store = ws.store()?;
    let vectors = embed_batch(&texts, encoder.as_ref(), &store)?
        .into_iter()
        .map(|v| v.values)
        .collect();
    let disputes_hash = sha256_file(&disputes_path(ws, code.source))?;
    let model_tag = encoder.model_tag().to_string();
    let dir = ws.dir(stage::EMBED);
    Manifest::new(stage::EMBED)
        .input("disputes", disputes_hash.clone())
        .input("model_tag", model_tag.clone())
        .write(&Manifest::path(&dir, Some(&code.to_string())), &[])?;
    Ok(CodeVectors {
        sets,
        ids,
        vectors,
        model_tag,
        disputes_hash,
    })
}

/// Global clustering of a code's statements, rebuilt only when stale.
/// Returns the clustering and an id naming its file contents.
pub fn cluster_code(ws: &Workspace, code: &ExperimentCode) -> Result<(Clustering, String), PipelineError> {
    let cv = code_vectors(ws, code)?;
    cluster_from(ws, code, &cv)
}

fn cluster_from(ws: &Workspace, code: &ExperimentCode, cv: &CodeVectors) -> Result<(Clustering, String), PipelineError> {
    let dir = ws.dir(stage::CLUSTER);
    std::fs::create_dir_all(&dir)?;
    let file = format!("{code}.jsonl");
    let path = dir.join(&file);
    let manifest_path = Manifest::path(&dir, Some(&code.to_string()));
    let manifest = Manifest::new(stage::CLUSTER)
        .input("disputes", cv.disputes_hash.clone())
        .input("model_tag", cv.model_tag.clone())
        .input("params", sha256_json(&ws.config().clustering));
    let clustering = if manifest.is_fresh(&manifest_path) {
        load_clustering(&path)?
    } else {
        let c = cluster(&cv.ids, &cv.vectors, &ws.config().clustering)?;
        save_clustering(&c, &path)?;
        manifest.write(&manifest_path, &[&file])?;
        log::info!("{code}: {} statements in {} clusters", c.assignments.len(), c.gamma);
        c
    };
    if clustering.assignments.len() != cv.ids.len()
        || clustering.assignments.iter().zip(&cv.ids).any(|(a, id)| &a.sentence_id != id)
    {
        return Err(PipelineError::Data(format!("{}: statement ids do not match", path.display())));
    }
    let id = sha256_file(&path)?[..16].to_string();
    Ok((clustering, id))
}

/// Labeled pairs of one code, as images.
#[derive(Debug, Clone)]
pub struct PairDataset {
    pub code: ExperimentCode,
    pub pair_ids: Vec<String>,
    pub samples: Vec<Sample>,
    /// Non-noise cluster codes of each side, for the overlap baseline.
    pub cluster_sets: Vec<(BTreeSet<usize>, BTreeSet<usize>)>,
    /// Labeled pairs left out because a side has no disputes in this source.
    pub skipped: Vec<String>,
}

impl PairDataset {
    pub fn labels(&self) -> Vec<u8> {
        self.samples.iter().map(|s| s.label).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct IndexEntry {
    pair_id: String,
    label: u8,
    raw_side: usize,
    epsilon_used: f64,
}

/// Builds (or reads from cache) the similarity image of every labeled pair
/// whose label survives the barely-similar policy.
pub fn images_for_code(ws: &Workspace, code: &ExperimentCode) -> Result<PairDataset, PipelineError> {
    let config = ws.config();
    let labels = ws.labels()?;
    let cv = code_vectors(ws, code)?;
    let (clustering, clustering_id) = cluster_from(ws, code, &cv)?;
    let codes = clustering.codes();
    let mut cases: HashMap<&str, CaseInput> = HashMap::new();
    let mut at = 0;
    for set in &cv.sets {
        let n = set.items.len();
        if n > 0 {
            cases.insert(
                set.case_id.as_str(),
                CaseInput {
                    case_id: set.case_id.clone(),
                    vectors: cv.vectors[at..at + n].to_vec(),
                    codes: codes[at..at + n].to_vec(),
                },
            );
        }
        at += n;
    }
    let dir = ws.dir(stage::IMAGES).join(code.to_string());
    std::fs::create_dir_all(&dir)?;
    let cache = ImageCache::new(&dir);
    let mut data = PairDataset {
        code: code.clone(),
        pair_ids: Vec::new(),
        samples: Vec::new(),
        cluster_sets: Vec::new(),
        skipped: Vec::new(),
    };
    let mut index = Vec::new();
    for pair in &labels {
        let Some(label) = pair.label.binary(config.barely) else {
            continue;
        };
        let (Some(a), Some(b)) = (cases.get(pair.case_a.as_str()), cases.get(pair.case_b.as_str())) else {
            data.skipped.push(pair.pair_id());
            continue;
        };
        let key = ImageKey {
            pair_id: pair.pair_id(),
            model_tag: cv.model_tag.clone(),
            clustering_id: clustering_id.clone(),
        };
        let image = cache.get_or_make(&key, Some(label), || make_image(a, b, config.image_side))?;
        if image.side() != config.image_side {
            return Err(PipelineError::Data(format!("{}: cached image has side {}", key.pair_id, image.side())));
        }
        let nonzero = |c: &CaseInput| c.codes.iter().copied().filter(|&k| k != 0).collect::<BTreeSet<_>>();
        index.push(IndexEntry {
            pair_id: key.pair_id.clone(),
            label,
            raw_side: image.raw_side,
            epsilon_used: image.epsilon_used,
        });
        data.cluster_sets.push((nonzero(a), nonzero(b)));
        data.pair_ids.push(key.pair_id);
        data.samples.push(Sample {
            pixels: image.pixels,
            label,
        });
    }
    if !data.skipped.is_empty() {
        log::warn!("{code}: {} labeled pairs lack disputes in this source", data.skipped.len());
    }
    if data.samples.is_empty() {
        return Err(PipelineError::Data(format!("{code}: no labeled pair has disputes on both sides")));
    }
    crate::jsonl::write(&dir.join("index.jsonl"), &index)?;
    Manifest::new(stage::IMAGES)
        .input("labels", sha256_file(&config.labels)?)
        .input("clustering", clustering_id)
        .input("model_tag", cv.model_tag.clone())
        .input("settings", sha256_json(&(config.image_side, config.barely)))
        .write(&Manifest::path(&dir, None), &["index.jsonl"])?;
    Ok(data)
}

/// ROUGE of each available LLM source against the court's lists, over the
/// cases both have.
pub fn rouge(ws: &Workspace) -> Result<Vec<(SourceKind, RougeReport)>, PipelineError> {
    let court: BTreeMap<String, DisputeSet> = load_disputes(ws, SourceKind::Court)?
        .into_iter()
        .map(|s| (s.case_id.clone(), s))
        .collect();
    let mut out = Vec::new();
    let mut rows = Vec::new();
    let dir = ws.dir(stage::ROUGE);
    std::fs::create_dir_all(&dir)?;
    let mut last_missing = None;
    for kind in SourceKind::LLM {
        let sets = match load_disputes(ws, kind) {
            Ok(s) => s,
            Err(e @ PipelineError::MissingArtifact { .. }) => {
                log::warn!("{}: {e}", kind.key());
                last_missing = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut per_doc = Vec::new();
        for set in &sets {
            let Some(reference) = court.get(&set.case_id) else {
                continue;
            };
            per_doc.push(DocRouge {
                doc_id: set.case_id.clone(),
                scores: rouge_scores(&set.raw_items, &reference.raw_items, &CharSegmenter)?,
            });
        }
        if per_doc.is_empty() {
            log::warn!("{}: no case shared with the court lists", kind.key());
            continue;
        }
        let report = RougeReport {
            macro_avg: macro_rouge(&per_doc)?,
            per_doc,
        };
        crate::jsonl::write(&dir.join(format!("{}_per_doc.jsonl", kind.key())), &report.per_doc)?;
        let model = ws.config().source_config(kind).unwrap().profile.model_id.clone();
        rows.push((model, report.macro_avg));
        out.push((kind, report));
    }
    if out.is_empty() {
        return Err(last_missing.unwrap_or_else(|| PipelineError::Data("no LLM dispute lists to score".into())));
    }
    write_rouge_report(&dir.join("report.csv"), &rows)?;
    Ok(out)
}

/// Runs every stage the matrix depends on: ingest, both LLM sources,
/// fine-tuning pairs, and fine-tuning.
pub fn prepare(ws: &Workspace) -> Result<(), PipelineError> {
    let r = ingest(ws)?;
    log::info!("ingest: {} eligible of {} documents", r.eligible, r.documents);
    for r in llm_disputes(ws, &SourceKind::LLM)? {
        log::info!(
            "{}: {} ok, {} too long, {} no output, {} failed",
            r.source,
            r.ok,
            r.dropped_too_long,
            r.dropped_no_output,
            r.failed
        );
    }
    finetune_pairs(ws)?;
    for r in finetune(ws)? {
        log::info!("finetune {}: {} ({} pairs, reused {})", r.backend, r.model_tag, r.pairs, r.reused);
    }
    Ok(())
}
