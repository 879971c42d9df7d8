//! Judgment documents, case selection, and the itemized dispute lists.

mod blur;
mod document;
mod extract;
mod filter;
mod loader;
mod ner;
mod stats;

pub use blur::{blur, blur_statement, BlurError, BlurRules};
pub use document::{parse_document, CorpusError, JudgmentDoc, FIELD_NAMES};
pub use extract::{extract_disputes, normalize_whitespace, DisputeExtractor, ExtractError};
pub use filter::{is_eligible, screen, CaseFilter, ExclusionReason};
pub use loader::{load_corpus, LoadedCorpus};
pub use ner::{EntityClass, EntityDetector, EntitySpan, RuleBasedDetector};
pub use stats::{corpus_stats, CorpusStats};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Where a dispute list came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DisputeSource {
    Court,
    Llm(String),
}

impl fmt::Display for DisputeSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DisputeSource::Court => f.write_str("court"),
            DisputeSource::Llm(model) => write!(f, "llm:{model}"),
        }
    }
}

impl FromStr for DisputeSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "court" => Ok(DisputeSource::Court),
            _ => match s.strip_prefix("llm:") {
                Some(model) if !model.is_empty() => Ok(DisputeSource::Llm(model.to_string())),
                _ => Err(format!("unknown dispute source {s:?}")),
            },
        }
    }
}

impl Serialize for DisputeSource {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DisputeSource {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The itemized disputes of one case.
///
/// `items` are the blurred statements used downstream; `raw_items` keep the
/// pre-blurring text at the same positions for auditing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisputeSet {
    pub case_id: String,
    pub source: DisputeSource,
    pub items: Vec<String>,
    pub raw_items: Vec<String>,
}

impl DisputeSet {
    /// Blurs `raw_items` with `detector` and `rules` to build a set.
    pub fn from_raw(
        case_id: impl Into<String>,
        source: DisputeSource,
        raw_items: Vec<String>,
        detector: &dyn EntityDetector,
        rules: &BlurRules,
    ) -> Self {
        let items = raw_items
            .iter()
            .map(|s| blur_statement(s, detector, rules))
            .collect();
        DisputeSet {
            case_id: case_id.into(),
            source,
            items,
            raw_items,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}
