//! Generating itemized disputes from the party statements with a three-step
//! prompt chain.
//!
//! Step one summarizes the plaintiff's statement into `p_point` items, step
//! two the defendant's into `d_point` items, and step three asks for the
//! `dispute` items between the two lists. Prompts over the profile's token
//! budget are never sent; a step whose reply yields no list is resubmitted up
//! to `max_retries` times before the case is dropped.

mod batch;
mod chain;
mod claims;
mod journal;
mod parse;
mod prompts;
mod provider;
mod tokens;

pub use batch::{outcomes_to_dispute_sets, run_batch, BatchReport, RateLimited};
pub use chain::{run_chain, ChainOutcome, ChainStatus};
pub use claims::extract_party_claims;
pub use journal::Journal;
pub use parse::parse_point_list;
pub use prompts::{build_prompt, python_list_repr, PointKey, PromptStep, PromptTemplates};
pub use provider::{CannedReply, CannedReplyProvider, LlmProvider, ProviderError};
pub use tokens::{CharTokenCounter, TokenCounter};

#[cfg(feature = "http")]
pub use provider::HttpChatProvider;

use serde::{Deserialize, Serialize};

/// The statement sections fed to the chain for one case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyClaims {
    pub case_id: String,
    pub plaintiff_claim: String,
    pub defendant_claim: String,
}

/// Sampling and budget settings for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmProfile {
    pub model_id: String,
    pub temperature: f64,
    /// Largest prompt, in tokens, that may be submitted.
    pub token_budget: usize,
    pub max_retries: u32,
}

impl LlmProfile {
    /// GPT-3.5 settings: temperature 0.7, 11500-token prompts.
    pub fn gpt35() -> Self {
        LlmProfile {
            model_id: "gpt-3.5-turbo-0613".into(),
            temperature: 0.7,
            token_budget: 11500,
            max_retries: 3,
        }
    }

    /// GPT-4 settings: temperature 0.3, 6000-token prompts.
    pub fn gpt4() -> Self {
        LlmProfile {
            model_id: "gpt-4-0613".into(),
            temperature: 0.3,
            token_budget: 6000,
            max_retries: 3,
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(LlmError::InvalidProfile(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.token_budget == 0 {
            return Err(LlmError::InvalidProfile("token budget must be positive".into()));
        }
        if self.model_id.is_empty() {
            return Err(LlmError::InvalidProfile("empty model id".into()));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("the dispute step needs the plaintiff and defendant point lists")]
    MissingPrior,
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("case {0} has an empty plaintiff or defendant statement")]
    EmptyClaims(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("journal {path}: {source}")]
    Journal {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_profiles() {
        let a = LlmProfile::gpt35();
        let b = LlmProfile::gpt4();
        assert_eq!((a.temperature, a.token_budget, a.max_retries), (0.7, 11500, 3));
        assert_eq!((b.temperature, b.token_budget, b.max_retries), (0.3, 6000, 3));
        assert!(a.validate().is_ok() && b.validate().is_ok());
    }

    #[test]
    fn profile_validation() {
        let mut p = LlmProfile::gpt4();
        p.temperature = 2.5;
        assert!(p.validate().is_err());
        p.temperature = 0.0;
        p.token_budget = 0;
        assert!(p.validate().is_err());
    }
}
