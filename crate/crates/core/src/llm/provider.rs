use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Transport-level failure of an LLM call.
#[derive(Debug, thiserror::Error)]
#[error("provider error: {0}")]
pub struct ProviderError(pub String);

/// A chat model reached with one prompt per call.
pub trait LlmProvider: Send + Sync {
    fn complete(&self, prompt: &str, temperature: f64) -> Result<String, ProviderError>;
}

impl<P: LlmProvider + ?Sized> LlmProvider for &P {
    fn complete(&self, prompt: &str, temperature: f64) -> Result<String, ProviderError> {
        (**self).complete(prompt, temperature)
    }
}

impl<P: LlmProvider + ?Sized> LlmProvider for Box<P> {
    fn complete(&self, prompt: &str, temperature: f64) -> Result<String, ProviderError> {
        (**self).complete(prompt, temperature)
    }
}

/// One recorded reply, keyed by the SHA-256 of the exact prompt text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CannedReply {
    pub prompt_sha256: String,
    pub reply: String,
}

impl CannedReply {
    pub fn new(prompt: &str, reply: impl Into<String>) -> Self {
        CannedReply {
            prompt_sha256: prompt_key(prompt),
            reply: reply.into(),
        }
    }
}

pub(crate) fn prompt_key(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

/// Offline provider that answers from a file of recorded replies.
///
/// Prompts without a recording get an empty reply, which the chain treats as
/// "no output".
#[derive(Debug, Clone, Default)]
pub struct CannedReplyProvider {
    replies: HashMap<String, String>,
}

impl CannedReplyProvider {
    pub fn new(replies: impl IntoIterator<Item = CannedReply>) -> Self {
        CannedReplyProvider {
            replies: replies.into_iter().map(|r| (r.prompt_sha256, r.reply)).collect(),
        }
    }

    pub fn from_jsonl(path: &Path) -> Result<Self, crate::jsonl::JsonlError> {
        Ok(Self::new(crate::jsonl::read::<CannedReply>(path)?))
    }

    pub fn len(&self) -> usize {
        self.replies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replies.is_empty()
    }
}

impl LlmProvider for CannedReplyProvider {
    fn complete(&self, prompt: &str, _temperature: f64) -> Result<String, ProviderError> {
        Ok(self.replies.get(&prompt_key(prompt)).cloned().unwrap_or_default())
    }
}

/// OpenAI-compatible chat-completions endpoint.
#[cfg(feature = "http")]
pub struct HttpChatProvider {
    pub endpoint: String,
    pub model: String,
    api_key: String,
    agent: ureq::Agent,
}

#[cfg(feature = "http")]
impl HttpChatProvider {
    /// Reads the API key from `key_env`.
    pub fn from_env(endpoint: &str, model: &str, key_env: &str) -> Result<Self, ProviderError> {
        let api_key = std::env::var(key_env).map_err(|_| ProviderError(format!("{key_env} is not set")))?;
        Ok(HttpChatProvider {
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            api_key,
            agent: ureq::Agent::new_with_defaults(),
        })
    }

    pub fn request_body(&self, prompt: &str, temperature: f64) -> serde_json::Value {
        serde_json::json!({
            "model": self.model,
            "temperature": temperature,
            "messages": [{"role": "user", "content": prompt}],
        })
    }
}

#[cfg(feature = "http")]
impl LlmProvider for HttpChatProvider {
    fn complete(&self, prompt: &str, temperature: f64) -> Result<String, ProviderError> {
        let body = self.request_body(prompt, temperature);
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| ProviderError(e.to_string()))?;
        let value: serde_json::Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| ProviderError(e.to_string()))?;
        Ok(value["choices"][0]["message"]["content"]
            .as_str()
            .unwrap_or_default()
            .to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canned_replies_are_matched_by_exact_prompt() {
        let p = CannedReplyProvider::new([CannedReply::new("hello", "{'p_point': ['a']}")]);
        assert_eq!(p.complete("hello", 0.7).unwrap(), "{'p_point': ['a']}");
        assert_eq!(p.complete("hello ", 0.7).unwrap(), "");
    }
}
