//! Runs the three-step prompt chain on fixture cases with recorded replies.
//!
//! ```text
//! cargo run --example llm_chain
//! ```

use std::path::PathBuf;

use casesim::corpus::load_corpus;
use casesim::llm::{
    extract_party_claims, run_chain, CannedReplyProvider, CharTokenCounter, LlmProfile, PromptTemplates, TokenCounter,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/desk");
    let corpus = load_corpus(&[root.join("corpus")])?;
    let provider = CannedReplyProvider::from_jsonl(&root.join("replies/gpt4.jsonl"))?;
    let profile = LlmProfile::gpt4();
    let templates = PromptTemplates::default();
    let tokens = CharTokenCounter;
    println!("{} recorded replies for {}", provider.len(), profile.model_id);

    let mut shown = 0;
    for doc in &corpus.docs {
        let Some(claims) = extract_party_claims(doc) else { continue };
        let outcome = run_chain(&claims, &profile, &provider, &tokens, &templates)?;
        println!(
            "\n{} ({} plaintiff tokens): {:?} after {} calls",
            claims.case_id,
            tokens.count_tokens(&claims.plaintiff_claim),
            outcome.status,
            outcome.provider_calls
        );
        for d in &outcome.disputes {
            println!("  - {d}");
        }
        shown += 1;
        if shown == 3 {
            break;
        }
    }
    Ok(())
}
