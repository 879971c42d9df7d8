//! Similar-case classification for labor and employment litigation.
//!
//! Two cases are compared through their itemized disputes. The disputes are
//! either pulled out of the judgment text (where the court listed them) or
//! generated from the plaintiff and defendant statements by a three-step LLM
//! prompt chain. Every dispute is embedded, all disputes are clustered, and a
//! case pair becomes a grey-level image of pairwise cosine similarities with
//! the disputes reordered by cluster. A small CNN classifies that image.
//!
//! The crate is organised by pipeline stage:
//!
//! - [`corpus`]: judgment parsing, case filtering, dispute extraction, NER blurring
//! - [`llm`]: the prompt chain, reply parsing, token budgets, retry/drop policy
//! - [`embedding`]: embedding providers, the vector store, fine-tuning pair data
//! - [`clustering`]: cosine distances, the epsilon rule, HDBSCAN
//! - [`simimage`]: similarity matrices and their grey-level projection
//! - [`classifier`]: stratified splits and the CNN
//! - [`evaluation`]: classification metrics, boxplot statistics, ROUGE
//! - [`pipeline`]: configuration, on-disk stages, and the experiment matrix
//!
//! Runnable walkthroughs for each stage live in `examples/`.

pub mod classifier;
pub mod clustering;
pub mod corpus;
pub mod embedding;
pub mod evaluation;
pub mod fixture;
pub mod jsonl;
pub mod llm;
pub mod pipeline;
pub mod simimage;
