//! Embeds every court dispute of the fixture and clusters them globally.
//!
//! ```text
//! cargo run --example cluster_disputes -- [BACKEND] [MIN_CLUSTER_SIZE]
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use casesim::clustering::{cluster, ClusterParams};
use casesim::corpus::{load_corpus, screen, CaseFilter, DisputeExtractor};
use casesim::embedding::{backend, embed_batch, VectorStore};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let backend_id = args.next().unwrap_or_else(|| "lf".into());
    let min_cluster_size = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5);

    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/desk");
    let corpus = load_corpus(&[root.join("corpus")])?;
    let (filter, extractor) = (CaseFilter::default(), DisputeExtractor::default());
    let mut ids = Vec::new();
    let mut statements = Vec::new();
    for doc in &corpus.docs {
        if let Ok(items) = screen(doc, &filter, &extractor) {
            for (k, item) in items.into_iter().enumerate() {
                ids.push(format!("{}#{k}", doc.jid));
                statements.push(item);
            }
        }
    }

    let encoder = backend(&backend_id)?;
    let vectors: Vec<Vec<f64>> = embed_batch(&statements, &encoder, &VectorStore::in_memory())?
        .into_iter()
        .map(|v| v.values)
        .collect();
    let params = ClusterParams { min_cluster_size, ..Default::default() };
    let clustering = cluster(&ids, &vectors, &params)?;
    println!(
        "{} statements, gamma {}, epsilon {:.4}",
        statements.len(),
        clustering.gamma,
        clustering.epsilon
    );

    let mut members: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for (a, s) in clustering.assignments.iter().zip(&statements) {
        members.entry(a.cluster_code).or_default().push(s);
    }
    for (code, texts) in members {
        let label = if code == 0 { "noise".to_string() } else { format!("cluster {code}") };
        println!("{label}: {} statements, e.g. {}", texts.len(), texts[0]);
    }
    Ok(())
}
