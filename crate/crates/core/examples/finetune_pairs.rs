//! Builds same/diff sentence pairs from a clustering and fine-tunes the
//! hashed n-gram encoder on them.
//!
//! ```text
//! cargo run --example finetune_pairs
//! ```

use casesim::embedding::{
    backend, finetune, generate_pairs, materialize_pairs, pair_counts, prune_small_clusters, sample_pairs,
    EmbeddingProvider, FinetuneOptions,
};
use casesim::simimage::cosine_similarity;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sentences: Vec<String> = [
        ("加班費", 1),
        ("延長工時工資", 1),
        ("加班時數之計算", 1),
        ("資遣費", 2),
        ("終止勞動契約之資遣費", 2),
        ("資遣費之計算基礎", 2),
        ("特別休假", 3),
    ]
    .iter()
    .map(|(s, _)| format!("被告應否給付原告{s}？"))
    .collect();
    let labels = [1, 1, 1, 2, 2, 2, 3];

    let kept = prune_small_clusters(&labels, 2);
    let sentences: Vec<String> = kept.iter().map(|&i| sentences[i].clone()).collect();
    let labels: Vec<usize> = kept.iter().map(|&i| labels[i]).collect();
    let counts = pair_counts(&[3, 3]);
    println!("{} sentences after pruning; {} same pairs, {} diff pairs", sentences.len(), counts.same, counts.diff);

    let pairs = sample_pairs(generate_pairs(&labels), 50, 1);
    let pairs = materialize_pairs(&pairs, &sentences);
    let base = backend("lf")?;
    let tuned = finetune(&base, &pairs, &FinetuneOptions { epochs: 20, ..Default::default() })?;

    for encoder in [&base as &dyn EmbeddingProvider, &tuned] {
        let v = encoder.embed(&[&sentences[0], &sentences[1], &sentences[3]])?;
        println!(
            "{:<16} same-cluster cosine {:.3}, cross-cluster cosine {:.3}",
            encoder.model_tag(),
            cosine_similarity(&v[0], &v[1])?,
            cosine_similarity(&v[0], &v[2])?
        );
    }
    Ok(())
}
