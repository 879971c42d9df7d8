//! Scores generated dispute lists against the court's with ROUGE-1/2/L and
//! macro-averages over documents.
//!
//! ```text
//! cargo run --example rouge_eval
//! ```

use casesim::evaluation::{macro_rouge, rouge_scores, CharSegmenter, DocRouge, RougeScores};

fn row(name: &str, s: &RougeScores) {
    println!(
        "{name:<8} R-1 {:.3}/{:.3}/{:.3}  R-2 {:.3}/{:.3}/{:.3}  R-L {:.3}/{:.3}/{:.3}",
        s.r1.p, s.r1.r, s.r1.f1, s.r2.p, s.r2.r, s.r2.f1, s.rl.p, s.rl.r, s.rl.f1
    );
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let docs = [
        (
            vec!["被告應否給付原告加班費？", "原告請求資遣費有無理由？"],
            vec!["原告請求被告給付加班費，有無理由？", "原告請求資遣費，有無理由？"],
        ),
        (
            vec!["兩造間勞動契約是否已合法終止？"],
            vec!["被告終止勞動契約是否合法？", "原告請求預告期間工資有無理由？"],
        ),
    ];
    let seg = CharSegmenter;
    let mut per_doc = Vec::new();
    for (i, (candidate, reference)) in docs.iter().enumerate() {
        let candidate: Vec<String> = candidate.iter().map(|s| s.to_string()).collect();
        let reference: Vec<String> = reference.iter().map(|s| s.to_string()).collect();
        let scores = rouge_scores(&candidate, &reference, &seg)?;
        row(&format!("doc {i}"), &scores);
        per_doc.push(DocRouge { doc_id: format!("doc {i}"), scores });
    }
    row("macro", &macro_rouge(&per_doc)?);
    Ok(())
}
