use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{f1, ratio, EvaluationError};

/// Splits Chinese text into tokens.
pub trait Segmenter: Send + Sync {
    fn segment(&self, text: &str) -> Vec<String>;
}

/// Each Han character is a token, as is each run of ASCII letters and
/// digits. Whitespace and punctuation are dropped.
#[derive(Debug, Clone, Copy, Default)]
pub struct CharSegmenter;

impl Segmenter for CharSegmenter {
    fn segment(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut run = String::new();
        for c in text.chars() {
            if c.is_ascii_alphanumeric() {
                run.push(c);
                continue;
            }
            if !run.is_empty() {
                out.push(std::mem::take(&mut run));
            }
            if c.is_alphanumeric() {
                out.push(c.to_string());
            }
        }
        if !run.is_empty() {
            out.push(run);
        }
        out
    }
}

pub fn tokenize_zh(text: &str, segmenter: &dyn Segmenter) -> Vec<String> {
    segmenter.segment(text)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub p: f64,
    pub r: f64,
    pub f1: f64,
}

impl Prf {
    fn from_counts(overlap: usize, candidate: usize, reference: usize) -> Self {
        let p = ratio(overlap, candidate);
        let r = ratio(overlap, reference);
        Prf { p, r, f1: f1(p, r) }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeScores {
    pub r1: Prf,
    pub r2: Prf,
    pub rl: Prf,
}

/// Token ids with `None` marking an item break.
type Seq = Vec<Option<u32>>;

fn to_seq(items: &[String], segmenter: &dyn Segmenter, vocab: &mut HashMap<String, u32>) -> Seq {
    let mut seq = Vec::new();
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            seq.push(None);
        }
        for tok in segmenter.segment(item) {
            let next = vocab.len() as u32;
            seq.push(Some(*vocab.entry(tok).or_insert(next)));
        }
    }
    seq
}

/// n-grams that do not span a break.
fn ngrams(seq: &Seq, n: usize) -> HashMap<Vec<u32>, usize> {
    let mut counts = HashMap::new();
    for w in seq.windows(n) {
        if let Some(gram) = w.iter().copied().collect::<Option<Vec<u32>>>() {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

fn ngram_prf(cand: &Seq, reference: &Seq, n: usize) -> Prf {
    let c = ngrams(cand, n);
    let r = ngrams(reference, n);
    let overlap = c
        .iter()
        .map(|(g, &k)| k.min(r.get(g).copied().unwrap_or(0)))
        .sum();
    Prf::from_counts(overlap, c.values().sum(), r.values().sum())
}

/// LCS length where breaks never match.
fn lcs(a: &Seq, b: &Seq) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = match (x, y) {
                (Some(p), Some(q)) if p == q => prev[j] + 1,
                _ => prev[j + 1].max(cur[j]),
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-1, -2 and -L of the joined candidate items against the joined
/// reference items.
pub fn rouge_scores(
    candidate: &[String],
    reference: &[String],
    segmenter: &dyn Segmenter,
) -> Result<RougeScores, EvaluationError> {
    let mut vocab = HashMap::new();
    let r = to_seq(reference, segmenter, &mut vocab);
    let tokens = |s: &Seq| s.iter().filter(|t| t.is_some()).count();
    if tokens(&r) == 0 {
        return Err(EvaluationError::EmptyReference(String::new()));
    }
    let c = to_seq(candidate, segmenter, &mut vocab);
    Ok(RougeScores {
        r1: ngram_prf(&c, &r, 1),
        r2: ngram_prf(&c, &r, 2),
        rl: Prf::from_counts(lcs(&c, &r), tokens(&c), tokens(&r)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocRouge {
    pub doc_id: String,
    pub scores: RougeScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RougeReport {
    pub per_doc: Vec<DocRouge>,
    pub macro_avg: RougeScores,
}

/// Per-field means over documents. The F1 fields are means of the
/// per-document F1 values, not F1 of the mean precision and recall.
pub fn macro_rouge(per_doc: &[DocRouge]) -> Result<RougeScores, EvaluationError> {
    if per_doc.is_empty() {
        return Err(EvaluationError::Empty);
    }
    let n = per_doc.len() as f64;
    let mean = |f: &dyn Fn(&RougeScores) -> Prf| {
        let (p, r, f1) = per_doc.iter().fold((0.0, 0.0, 0.0), |(p, r, x), d| {
            let s = f(&d.scores);
            (p + s.p, r + s.r, x + s.f1)
        });
        Prf { p: p / n, r: r / n, f1: f1 / n }
    };
    Ok(RougeScores {
        r1: mean(&|s| s.r1),
        r2: mean(&|s| s.r2),
        rl: mean(&|s| s.rl),
    })
}

/// Writes one CSV row per model with columns grouped as macro precision,
/// macro recall, macro F1, each over R-1, R-2, R-L.
pub fn write_rouge_report(path: &Path, rows: &[(String, RougeScores)]) -> Result<(), EvaluationError> {
    let err = |e: &dyn std::fmt::Display| EvaluationError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| err(&e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| err(&e))?;
    let mut header = vec!["model".to_string()];
    for metric in ["precision", "recall", "f1"] {
        for r in ["r1", "r2", "rl"] {
            header.push(format!("macro_{metric}_{r}"));
        }
    }
    w.write_record(&header).map_err(|e| err(&e))?;
    for (model, s) in rows {
        let mut rec = vec![model.clone()];
        for pick in [|p: &Prf| p.p, |p: &Prf| p.r, |p: &Prf| p.f1] {
            for prf in [&s.r1, &s.r2, &s.rl] {
                rec.push(format!("{:.3}", pick(prf)));
            }
        }
        w.write_record(&rec).map_err(|e| err(&e))?;
    }
    w.flush().map_err(|e| err(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|x| x.to_string()).collect()
    }

    fn seg(t: &str) -> Vec<String> {
        tokenize_zh(t, &CharSegmenter)
    }

    #[test]
    fn segmenter_fallback() {
        assert_eq!(seg("勞動契約"), s(&["勞", "動", "契", "約"]));
        assert_eq!(seg("abc 勞動"), s(&["abc", "勞", "動"]));
        assert_eq!(seg("第2條，A12款"), s(&["第", "2", "條", "A12", "款"]));
        assert!(seg("").is_empty());
    }

    #[test]
    fn identical_and_disjoint() {
        let a = s(&["是否積欠工資", "資遣費數額"]);
        let same = rouge_scores(&a, &a, &CharSegmenter).unwrap();
        for prf in [same.r1, same.r2, same.rl] {
            assert_eq!(prf, Prf { p: 1.0, r: 1.0, f1: 1.0 });
        }
        let other = rouge_scores(&s(&["甲乙"]), &s(&["丙丁"]), &CharSegmenter).unwrap();
        for prf in [other.r1, other.r2, other.rl] {
            assert_eq!(prf, Prf::default());
        }
    }

    #[test]
    fn half_overlap_unigrams() {
        let r = rouge_scores(&s(&["a b"]), &s(&["a c"]), &CharSegmenter).unwrap();
        assert_eq!(r.r1, Prf { p: 0.5, r: 0.5, f1: 0.5 });
        assert_eq!(r.r2, Prf::default());
    }

    #[test]
    fn breaks_do_not_form_bigrams() {
        // joined "甲乙" would share the bigram 甲乙 if items were glued
        let r = rouge_scores(&s(&["甲", "乙"]), &s(&["甲乙"]), &CharSegmenter).unwrap();
        assert_eq!(r.r1.f1, 1.0);
        assert_eq!(r.r2.r, 0.0);
        assert_eq!(r.rl.r, 1.0);
    }

    #[test]
    fn empty_reference_is_rejected() {
        assert!(matches!(
            rouge_scores(&s(&["甲"]), &s(&["，"]), &CharSegmenter),
            Err(EvaluationError::EmptyReference(_))
        ));
    }

    #[test]
    fn macro_f1_is_mean_of_f1() {
        let doc = |id: &str, p: f64, r: f64, f: f64| DocRouge {
            doc_id: id.into(),
            scores: RougeScores { r1: Prf { p, r, f1: f }, ..Default::default() },
        };
        let m = macro_rouge(&[doc("a", 1.0, 0.1111111111111111, 0.2), doc("b", 0.8, 0.8, 0.8)]).unwrap();
        assert!((m.r1.f1 - 0.5).abs() < 1e-15);
        assert!((f1(m.r1.p, m.r1.r) - 0.5).abs() > 0.01);
        let one = macro_rouge(&[doc("a", 0.3, 0.6, 0.4)]).unwrap();
        assert_eq!(one.r1, Prf { p: 0.3, r: 0.6, f1: 0.4 });
    }

    #[test]
    fn report_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rouge.csv");
        write_rouge_report(&p, &[("gpt-4-0613".into(), RougeScores::default())]).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.starts_with("model,macro_precision_r1,macro_precision_r2,macro_precision_rl,macro_recall_r1"));
        assert_eq!(text.lines().nth(1).unwrap().split(',').count(), 10);
    }

    proptest! {
        #[test]
        fn swap_swaps_p_and_r(
            a in proptest::collection::vec("[甲乙丙丁戊]{1,6}", 1..4),
            b in proptest::collection::vec("[甲乙丙丁戊]{1,6}", 1..4),
        ) {
            let x = rouge_scores(&a, &b, &CharSegmenter).unwrap();
            let y = rouge_scores(&b, &a, &CharSegmenter).unwrap();
            for (u, v) in [(x.r1, y.r1), (x.r2, y.r2), (x.rl, y.rl)] {
                prop_assert_eq!(u.p, v.r);
                prop_assert_eq!(u.r, v.p);
                prop_assert!((u.f1 - v.f1).abs() < 1e-12);
                for t in [u.p, u.r, u.f1] { prop_assert!((0.0..=1.0).contains(&t)); }
            }
        }

        #[test]
        fn sub_multiset_has_full_unigram_precision(
            reference in proptest::collection::vec("[甲乙丙丁戊]{1,6}", 1..4),
            keep in proptest::collection::vec(any::<bool>(), 24),
        ) {
            let chars: Vec<char> = reference.concat().chars().collect();
            let picked: String = chars.iter().zip(keep.iter().cycle()).filter(|(_, k)| **k).map(|(c, _)| *c).collect();
            prop_assume!(!picked.is_empty());
            let r = rouge_scores(&[picked], &reference, &CharSegmenter).unwrap();
            prop_assert_eq!(r.r1.p, 1.0);
        }
    }
}
