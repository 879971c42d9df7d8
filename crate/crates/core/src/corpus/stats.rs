use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DisputeExtractor, JudgmentDoc};

/// Counts behind the temporal and per-court distribution of a corpus.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    /// Keyed by Taiwan-calendar year.
    pub per_year: BTreeMap<i32, usize>,
    pub per_court: BTreeMap<String, usize>,
    pub total_cases: usize,
    pub total_statements: usize,
}

pub fn corpus_stats(docs: &[JudgmentDoc], extractor: &DisputeExtractor) -> CorpusStats {
    let mut stats = CorpusStats::default();
    for doc in docs {
        *stats.per_year.entry(doc.jyear).or_default() += 1;
        *stats.per_court.entry(doc.court().to_string()).or_default() += 1;
        stats.total_cases += 1;
        stats.total_statements += extractor.extract(&doc.jfull).map_or(0, |items| items.len());
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn doc(court: &str, year: i32, disputes: usize) -> JudgmentDoc {
        let items: String = (1..=disputes).map(|i| format!("{i}. 爭議{i}是否成立？")).collect();
        JudgmentDoc {
            jid: format!("{court},{year},勞訴,1,20100101,1"),
            jyear: year,
            jcase: "勞訴".into(),
            jno: "1".into(),
            jdate: NaiveDate::from_ymd_opt(2010, 1, 1).unwrap(),
            jtitle: "給付工資".into(),
            jfull: format!("本件爭點：{items}"),
        }
    }

    #[test]
    fn empty_corpus_is_all_zero() {
        assert_eq!(corpus_stats(&[], &DisputeExtractor::default()), CorpusStats::default());
    }

    #[test]
    fn counts_partition_the_corpus() {
        let docs = vec![doc("TPDV", 97, 2), doc("TPDV", 97, 1), doc("KSDV", 98, 3)];
        let s = corpus_stats(&docs, &DisputeExtractor::default());
        assert_eq!(s.per_year, BTreeMap::from([(97, 2), (98, 1)]));
        assert_eq!(s.per_court["TPDV"], 2);
        assert_eq!(s.total_cases, 3);
        assert_eq!(s.total_statements, 6);
        assert_eq!(s.per_year.values().sum::<usize>(), s.total_cases);
    }
}
