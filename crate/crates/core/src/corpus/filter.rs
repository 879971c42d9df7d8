use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::extract::{DisputeExtractor, ExtractError};
use super::JudgmentDoc;

/// Selection rules for first-instance labor cases at local courts.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CaseFilter {
    /// Accepted lawsuit-type codes.
    pub jcase_allowlist: Vec<String>,
    /// Substrings of the lawsuit code that mark appeals and retrials.
    pub appeal_markers: Vec<String>,
    /// Regex the court code (first id component) must match.
    pub court_pattern: String,
    /// When non-empty, the title must contain one of these.
    pub jtitle_include: Vec<String>,
    pub jtitle_exclude: Vec<String>,
    #[serde(skip)]
    court_re: OnceLock<Option<Regex>>,
}

impl Default for CaseFilter {
    fn default() -> Self {
        CaseFilter {
            jcase_allowlist: ["勞訴", "重勞訴", "勞簡", "勞小"].map(String::from).to_vec(),
            appeal_markers: ["上", "抗", "再"].map(String::from).to_vec(),
            court_pattern: "^[A-Z]{2,3}DV$".into(),
            jtitle_include: Vec::new(),
            jtitle_exclude: Vec::new(),
            court_re: OnceLock::new(),
        }
    }
}

/// Why a document was left out of the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    CaseCode,
    Appeal,
    Court,
    Title,
    NoDisputeSection,
    AmbiguousSection,
}

impl CaseFilter {
    fn court_matches(&self, court: &str) -> bool {
        let re = self.court_re.get_or_init(|| Regex::new(&self.court_pattern).ok());
        // An invalid pattern rejects everything rather than silently passing.
        re.as_ref().is_some_and(|re| re.is_match(court))
    }

    pub fn validate(&self) -> Result<(), regex::Error> {
        Regex::new(&self.court_pattern).map(|_| ())
    }

    /// Checks the metadata rules only.
    pub fn metadata_check(&self, doc: &JudgmentDoc) -> Result<(), ExclusionReason> {
        if !self.jcase_allowlist.iter().any(|c| c == &doc.jcase) {
            return Err(ExclusionReason::CaseCode);
        }
        if self.appeal_markers.iter().any(|m| doc.jcase.contains(m.as_str())) {
            return Err(ExclusionReason::Appeal);
        }
        if !self.court_matches(doc.court()) {
            return Err(ExclusionReason::Court);
        }
        if !self.jtitle_include.is_empty() && !self.jtitle_include.iter().any(|k| doc.jtitle.contains(k.as_str())) {
            return Err(ExclusionReason::Title);
        }
        if self.jtitle_exclude.iter().any(|k| doc.jtitle.contains(k.as_str())) {
            return Err(ExclusionReason::Title);
        }
        Ok(())
    }
}

/// Applies every rule and returns the extracted disputes of an admitted case.
pub fn screen(
    doc: &JudgmentDoc,
    filter: &CaseFilter,
    extractor: &DisputeExtractor,
) -> Result<Vec<String>, ExclusionReason> {
    filter.metadata_check(doc)?;
    match extractor.extract(&doc.jfull) {
        Ok(items) if items.is_empty() => Err(ExclusionReason::NoDisputeSection),
        Ok(items) => Ok(items),
        Err(ExtractError::AmbiguousSection { .. }) => Err(ExclusionReason::AmbiguousSection),
    }
}

pub fn is_eligible(doc: &JudgmentDoc, filter: &CaseFilter, extractor: &DisputeExtractor) -> bool {
    screen(doc, filter, extractor).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn doc(jid: &str, jcase: &str, jfull: &str) -> JudgmentDoc {
        JudgmentDoc {
            jid: jid.into(),
            jyear: 98,
            jcase: jcase.into(),
            jno: "37".into(),
            jdate: NaiveDate::from_ymd_opt(2010, 4, 9).unwrap(),
            jtitle: "確認僱傭關係存在".into(),
            jfull: jfull.into(),
        }
    }

    const WITH_DISPUTES: &str = "本件爭點：(一)長森醫院是否歇業？(二)兩造間是否終止勞動契約？";

    #[test]
    fn labor_case_with_disputes_is_eligible() {
        let d = doc("CHDV,98,勞訴,37,20100409,1", "勞訴", WITH_DISPUTES);
        assert!(is_eligible(&d, &CaseFilter::default(), &DisputeExtractor::default()));
    }

    #[test]
    fn labor_case_without_disputes_is_not() {
        let d = doc("CHDV,98,勞訴,37,20100409,1", "勞訴", "原告之訴駁回。");
        assert_eq!(
            screen(&d, &CaseFilter::default(), &DisputeExtractor::default()),
            Err(ExclusionReason::NoDisputeSection)
        );
    }

    #[test]
    fn other_case_codes_and_courts_are_excluded() {
        let f = CaseFilter::default();
        let e = DisputeExtractor::default();
        assert_eq!(screen(&doc("CHDV,98,訴,37,20100409,1", "訴", WITH_DISPUTES), &f, &e), Err(ExclusionReason::CaseCode));
        assert_eq!(screen(&doc("TPHV,98,勞上,37,20100409,1", "勞上", WITH_DISPUTES), &f, &e), Err(ExclusionReason::CaseCode));
        assert_eq!(screen(&doc("TPHV,98,勞訴,37,20100409,1", "勞訴", WITH_DISPUTES), &f, &e), Err(ExclusionReason::Court));
    }

    #[test]
    fn appeal_markers_override_the_allowlist() {
        let f = CaseFilter {
            jcase_allowlist: vec!["勞簡上".into()],
            ..CaseFilter::default()
        };
        let d = doc("TPDV,98,勞簡上,37,20100409,1", "勞簡上", WITH_DISPUTES);
        assert_eq!(screen(&d, &f, &DisputeExtractor::default()), Err(ExclusionReason::Appeal));
    }

    #[test]
    fn title_rules() {
        let f = CaseFilter {
            jtitle_include: vec!["資遣費".into()],
            ..CaseFilter::default()
        };
        let d = doc("CHDV,98,勞訴,37,20100409,1", "勞訴", WITH_DISPUTES);
        assert_eq!(f.metadata_check(&d), Err(ExclusionReason::Title));
    }

    #[test]
    fn filter_deserializes_with_defaults() {
        let f: CaseFilter = toml::from_str("jcase_allowlist = [\"勞訴\"]").unwrap();
        assert_eq!(f.jcase_allowlist, vec!["勞訴"]);
        assert_eq!(f.court_pattern, CaseFilter::default().court_pattern);
    }
}
