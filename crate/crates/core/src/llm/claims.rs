use std::sync::LazyLock;

use regex::Regex;

use super::PartyClaims;
use crate::corpus::{normalize_whitespace, JudgmentDoc};

static PLAINTIFF: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"原告(?:起訴)?(?:主張|聲明|起訴意旨)(?:略以)?[：:]?").unwrap());
static DEFENDANT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"被告(?:則以|抗辯|答辯|辯稱)(?:略以)?[：:]?").unwrap());
static SECTION_END: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"兩造不爭執|不爭執事項|爭執事項|爭點|本院之判斷|得心證之理由").unwrap()
});
static TRAILING_MARKER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?:[一二三四五六七八九十]{1,3}、|[(（][一二三四五六七八九十]{1,3}[)）])\s*$").unwrap());

fn tidy(section: &str) -> String {
    let s = section.trim();
    TRAILING_MARKER.replace(s, "").trim().to_string()
}

/// Cuts the plaintiff and defendant statement sections out of a judgment.
///
/// Returns `None` unless both sections are found and non-empty.
pub fn extract_party_claims(doc: &JudgmentDoc) -> Option<PartyClaims> {
    let text = normalize_whitespace(&doc.jfull);
    let p = PLAINTIFF.find(&text)?;
    let d = DEFENDANT.find_at(&text, p.end())?;
    let end = SECTION_END
        .find_at(&text, d.end())
        .map_or(text.len(), |m| m.start());
    let plaintiff_claim = tidy(&text[p.end()..d.start()]);
    let defendant_claim = tidy(&text[d.end()..end]);
    if plaintiff_claim.is_empty() || defendant_claim.is_empty() {
        return None;
    }
    Some(PartyClaims {
        case_id: doc.jid.clone(),
        plaintiff_claim,
        defendant_claim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn doc(jfull: &str) -> JudgmentDoc {
        JudgmentDoc {
            jid: "TPDV,108,勞訴,1,20190101,1".into(),
            jyear: 108,
            jcase: "勞訴".into(),
            jno: "1".into(),
            jdate: NaiveDate::from_ymd_opt(2019, 1, 1).unwrap(),
            jtitle: "給付資遣費".into(),
            jfull: jfull.into(),
        }
    }

    #[test]
    fn both_sections() {
        let d = doc("事實及理由\r\n一、原告起訴主張：原告自100年起受僱於被告，\r\n被告未依法給付資遣費。\r\n二、被告則以：原告係自請離職。\r\n三、兩造不爭執事項：...四、本件爭點：...");
        let c = extract_party_claims(&d).unwrap();
        assert_eq!(c.plaintiff_claim, "原告自100年起受僱於被告，被告未依法給付資遣費。");
        assert_eq!(c.defendant_claim, "原告係自請離職。");
    }

    #[test]
    fn missing_defendant_section() {
        assert!(extract_party_claims(&doc("原告主張：被告應給付工資。")).is_none());
    }
}
