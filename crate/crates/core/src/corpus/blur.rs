use serde::{Deserialize, Serialize};

use super::ner::{resolve_overlaps, EntityClass, EntityDetector, EntitySpan};

/// Generic replacement for each entity class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlurRules {
    pub person: String,
    pub place: String,
    pub time: String,
}

impl Default for BlurRules {
    fn default() -> Self {
        BlurRules {
            person: "某人".into(),
            place: "某地".into(),
            time: "某時".into(),
        }
    }
}

impl BlurRules {
    pub fn replacement(&self, class: EntityClass) -> &str {
        match class {
            EntityClass::Person => &self.person,
            EntityClass::Place => &self.place,
            EntityClass::Time => &self.time,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum BlurError {
    #[error("entity spans overlap or are out of order at byte {0}")]
    OverlappingSpans(usize),
    #[error("entity span {start}..{end} is outside the statement or splits a character")]
    SpanOutOfBounds { start: usize, end: usize },
}

/// Replaces each span with the generic term for its class.
///
/// Spans must be sorted and non-overlapping. The k-th replacement in the
/// output corresponds to the k-th input span.
pub fn blur(statement: &str, entities: &[EntitySpan], rules: &BlurRules) -> Result<String, BlurError> {
    let mut out = String::with_capacity(statement.len());
    let mut cursor = 0;
    for e in entities {
        let (start, end) = (e.range.start, e.range.end);
        if start > end
            || end > statement.len()
            || !statement.is_char_boundary(start)
            || !statement.is_char_boundary(end)
        {
            return Err(BlurError::SpanOutOfBounds { start, end });
        }
        if start < cursor {
            return Err(BlurError::OverlappingSpans(start));
        }
        out.push_str(&statement[cursor..start]);
        out.push_str(rules.replacement(e.class));
        cursor = end;
    }
    out.push_str(&statement[cursor..]);
    Ok(out)
}

/// Detects entities in `statement` and blurs them.
pub fn blur_statement(statement: &str, detector: &dyn EntityDetector, rules: &BlurRules) -> String {
    let spans = resolve_overlaps(detector.detect(statement));
    blur(statement, &spans, rules).unwrap_or_else(|_| statement.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RuleBasedDetector;

    #[test]
    fn two_person_spans() {
        let s = "原告己○○、丙○○於具領退休金時";
        let spans = vec![
            EntitySpan::new(6..15, EntityClass::Person),
            EntitySpan::new(18..27, EntityClass::Person),
        ];
        assert_eq!(&s[6..15], "己○○");
        assert_eq!(blur(s, &spans, &BlurRules::default()).unwrap(), "原告某人、某人於具領退休金時");
    }

    #[test]
    fn zero_entities_is_identity() {
        assert_eq!(blur("兩造間是否終止契約？", &[], &BlurRules::default()).unwrap(), "兩造間是否終止契約？");
    }

    #[test]
    fn overlapping_spans_are_rejected() {
        let spans = vec![
            EntitySpan::new(0..6, EntityClass::Place),
            EntitySpan::new(3..9, EntityClass::Time),
        ];
        assert_eq!(blur("長森醫院", &spans, &BlurRules::default()), Err(BlurError::OverlappingSpans(3)));
    }

    #[test]
    fn spans_inside_a_character_are_rejected() {
        let spans = vec![EntitySpan::new(1..3, EntityClass::Place)];
        assert!(matches!(blur("長森", &spans, &BlurRules::default()), Err(BlurError::SpanOutOfBounds { .. })));
    }

    #[test]
    fn custom_replacements() {
        let rules = BlurRules {
            person: "P".into(),
            ..BlurRules::default()
        };
        assert_eq!(blur_statement("原告王○○", &RuleBasedDetector::default(), &rules), "原告P");
    }
}
