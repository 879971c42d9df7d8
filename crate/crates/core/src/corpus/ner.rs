//! Named-entity detection for the blurring step.

use std::ops::Range;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityClass {
    Person,
    Place,
    Time,
}

/// A detected entity; `range` is a byte range into the statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntitySpan {
    pub range: Range<usize>,
    pub class: EntityClass,
}

impl EntitySpan {
    pub fn new(range: Range<usize>, class: EntityClass) -> Self {
        EntitySpan { range, class }
    }
}

/// Anything that can find person, place, and time mentions in a statement.
///
/// Implementations return sorted, non-overlapping spans on char boundaries.
pub trait EntityDetector: Send + Sync {
    fn detect(&self, statement: &str) -> Vec<EntitySpan>;
}

const MASKS: &[char] = &['○', '〇', 'Ｏ', '◯'];

/// Characters that end a place name when walking backwards from its suffix.
const PLACE_STOPS: &str = "於在之與及和向對由為係的至自告任受到往經即請該某被原是其並或而但";
const NOT_PLACE_NAMES: &[&str] = &["系爭", "兩造", "雙方", "同一", "本", "該", "貴", "其"];

const DEFAULT_PLACE_SUFFIXES: &[&str] = &[
    "股份有限公司",
    "有限公司",
    "事務所",
    "企業社",
    "公司",
    "醫院",
    "診所",
    "銀行",
    "學校",
    "大學",
    "工廠",
    "協會",
    "飯店",
    "商行",
];

static TIME_PATTERNS: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    [
        // 97年7月31日, 民國97年7月, 2008年7月31日
        r"(?:民國)?[0-9０-９]{2,4}\s*年\s*[0-9０-９]{1,2}\s*月(?:\s*[0-9０-９]{1,2}\s*日)?",
        // 九十七年七月三十一日
        r"(?:民國)?[〇零一二三四五六七八九十百]{2,5}年[一二三四五六七八九十]{1,3}月(?:[一二三四五六七八九十]{1,3}日)?",
        // 7月31日
        r"[0-9０-９]{1,2}\s*月\s*[0-9０-９]{1,2}\s*日",
        // a bare year; filtered below so that durations such as 10年 survive
        r"(?:民國)?[0-9０-９]{2,4}\s*年(?:度)?",
    ]
    .iter()
    .map(|p| Regex::new(p).unwrap())
    .collect()
});

/// Offline detector built from anonymization marks, date patterns, and
/// organisation suffixes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleBasedDetector {
    pub place_suffixes: Vec<String>,
    pub max_place_name_chars: usize,
}

impl Default for RuleBasedDetector {
    fn default() -> Self {
        RuleBasedDetector {
            place_suffixes: DEFAULT_PLACE_SUFFIXES.iter().map(|s| s.to_string()).collect(),
            max_place_name_chars: 6,
        }
    }
}

fn is_han(c: char) -> bool {
    matches!(c as u32, 0x3400..=0x4DBF | 0x4E00..=0x9FFF | 0xF900..=0xFAFF | 0x20000..=0x2A6DF)
        && c != '〇'
}

fn plausible_bare_year(digits: &str) -> bool {
    let value: u32 = digits
        .chars()
        .filter_map(|c| c.to_digit(10).or_else(|| ('０'..='９').contains(&c).then(|| c as u32 - '０' as u32)))
        .fold(0, |acc, d| acc * 10 + d);
    match digits.chars().count() {
        2 => value >= 60,
        3 => (60..=150).contains(&value),
        4 => (1900..=2100).contains(&value),
        _ => false,
    }
}

/// Extends `range` over adjacent whitespace, which line-wrapped judgments
/// scatter around numbers.
fn absorb_whitespace(s: &str, range: Range<usize>) -> Range<usize> {
    let start = s[..range.start]
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_whitespace())
        .last()
        .map_or(range.start, |(i, _)| i);
    let end = range.end
        + s[range.end..]
            .chars()
            .take_while(|c| c.is_whitespace())
            .map(char::len_utf8)
            .sum::<usize>();
    start..end
}

impl RuleBasedDetector {
    fn persons(&self, s: &str, out: &mut Vec<EntitySpan>) {
        let chars: Vec<(usize, char)> = s.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            if !MASKS.contains(&chars[i].1) {
                i += 1;
                continue;
            }
            let run_start = i;
            while i < chars.len() && MASKS.contains(&chars[i].1) {
                i += 1;
            }
            let end = chars.get(i).map_or(s.len(), |(b, _)| *b);
            let mut start = chars[run_start].0;
            // A short mask run follows the surname it anonymizes: 王○○.
            if i - run_start <= 2 && run_start > 0 && is_han(chars[run_start - 1].1) {
                start = chars[run_start - 1].0;
            }
            out.push(EntitySpan::new(start..end, EntityClass::Person));
        }
    }

    fn times(&self, s: &str, out: &mut Vec<EntitySpan>) {
        for (k, re) in TIME_PATTERNS.iter().enumerate() {
            for m in re.find_iter(s) {
                if k == 3 {
                    let digits: String = m.as_str().chars().take_while(|c| !c.is_whitespace() && *c != '年').collect();
                    let digits = digits.trim_start_matches("民國");
                    if !plausible_bare_year(digits) {
                        continue;
                    }
                }
                out.push(EntitySpan::new(absorb_whitespace(s, m.range()), EntityClass::Time));
            }
        }
    }

    fn places(&self, s: &str, out: &mut Vec<EntitySpan>) {
        let mut suffixes: Vec<&str> = self.place_suffixes.iter().map(String::as_str).collect();
        suffixes.sort_by_key(|x| std::cmp::Reverse(x.len()));
        let mut covered_until = 0usize;
        for (pos, _) in s.char_indices() {
            if pos < covered_until {
                continue;
            }
            let Some(suffix) = suffixes.iter().find(|suf| s[pos..].starts_with(**suf)) else {
                continue;
            };
            let name_start = s[..pos]
                .char_indices()
                .rev()
                .take_while(|(_, c)| is_han(*c) && !PLACE_STOPS.contains(*c))
                .take(self.max_place_name_chars)
                .last()
                .map_or(pos, |(i, _)| i);
            let name = &s[name_start..pos];
            let end = pos + suffix.len();
            covered_until = end;
            if name.is_empty() || NOT_PLACE_NAMES.contains(&name) {
                continue;
            }
            out.push(EntitySpan::new(name_start..end, EntityClass::Place));
        }
    }
}

impl EntityDetector for RuleBasedDetector {
    fn detect(&self, statement: &str) -> Vec<EntitySpan> {
        let mut spans = Vec::new();
        self.persons(statement, &mut spans);
        self.times(statement, &mut spans);
        self.places(statement, &mut spans);
        resolve_overlaps(spans)
    }
}

/// Sorts spans and greedily keeps the earliest, then longest, of any overlap.
pub(crate) fn resolve_overlaps(mut spans: Vec<EntitySpan>) -> Vec<EntitySpan> {
    spans.sort_by(|a, b| {
        a.range
            .start
            .cmp(&b.range.start)
            .then(b.range.end.cmp(&a.range.end))
    });
    let mut kept: Vec<EntitySpan> = Vec::with_capacity(spans.len());
    for span in spans {
        if kept.last().is_some_and(|k| span.range.start < k.range.end) {
            continue;
        }
        kept.push(span);
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;

    fn detect(s: &str) -> Vec<(&str, EntityClass)> {
        RuleBasedDetector::default()
            .detect(s)
            .into_iter()
            .map(|e| (&s[e.range], e.class))
            .collect()
    }

    #[test]
    fn person_with_surname() {
        assert_eq!(detect("原告己○○"), vec![("己○○", EntityClass::Person)]);
    }

    #[test]
    fn person_run_separated_by_enumeration_comma() {
        let found = detect("原告己○○、丙○○、乙○○於具領退休金時");
        assert_eq!(found.len(), 3);
        assert!(found.iter().all(|(_, c)| *c == EntityClass::Person));
        assert_eq!(found[1].0, "丙○○");
    }

    #[test]
    fn fully_masked_name_does_not_take_the_preceding_character() {
        assert_eq!(detect("原告○○○主張"), vec![("○○○", EntityClass::Person)]);
    }

    #[test]
    fn taiwan_calendar_date() {
        assert_eq!(detect("97年7月31日"), vec![("97年7月31日", EntityClass::Time)]);
    }

    #[test]
    fn spaced_date_absorbs_surrounding_whitespace() {
        let found = detect("於 97 年 7 月 31 日是否");
        assert_eq!(found, vec![(" 97 年 7 月 31 日", EntityClass::Time)]);
    }

    #[test]
    fn durations_are_not_times() {
        assert!(detect("原告任職10年").is_empty());
        assert_eq!(detect("自97年起任職")[0].1, EntityClass::Time);
    }

    #[test]
    fn organisation_names_are_places() {
        assert_eq!(detect("長森醫院於"), vec![("長森醫院", EntityClass::Place)]);
        assert_eq!(detect("原告任職於台灣大同股份有限公司"), vec![("台灣大同股份有限公司", EntityClass::Place)]);
        assert!(detect("被告公司應給付").is_empty());
        assert!(detect("系爭公司").is_empty());
    }

    #[test]
    fn empty_statement() {
        assert!(detect("").is_empty());
    }

    #[test]
    fn overlaps_keep_the_earliest_longest() {
        let spans = vec![
            EntitySpan::new(2..4, EntityClass::Time),
            EntitySpan::new(0..3, EntityClass::Place),
            EntitySpan::new(0..2, EntityClass::Person),
            EntitySpan::new(5..6, EntityClass::Person),
        ];
        let kept = resolve_overlaps(spans);
        assert_eq!(kept, vec![EntitySpan::new(0..3, EntityClass::Place), EntitySpan::new(5..6, EntityClass::Person)]);
    }
}
