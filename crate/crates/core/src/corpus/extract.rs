//! Locating the court's dispute list inside a judgment and splitting it into items.

use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::LazyLock;

/// Longest body accepted for a single dispute item, in characters.
const MAX_ITEM_CHARS: usize = 300;
const MAX_NESTING: usize = 3;
/// Longest sub-heading (e.g. `關於工資部分：`) tolerated before a nested list.
const MAX_SUBHEADING_CHARS: usize = 24;

const DEFAULT_HEADERS: &[&str] = &[
    r"(?:本件|兩造)?(?:之)?(?:主要)?爭執(?:之)?事項(?:如下|為|在於)?\s*[：:]?",
    r"(?:本件|兩造)?(?:之)?(?:主要)?爭點(?:如下|為|在於)?\s*[：:]?",
];

/// Headings that start the court's reasoning; a list never continues into them.
const SECTION_BREAKS: &[&str] = &["本院之判斷", "本院判斷", "得心證之理由", "經查", "理由"];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ExtractError {
    #[error("{count} dispute sections with different items match the same header")]
    AmbiguousSection { count: usize },
}

/// Ordered header patterns; the first pattern with a usable match wins.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct DisputeExtractor {
    patterns: Vec<String>,
    headers: Vec<Regex>,
}

impl Default for DisputeExtractor {
    fn default() -> Self {
        Self::new(DEFAULT_HEADERS.iter().map(|s| s.to_string()).collect())
            .expect("default header patterns compile")
    }
}

impl TryFrom<Vec<String>> for DisputeExtractor {
    type Error = regex::Error;

    fn try_from(patterns: Vec<String>) -> Result<Self, Self::Error> {
        Self::new(patterns)
    }
}

impl From<DisputeExtractor> for Vec<String> {
    fn from(e: DisputeExtractor) -> Self {
        e.patterns
    }
}

impl DisputeExtractor {
    pub fn new(patterns: Vec<String>) -> Result<Self, regex::Error> {
        let headers = patterns
            .iter()
            .map(|p| Regex::new(p))
            .collect::<Result<_, _>>()?;
        Ok(DisputeExtractor { patterns, headers })
    }

    pub fn patterns(&self) -> &[String] {
        &self.patterns
    }

    /// Returns the itemized disputes with enumeration markers stripped, or an
    /// empty list when the text has no dispute section.
    pub fn extract(&self, jfull: &str) -> Result<Vec<String>, ExtractError> {
        let text = normalize_whitespace(jfull);
        for header in &self.headers {
            let mut candidates: Vec<Vec<String>> = Vec::new();
            for m in header.find_iter(&text) {
                // "不爭執事項" lists the undisputed facts.
                if text[..m.start()].ends_with('不') {
                    continue;
                }
                let allow_unnumbered = m.as_str().ends_with(['：', ':', '為']) || m.as_str().ends_with("在於");
                let items = parse_list(&text[m.end()..], allow_unnumbered);
                if !items.is_empty() && !candidates.contains(&items) {
                    candidates.push(items);
                }
            }
            match candidates.len() {
                0 => continue,
                1 => return Ok(candidates.pop().unwrap()),
                count => return Err(ExtractError::AmbiguousSection { count }),
            }
        }
        Ok(Vec::new())
    }
}

/// Extracts disputes with the default header patterns.
pub fn extract_disputes(doc: &super::JudgmentDoc) -> Result<Vec<String>, ExtractError> {
    DisputeExtractor::default().extract(&doc.jfull)
}

fn is_cjkish(c: char) -> bool {
    matches!(c as u32,
        0x3000..=0x303F | 0x3400..=0x4DBF | 0x4E00..=0x9FFF | 0xF900..=0xFAFF
        | 0xFF00..=0xFFEF | 0x20000..=0x2A6DF | 0x25CB)
}

/// Removes line wrapping and spacing inside Chinese text.
///
/// A whitespace run is dropped when it touches a CJK character or CJK
/// punctuation on either side; elsewhere it collapses to one ASCII space.
pub fn normalize_whitespace(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len());
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            let start = i;
            while i < chars.len() && chars[i].is_whitespace() {
                i += 1;
            }
            let prev = start.checked_sub(1).map(|p| chars[p]);
            let next = chars.get(i).copied();
            let (Some(prev), Some(next)) = (prev, next) else {
                continue;
            };
            if !is_cjkish(prev) && !is_cjkish(next) {
                out.push(' ');
            }
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    /// `1.` `1、`
    Arabic,
    /// `一、`
    Chinese,
    /// `(一)`
    ParenChinese,
    /// `(1)`
    ParenArabic,
}

const FAMILIES: [Family; 4] = [
    Family::ParenChinese,
    Family::ParenArabic,
    Family::Chinese,
    Family::Arabic,
];

static ARABIC: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"([0-9０-９]{1,2})\s*[.．、]").unwrap());
static CHINESE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"([一二三四五六七八九十]{1,3})、").unwrap());
static PAREN_CHINESE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[(（]\s*([一二三四五六七八九十]{1,3})\s*[)）]").unwrap());
static PAREN_ARABIC: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[(（]\s*([0-9０-９]{1,2})\s*[)）]").unwrap());
static TOP_LEVEL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[一二三四五六七八九十]{1,3}、").unwrap());

impl Family {
    fn regex(self) -> &'static Regex {
        match self {
            Family::Arabic => &ARABIC,
            Family::Chinese => &CHINESE,
            Family::ParenChinese => &PAREN_CHINESE,
            Family::ParenArabic => &PAREN_ARABIC,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Marker {
    start: usize,
    end: usize,
    number: u32,
}

fn arabic_value(s: &str) -> Option<u32> {
    let mut v = 0u32;
    for c in s.chars() {
        let d = match c {
            '0'..='9' => c as u32 - '0' as u32,
            '０'..='９' => c as u32 - '０' as u32,
            _ => return None,
        };
        v = v * 10 + d;
    }
    Some(v)
}

/// Parses Chinese numerals from 1 to 99.
fn chinese_value(s: &str) -> Option<u32> {
    let digit = |c: char| "一二三四五六七八九".chars().position(|d| d == c).map(|p| p as u32 + 1);
    let chars: Vec<char> = s.chars().collect();
    match chars.as_slice() {
        [c] if *c == '十' => Some(10),
        [c] => digit(*c),
        ['十', u] => digit(*u).map(|u| 10 + u),
        [t, '十'] => digit(*t).map(|t| t * 10),
        [t, '十', u] => Some(digit(*t)? * 10 + digit(*u)?),
        _ => None,
    }
}

/// Finds markers of `family` in `text`, rejecting matches that are really
/// part of a number or a longer numeral.
fn markers(text: &str, family: Family) -> impl Iterator<Item = Marker> + '_ {
    family.regex().captures_iter(text).filter_map(move |caps| {
        let whole = caps.get(0).unwrap();
        let num = caps.get(1).unwrap().as_str();
        let prev = text[..whole.start()].chars().next_back();
        let next = text[whole.end()..].chars().next();
        let number = match family {
            Family::Arabic => {
                if prev.is_some_and(|c| c.is_ascii_alphanumeric() || c == '.' || ('０'..='９').contains(&c)) {
                    return None;
                }
                if next.is_some_and(|c| c.is_ascii_digit()) {
                    return None;
                }
                arabic_value(num)?
            }
            Family::ParenArabic => arabic_value(num)?,
            Family::Chinese => {
                if prev.is_some_and(|c| "一二三四五六七八九十".contains(c)) {
                    return None;
                }
                chinese_value(num)?
            }
            Family::ParenChinese => chinese_value(num)?,
        };
        Some(Marker {
            start: whole.start(),
            end: whole.end(),
            number,
        })
    })
}

/// A marker numbered 1 of some family at the very start of `text`.
fn leading_marker(text: &str, exclude: Option<Family>) -> Option<(Family, Marker)> {
    FAMILIES
        .iter()
        .filter(|f| Some(**f) != exclude)
        .find_map(|&f| {
            markers(text, f)
                .next()
                .filter(|m| m.start == 0 && m.number == 1)
                .map(|m| (f, m))
        })
}

fn parse_list(after_header: &str, allow_unnumbered: bool) -> Vec<String> {
    let rest = after_header.trim_start_matches(|c: char| c.is_whitespace() || "：:，,".contains(c));
    if let Some((family, _)) = leading_marker(rest, None) {
        return split_sequence(rest, family, 0);
    }
    if allow_unnumbered {
        let item = clean_item(cut_last_item(rest));
        if !item.is_empty() && item.chars().count() <= MAX_ITEM_CHARS {
            return vec![item];
        }
    }
    Vec::new()
}

/// Splits `text`, which starts with marker 1 of `family`, into items.
fn split_sequence(text: &str, family: Family, depth: usize) -> Vec<String> {
    let mut seq: Vec<Marker> = Vec::new();
    for m in markers(text, family) {
        let expected = seq.len() as u32 + 1;
        if m.number != expected {
            continue;
        }
        if let Some(prev) = seq.last() {
            let body = &text[prev.end..m.start];
            if body.chars().count() > MAX_ITEM_CHARS {
                break;
            }
        }
        if SECTION_BREAKS.iter().any(|b| text[m.end..].trim_start().starts_with(b)) {
            break;
        }
        seq.push(m);
    }

    let mut items = Vec::new();
    for (i, m) in seq.iter().enumerate() {
        let last = i + 1 == seq.len();
        let end = if last { text.len() } else { seq[i + 1].start };
        items.extend(item_bodies(&text[m.end..end], family, last, depth));
    }
    items.retain(|s| !s.is_empty());
    items
}

fn item_bodies(body: &str, family: Family, last: bool, depth: usize) -> Vec<String> {
    let body = body.trim_start();
    if depth < MAX_NESTING {
        let mut offsets = vec![0];
        if let Some(colon) = body.find(['：', ':']) {
            if body[..colon].chars().count() <= MAX_SUBHEADING_CHARS {
                offsets.push(colon + body[colon..].chars().next().unwrap().len_utf8());
            }
        }
        for off in offsets {
            let inner = body[off..].trim_start();
            if let Some((nested, _)) = leading_marker(inner, Some(family)) {
                let nested_items = split_sequence(inner, nested, depth + 1);
                if !nested_items.is_empty() {
                    return nested_items;
                }
            }
        }
    }
    let text = if last { cut_last_item(body) } else { body };
    vec![clean_item(text)]
}

/// The last item of a list has no following marker; it ends at its first
/// sentence terminator, or before the next top-level heading.
fn cut_last_item(text: &str) -> &str {
    if let Some(pos) = text.find(['？', '?', '。']) {
        let end = pos + text[pos..].chars().next().unwrap().len_utf8();
        return &text[..end];
    }
    let mut end = text.len();
    if let Some(m) = TOP_LEVEL.find(text) {
        end = end.min(m.start());
    }
    let limit = text
        .char_indices()
        .nth(MAX_ITEM_CHARS)
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    &text[..end.min(limit)]
}

fn clean_item(text: &str) -> String {
    let mut s = text.trim();
    loop {
        let before = s;
        if let Some((_, m)) = FAMILIES
            .iter()
            .find_map(|&f| markers(s, f).next().filter(|m| m.start == 0).map(|m| (f, m)))
        {
            s = s[m.end..].trim_start();
        }
        if s == before {
            break;
        }
    }
    s.trim_end_matches(|c: char| c.is_whitespace() || "；;，,、".contains(c))
        .to_string()
}
