//! Lenient extraction of the item list from an LLM reply.

use std::sync::LazyLock;

use regex::Regex;

use super::PointKey;

static BULLET: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^\s*(?:[-*•・●]|\d{1,2}\s*[.)、．]|[一二三四五六七八九十]{1,3}、|[(（]\s*(?:\d{1,2}|[一二三四五六七八九十]{1,3})\s*[)）])\s*(.+?)\s*$",
    )
    .unwrap()
});

/// Returns the list bound to `key` in `reply`.
///
/// An object literal such as `{'dispute': ['a', 'b']}` is tried first (single
/// or double quotes, unquoted items tolerated). Otherwise bulleted or numbered
/// lines are collected, starting after a line naming the key when one exists.
/// Returns an empty list when nothing can be extracted.
pub fn parse_point_list(reply: &str, key: PointKey) -> Vec<String> {
    let items = object_literal_list(reply, key.as_str());
    if !items.is_empty() {
        return items;
    }
    bullet_list(reply, key.as_str())
}

fn object_literal_list(reply: &str, key: &str) -> Vec<String> {
    for quote in ['\'', '"'] {
        let needle = format!("{quote}{key}{quote}");
        let mut search_from = 0;
        while let Some(found) = reply[search_from..].find(&needle) {
            let after = search_from + found + needle.len();
            search_from = after;
            let rest = reply[after..].trim_start();
            let Some(rest) = rest.strip_prefix([':', '：']) else {
                continue;
            };
            let Some(body) = rest.trim_start().strip_prefix('[') else {
                continue;
            };
            let items = list_items(body);
            if !items.is_empty() {
                return items;
            }
        }
    }
    Vec::new()
}

/// Parses the inside of a bracketed list up to the closing bracket (or the
/// end of a truncated reply).
fn list_items(body: &str) -> Vec<String> {
    let mut items = Vec::new();
    let mut chars = body.chars().peekable();
    loop {
        while chars.peek().is_some_and(|c| c.is_whitespace() || *c == ',') {
            chars.next();
        }
        let Some(&c) = chars.peek() else { break };
        if c == ']' {
            break;
        }
        let mut item = String::new();
        if c == '\'' || c == '"' {
            chars.next();
            while let Some(ch) = chars.next() {
                match ch {
                    '\\' => match chars.next() {
                        Some('n') => item.push('\n'),
                        Some('t') => item.push('\t'),
                        Some(other) => item.push(other),
                        None => break,
                    },
                    ch if ch == c => break,
                    ch => item.push(ch),
                }
            }
        } else {
            while let Some(&ch) = chars.peek() {
                if ch == ',' || ch == ']' {
                    break;
                }
                item.push(ch);
                chars.next();
            }
        }
        let item = item.trim();
        if !item.is_empty() {
            items.push(item.to_string());
        }
    }
    items
}

fn names_key(line: &str, key: &str) -> bool {
    let t = line.trim().trim_start_matches(['#', '*', '\'', '"', '{', ' ']);
    t.strip_prefix(key)
        .is_some_and(|rest| rest.trim_start_matches(['\'', '"', '*']).trim().starts_with([':', '：']) || rest.trim().is_empty())
}

fn bullet_list(reply: &str, key: &str) -> Vec<String> {
    let lines: Vec<&str> = reply.lines().collect();
    let start = lines.iter().position(|l| names_key(l, key));
    let mut items = Vec::new();
    match start {
        Some(header) => {
            for line in &lines[header + 1..] {
                if let Some(caps) = BULLET.captures(line) {
                    items.push(caps[1].to_string());
                } else if line.trim().is_empty() {
                    continue;
                } else if !items.is_empty() {
                    break;
                }
            }
        }
        None => {
            items.extend(lines.iter().filter_map(|l| BULLET.captures(l)).map(|c| c[1].to_string()));
        }
    }
    items
}
