/// Counts prompt tokens for budget checks.
pub trait TokenCounter: Send + Sync {
    fn count_tokens(&self, text: &str) -> usize;
}

/// Approximates a subword tokenizer on Chinese text: every non-space
/// character is a token except that a run of ASCII letters and digits counts
/// once.
#[derive(Debug, Clone, Copy, Default)]
pub struct CharTokenCounter;

impl TokenCounter for CharTokenCounter {
    fn count_tokens(&self, text: &str) -> usize {
        let mut count = 0;
        let mut in_ascii_word = false;
        for c in text.chars() {
            if c.is_ascii_alphanumeric() {
                if !in_ascii_word {
                    count += 1;
                    in_ascii_word = true;
                }
            } else {
                in_ascii_word = false;
                if !c.is_whitespace() {
                    count += 1;
                }
            }
        }
        count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let t = CharTokenCounter;
        assert_eq!(t.count_tokens(""), 0);
        assert_eq!(t.count_tokens("勞動契約"), 4);
        assert_eq!(t.count_tokens("abc 勞動, x1"), 5);
    }
}
