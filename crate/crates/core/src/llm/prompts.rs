use serde::{Deserialize, Serialize};

use super::{LlmError, PartyClaims};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptStep {
    Plaintiff,
    Defendant,
    Dispute,
}

impl PromptStep {
    pub const ALL: [PromptStep; 3] = [PromptStep::Plaintiff, PromptStep::Defendant, PromptStep::Dispute];

    /// The list key the step's template asks for.
    pub fn key(self) -> PointKey {
        match self {
            PromptStep::Plaintiff => PointKey::PPoint,
            PromptStep::Defendant => PointKey::DPoint,
            PromptStep::Dispute => PointKey::Dispute,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointKey {
    PPoint,
    DPoint,
    Dispute,
}

impl PointKey {
    pub fn as_str(self) -> &'static str {
        match self {
            PointKey::PPoint => "p_point",
            PointKey::DPoint => "d_point",
            PointKey::Dispute => "dispute",
        }
    }
}

/// Prompt templates with `{plaintiff_claim}`, `{defendant_claim}`,
/// `{p_point}` and `{d_point}` placeholders.
///
/// The defaults are the rendered form of the original Python f-strings: the
/// `{'p_point': []}` braces are literal text and `\n` is a newline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptTemplates {
    pub plaintiff: String,
    pub defendant: String,
    pub dispute: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        PromptTemplates {
            plaintiff: "List the key points of the following article using {'p_point': []} as the template\n :{plaintiff_claim}".into(),
            defendant: "List the key points of the following article using {'d_point': []} as the template\n :{defendant_claim}".into(),
            dispute: "The following are the main points argued by the claimant and the counterparty. Based on this, list the dispute points between the two parties, and use {'dispute': []} as the template\n The following is the plaintiff's claim:\n {p_point} \n The following is the defendant's claim:\n {d_point} ".into(),
        }
    }
}

/// Substitutes placeholders in one left-to-right pass so that substituted
/// text is never rescanned.
fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'outer: while !rest.is_empty() {
        if rest.starts_with('{') {
            for (name, value) in vars {
                let placeholder = format!("{{{name}}}");
                if rest.starts_with(&placeholder) {
                    out.push_str(value);
                    rest = &rest[placeholder.len()..];
                    continue 'outer;
                }
            }
        }
        let c = rest.chars().next().unwrap();
        out.push(c);
        rest = &rest[c.len_utf8()..];
    }
    out
}

/// Formats a list of strings the way Python's `str(list)` does.
pub fn python_list_repr(items: &[String]) -> String {
    let parts: Vec<String> = items
        .iter()
        .map(|s| {
            let quote = if s.contains('\'') && !s.contains('"') { '"' } else { '\'' };
            let mut r = String::with_capacity(s.len() + 2);
            r.push(quote);
            for c in s.chars() {
                match c {
                    '\\' => r.push_str("\\\\"),
                    '\n' => r.push_str("\\n"),
                    '\r' => r.push_str("\\r"),
                    '\t' => r.push_str("\\t"),
                    c if c == quote => {
                        r.push('\\');
                        r.push(c);
                    }
                    c => r.push(c),
                }
            }
            r.push(quote);
            r
        })
        .collect();
    format!("[{}]", parts.join(", "))
}

/// Builds the prompt for `step`. The dispute step needs the point lists
/// returned by the first two steps.
pub fn build_prompt(
    step: PromptStep,
    claims: &PartyClaims,
    prior: Option<(&[String], &[String])>,
    templates: &PromptTemplates,
) -> Result<String, LlmError> {
    Ok(match step {
        PromptStep::Plaintiff => render(&templates.plaintiff, &[("plaintiff_claim", &claims.plaintiff_claim)]),
        PromptStep::Defendant => render(&templates.defendant, &[("defendant_claim", &claims.defendant_claim)]),
        PromptStep::Dispute => {
            let (p, d) = prior.ok_or(LlmError::MissingPrior)?;
            let (p, d) = (python_list_repr(p), python_list_repr(d));
            render(&templates.dispute, &[("p_point", &p), ("d_point", &d)])
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn claims() -> PartyClaims {
        PartyClaims {
            case_id: "c".into(),
            plaintiff_claim: "X".into(),
            defendant_claim: "Y {p_point}".into(),
        }
    }

    #[test]
    fn plaintiff_prompt_is_the_appendix_template() {
        let p = build_prompt(PromptStep::Plaintiff, &claims(), None, &PromptTemplates::default()).unwrap();
        assert_eq!(
            p,
            "List the key points of the following article using {'p_point': []} as the template\n :X"
        );
    }

    #[test]
    fn defendant_prompt_does_not_expand_claim_text() {
        let p = build_prompt(PromptStep::Defendant, &claims(), None, &PromptTemplates::default()).unwrap();
        assert!(p.contains("{'d_point': []}"));
        assert!(p.ends_with(":Y {p_point}"));
    }

    #[test]
    fn dispute_prompt_embeds_both_lists() {
        let p_points = vec!["a".to_string()];
        let d_points = vec!["b".to_string()];
        let p = build_prompt(
            PromptStep::Dispute,
            &claims(),
            Some((&p_points, &d_points)),
            &PromptTemplates::default(),
        )
        .unwrap();
        assert_eq!(
            p,
            "The following are the main points argued by the claimant and the counterparty. Based on this, list the dispute points between the two parties, and use {'dispute': []} as the template\n The following is the plaintiff's claim:\n ['a'] \n The following is the defendant's claim:\n ['b'] "
        );
    }

    #[test]
    fn dispute_prompt_without_prior_fails() {
        let r = build_prompt(PromptStep::Dispute, &claims(), None, &PromptTemplates::default());
        assert!(matches!(r, Err(LlmError::MissingPrior)));
    }

    #[test]
    fn python_repr_quoting() {
        let items = vec!["a".into(), "it's".into(), "say \"x\" 'y'".into(), "工資".into()];
        assert_eq!(
            python_list_repr(&items),
            r#"['a', "it's", 'say "x" \'y\'', '工資']"#
        );
        assert_eq!(python_list_repr(&[]), "[]");
    }
}
