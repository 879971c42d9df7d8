use serde::{Deserialize, Serialize};

use super::{
    build_prompt, parse_point_list, LlmError, LlmProfile, LlmProvider, PartyClaims, PromptStep,
    PromptTemplates, TokenCounter,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainStatus {
    Ok,
    DroppedTooLong,
    DroppedNoOutput,
}

/// Result of running the chain on one case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainOutcome {
    pub case_id: String,
    pub status: ChainStatus,
    pub p_points: Vec<String>,
    pub d_points: Vec<String>,
    pub disputes: Vec<String>,
    /// Most submissions spent on any single step.
    pub attempts: u32,
    /// Provider calls over all steps.
    pub provider_calls: u32,
}

impl ChainOutcome {
    fn new(case_id: &str) -> Self {
        ChainOutcome {
            case_id: case_id.to_string(),
            status: ChainStatus::Ok,
            p_points: Vec::new(),
            d_points: Vec::new(),
            disputes: Vec::new(),
            attempts: 0,
            provider_calls: 0,
        }
    }

    fn finish(mut self, status: ChainStatus) -> Self {
        self.status = status;
        self
    }
}

struct StepRunner<'a> {
    profile: &'a LlmProfile,
    provider: &'a dyn LlmProvider,
}

impl StepRunner<'_> {
    /// Submits `prompt` until its reply parses into a non-empty list, or the
    /// retries are spent. Only the failing step is resubmitted.
    fn run(&self, step: PromptStep, prompt: &str, outcome: &mut ChainOutcome) -> Result<Vec<String>, LlmError> {
        for attempt in 1..=self.profile.max_retries + 1 {
            outcome.provider_calls += 1;
            outcome.attempts = outcome.attempts.max(attempt);
            let reply = self.provider.complete(prompt, self.profile.temperature)?;
            let items = parse_point_list(&reply, step.key());
            if !items.is_empty() {
                return Ok(items);
            }
            log::debug!("{}: empty {:?} reply on attempt {attempt}", outcome.case_id, step);
        }
        Ok(Vec::new())
    }
}

/// Runs the three steps for one case.
///
/// Cases whose claim-bearing prompts exceed the token budget are dropped
/// before any provider call; the dispute prompt is checked again once the
/// point lists are known. Transport failures surface as
/// [`LlmError::Provider`] and are never counted as empty replies.
pub fn run_chain(
    claims: &PartyClaims,
    profile: &LlmProfile,
    provider: &dyn LlmProvider,
    tokenizer: &dyn TokenCounter,
    templates: &PromptTemplates,
) -> Result<ChainOutcome, LlmError> {
    profile.validate()?;
    if claims.plaintiff_claim.trim().is_empty() || claims.defendant_claim.trim().is_empty() {
        return Err(LlmError::EmptyClaims(claims.case_id.clone()));
    }
    let mut outcome = ChainOutcome::new(&claims.case_id);
    let over_budget = |prompt: &str| tokenizer.count_tokens(prompt) > profile.token_budget;

    let plaintiff_prompt = build_prompt(PromptStep::Plaintiff, claims, None, templates)?;
    let defendant_prompt = build_prompt(PromptStep::Defendant, claims, None, templates)?;
    if over_budget(&plaintiff_prompt) || over_budget(&defendant_prompt) {
        return Ok(outcome.finish(ChainStatus::DroppedTooLong));
    }

    let runner = StepRunner { profile, provider };
    outcome.p_points = runner.run(PromptStep::Plaintiff, &plaintiff_prompt, &mut outcome)?;
    if outcome.p_points.is_empty() {
        return Ok(outcome.finish(ChainStatus::DroppedNoOutput));
    }
    outcome.d_points = runner.run(PromptStep::Defendant, &defendant_prompt, &mut outcome)?;
    if outcome.d_points.is_empty() {
        return Ok(outcome.finish(ChainStatus::DroppedNoOutput));
    }

    let dispute_prompt = build_prompt(
        PromptStep::Dispute,
        claims,
        Some((&outcome.p_points, &outcome.d_points)),
        templates,
    )?;
    if over_budget(&dispute_prompt) {
        return Ok(outcome.finish(ChainStatus::DroppedTooLong));
    }
    outcome.disputes = runner.run(PromptStep::Dispute, &dispute_prompt, &mut outcome)?;
    if outcome.disputes.is_empty() {
        return Ok(outcome.finish(ChainStatus::DroppedNoOutput));
    }
    Ok(outcome.finish(ChainStatus::Ok))
}

#[cfg(test)]
mod tests {
    use std::sync::Mutex;

    use super::*;
    use crate::llm::{CharTokenCounter, ProviderError};

    /// Replies from a fixed script, then repeats the last entry.
    struct Scripted {
        replies: Vec<&'static str>,
        calls: Mutex<usize>,
    }

    impl Scripted {
        fn new(replies: Vec<&'static str>) -> Self {
            Scripted { replies, calls: Mutex::new(0) }
        }
        fn calls(&self) -> usize {
            *self.calls.lock().unwrap()
        }
    }

    impl LlmProvider for Scripted {
        fn complete(&self, _: &str, _: f64) -> Result<String, ProviderError> {
            let mut n = self.calls.lock().unwrap();
            let r = self.replies[(*n).min(self.replies.len() - 1)];
            *n += 1;
            Ok(r.to_string())
        }
    }

    struct Broken;
    impl LlmProvider for Broken {
        fn complete(&self, _: &str, _: f64) -> Result<String, ProviderError> {
            Err(ProviderError("connection reset".into()))
        }
    }

    fn claims() -> PartyClaims {
        PartyClaims {
            case_id: "c1".into(),
            plaintiff_claim: "原告主張被告積欠工資".into(),
            defendant_claim: "被告否認".into(),
        }
    }

    fn run(p: &dyn LlmProvider, profile: &LlmProfile) -> ChainOutcome {
        run_chain(&claims(), profile, p, &CharTokenCounter, &PromptTemplates::default()).unwrap()
    }

    #[test]
    fn happy_path_uses_three_calls() {
        let p = Scripted::new(vec![
            "{'p_point': ['積欠工資']}",
            "{'d_point': ['已給付']}",
            "{'dispute': ['是否積欠工資', '數額']}",
        ]);
        let o = run(&p, &LlmProfile::gpt35());
        assert_eq!(o.status, ChainStatus::Ok);
        assert_eq!(p.calls(), 3);
        assert_eq!(o.provider_calls, 3);
        assert_eq!(o.disputes, vec!["是否積欠工資", "數額"]);
        assert_eq!(o.attempts, 1);
    }

    #[test]
    fn persistent_empty_first_step_is_dropped_after_four_attempts() {
        let p = Scripted::new(vec![""]);
        let o = run(&p, &LlmProfile::gpt35());
        assert_eq!(o.status, ChainStatus::DroppedNoOutput);
        assert_eq!(o.attempts, 4);
        assert_eq!(p.calls(), 4);
    }

    #[test]
    fn only_the_failing_step_is_resubmitted() {
        let p = Scripted::new(vec![
            "{'p_point': ['a']}",
            "nothing",
            "{'d_point': ['b']}",
            "{'dispute': ['x']}",
        ]);
        let o = run(&p, &LlmProfile::gpt4());
        assert_eq!(o.status, ChainStatus::Ok);
        assert_eq!(p.calls(), 4);
        assert_eq!(o.attempts, 2);
    }

    #[test]
    fn budget_boundary() {
        let templates = PromptTemplates::default();
        let prompt = build_prompt(PromptStep::Plaintiff, &claims(), None, &templates).unwrap();
        let tokens = CharTokenCounter.count_tokens(&prompt);
        let ok = || Scripted::new(vec!["{'p_point': ['a']}", "{'d_point': ['b']}", "{'dispute': ['x']}"]);

        let mut profile = LlmProfile::gpt4();
        profile.token_budget = tokens - 1;
        let p = ok();
        let o = run(&p, &profile);
        assert_eq!(o.status, ChainStatus::DroppedTooLong);
        assert_eq!((p.calls(), o.provider_calls), (0, 0));

        profile.token_budget = tokens.max(
            CharTokenCounter.count_tokens(
                &build_prompt(PromptStep::Defendant, &claims(), None, &templates).unwrap(),
            ),
        ) + 200;
        let p = ok();
        assert_eq!(run(&p, &profile).status, ChainStatus::Ok);
    }

    #[test]
    fn transport_errors_are_not_retried_as_empty_output() {
        let err = run_chain(
            &claims(),
            &LlmProfile::gpt35(),
            &Broken,
            &CharTokenCounter,
            &PromptTemplates::default(),
        )
        .unwrap_err();
        assert!(matches!(err, LlmError::Provider(_)));
    }

    #[test]
    fn empty_claims_are_rejected() {
        let mut c = claims();
        c.defendant_claim = "  ".into();
        let err = run_chain(&c, &LlmProfile::gpt35(), &Broken, &CharTokenCounter, &PromptTemplates::default())
            .unwrap_err();
        assert!(matches!(err, LlmError::EmptyClaims(_)));
    }

    proptest::proptest! {
        #[test]
        fn call_count_bounded_and_ok_implies_disputes(
            script in proptest::collection::vec(0usize..4, 1..16),
            retries in 0u32..4,
        ) {
            const R: [&str; 4] = ["", "{'p_point': ['a']}", "{'d_point': ['b']}", "{'dispute': ['x']}"];
            let p = Scripted::new(script.iter().map(|&i| R[i]).collect());
            let mut profile = LlmProfile::gpt35();
            profile.max_retries = retries;
            let o = run(&p, &profile);
            proptest::prop_assert!(p.calls() as u32 <= 3 * (1 + retries));
            proptest::prop_assert!(o.attempts <= 1 + retries);
            if o.status == ChainStatus::Ok {
                proptest::prop_assert!(!o.disputes.is_empty());
            }
            let again = Scripted::new(script.iter().map(|&i| R[i]).collect());
            proptest::prop_assert_eq!(run(&again, &profile), o);
        }
    }
}
