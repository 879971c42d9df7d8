use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use super::{
    run_chain, ChainOutcome, ChainStatus, Journal, LlmError, LlmProfile, LlmProvider, PartyClaims,
    PromptTemplates, ProviderError, TokenCounter,
};
use crate::corpus::{BlurRules, DisputeSet, DisputeSource, EntityDetector};

/// Spaces calls to the wrapped provider at least `min_interval` apart.
pub struct RateLimited<P> {
    inner: P,
    min_interval: Duration,
    next_slot: Mutex<Instant>,
}

impl<P> RateLimited<P> {
    pub fn new(inner: P, min_interval: Duration) -> Self {
        RateLimited {
            inner,
            min_interval,
            next_slot: Mutex::new(Instant::now()),
        }
    }
}

impl<P: LlmProvider> LlmProvider for RateLimited<P> {
    fn complete(&self, prompt: &str, temperature: f64) -> Result<String, ProviderError> {
        let wait = {
            let mut next = self.next_slot.lock().unwrap();
            let now = Instant::now();
            let slot = (*next).max(now);
            *next = slot + self.min_interval;
            slot - now
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
        self.inner.complete(prompt, temperature)
    }
}

#[derive(Debug, Default)]
pub struct BatchReport {
    /// Every journaled outcome for the submitted cases, in input order.
    pub outcomes: Vec<ChainOutcome>,
    /// Cases skipped because they were already journaled.
    pub resumed: usize,
    /// Cases whose provider failed; they are not journaled and will be
    /// retried on the next run.
    pub failed: Vec<(String, String)>,
}

/// Runs the chain over `cases`, skipping any already in `journal`.
///
/// Up to `workers` cases run at once; steps within a case stay sequential.
pub fn run_batch(
    cases: &[PartyClaims],
    profile: &LlmProfile,
    provider: &dyn LlmProvider,
    tokenizer: &dyn TokenCounter,
    templates: &PromptTemplates,
    journal: &Journal,
    workers: usize,
) -> Result<BatchReport, LlmError> {
    profile.validate()?;
    let next = AtomicUsize::new(0);
    let failed = Mutex::new(Vec::new());
    let journal_error = Mutex::new(None);
    let resumed = cases.iter().filter(|c| journal.contains(&c.case_id)).count();

    std::thread::scope(|scope| {
        for _ in 0..workers.max(1) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(claims) = cases.get(i) else { break };
                if journal.contains(&claims.case_id) {
                    continue;
                }
                match run_chain(claims, profile, provider, tokenizer, templates) {
                    Ok(outcome) => {
                        if let Err(e) = journal.append(&outcome) {
                            *journal_error.lock().unwrap() = Some(e);
                            break;
                        }
                    }
                    Err(e) => {
                        log::warn!("{}: {e}", claims.case_id);
                        failed.lock().unwrap().push((claims.case_id.clone(), e.to_string()));
                    }
                }
            });
        }
    });
    if let Some(e) = journal_error.into_inner().unwrap() {
        return Err(e);
    }
    let outcomes = cases.iter().filter_map(|c| journal.get(&c.case_id)).collect();
    let mut failed = failed.into_inner().unwrap();
    failed.sort();
    Ok(BatchReport {
        outcomes,
        resumed,
        failed,
    })
}

/// Turns successful outcomes into blurred dispute sets for `model_id`.
pub fn outcomes_to_dispute_sets(
    outcomes: &[ChainOutcome],
    model_id: &str,
    detector: &dyn EntityDetector,
    rules: &BlurRules,
) -> Vec<DisputeSet> {
    outcomes
        .iter()
        .filter(|o| o.status == ChainStatus::Ok)
        .map(|o| {
            DisputeSet::from_raw(
                o.case_id.clone(),
                DisputeSource::Llm(model_id.to_string()),
                o.disputes.clone(),
                detector,
                rules,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RuleBasedDetector;
    use crate::llm::{build_prompt, CannedReply, CannedReplyProvider, CharTokenCounter, PromptStep};

    fn case(id: &str, plaintiff: &str) -> PartyClaims {
        PartyClaims {
            case_id: id.into(),
            plaintiff_claim: plaintiff.into(),
            defendant_claim: "被告否認".into(),
        }
    }

    fn provider_for(cases: &[PartyClaims]) -> CannedReplyProvider {
        let t = PromptTemplates::default();
        CannedReplyProvider::new(cases.iter().flat_map(|c| {
            let p = vec![format!("甲{}", c.case_id)];
            let d = vec!["乙".to_string()];
            [
                CannedReply::new(
                    &build_prompt(PromptStep::Plaintiff, c, None, &t).unwrap(),
                    format!("{{'p_point': ['{}']}}", p[0]),
                ),
                CannedReply::new(&build_prompt(PromptStep::Defendant, c, None, &t).unwrap(), "{'d_point': ['乙']}"),
                CannedReply::new(
                    &build_prompt(PromptStep::Dispute, c, Some((&p, &d)), &t).unwrap(),
                    format!("{{'dispute': ['{}於民國98年1月1日是否離職']}}", c.case_id),
                ),
            ]
        }))
    }

    #[test]
    fn over_budget_cases_are_the_only_ones_missing() {
        let long = "長".repeat(400);
        let cases = vec![case("a", "短"), case("b", &long), case("c", "短短"), case("d", &long)];
        let provider = provider_for(&cases);
        let mut profile = LlmProfile::gpt4();
        profile.token_budget = 300;
        let dir = tempfile::tempdir().unwrap();
        let journal = Journal::open(&dir.path().join("j.jsonl")).unwrap();
        let report = run_batch(&cases, &profile, &provider, &CharTokenCounter, &PromptTemplates::default(), &journal, 3)
            .unwrap();
        let kept = report
            .outcomes
            .iter()
            .filter(|o| o.status != ChainStatus::DroppedTooLong)
            .count();
        assert_eq!(kept, cases.len() - 2);
        assert_eq!(report.outcomes.len(), 4);

        let sets = outcomes_to_dispute_sets(&report.outcomes, "m", &RuleBasedDetector::default(), &BlurRules::default());
        assert_eq!(sets.len(), 2);
        assert_eq!(sets[0].items, vec!["a於某時是否離職"]);
        assert_eq!(sets[0].source, DisputeSource::Llm("m".into()));
    }

    #[test]
    fn resume_skips_journaled_cases() {
        let cases = vec![case("a", "短"), case("b", "短短")];
        let provider = provider_for(&cases);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.jsonl");
        let t = PromptTemplates::default();
        let first = run_batch(&cases[..1], &LlmProfile::gpt35(), &provider, &CharTokenCounter, &t, &Journal::open(&path).unwrap(), 1)
            .unwrap();
        assert_eq!(first.resumed, 0);
        let empty = CannedReplyProvider::default();
        let second = run_batch(&cases, &LlmProfile::gpt35(), &empty, &CharTokenCounter, &t, &Journal::open(&path).unwrap(), 2)
            .unwrap();
        assert_eq!(second.resumed, 1);
        assert_eq!(second.outcomes[0].status, ChainStatus::Ok);
        assert_eq!(second.outcomes[1].status, ChainStatus::DroppedNoOutput);
    }

    #[test]
    fn rate_limit_spaces_calls() {
        let p = RateLimited::new(CannedReplyProvider::default(), Duration::from_millis(20));
        let start = Instant::now();
        for _ in 0..3 {
            p.complete("x", 0.0).unwrap();
        }
        assert!(start.elapsed() >= Duration::from_millis(40));
    }
}
