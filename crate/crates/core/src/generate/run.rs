use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use chrono::{DateTime, Utc};

use super::plan::{paraphrase_plan, GenerationConfig, PromptPlan};
use super::provider::{CompletionRequest, LlmProvider};
use super::template::stage_placeholder;
use super::{ByteHeuristic, GenerateError, TokenEstimator};
use crate::corpus::{ProfileDoc, Researcher};

/// Replaces every `{{STAGE_k}}` with the output of stage k (1-based).
pub fn splice_stage_outputs(user: &str, outputs: &[Option<String>]) -> String {
    let mut text = user.to_string();
    for (i, out) in outputs.iter().enumerate() {
        if let Some(out) = out {
            text = text.replace(&stage_placeholder(i + 1), out);
        }
    }
    text
}

/// Dependency depth of each stage; stages of equal depth are independent.
fn waves(plan: &PromptPlan) -> Vec<Vec<usize>> {
    let mut depth = vec![0usize; plan.stages.len()];
    for (i, s) in plan.stages.iter().enumerate() {
        depth[i] = s.depends_on.iter().map(|&d| depth[d - 1] + 1).max().unwrap_or(0);
    }
    let mut out = vec![Vec::new(); depth.iter().max().map_or(0, |d| d + 1)];
    for (i, d) in depth.into_iter().enumerate() {
        out[d].push(i);
    }
    out
}

/// Executes a plan and returns the last stage's output as a profile.
pub fn run_plan(provider: &dyn LlmProvider, plan: &PromptPlan, created_at: DateTime<Utc>) -> Result<ProfileDoc, GenerateError> {
    run_plan_with(provider, plan, &ByteHeuristic, created_at)
}

/// [`run_plan`] with an explicit token estimator for the dispatch-time
/// budget check. Independent stages run concurrently, up to the provider's
/// declared concurrency; a stage that consumes others waits for them.
pub fn run_plan_with(
    provider: &dyn LlmProvider,
    plan: &PromptPlan,
    estimator: &dyn TokenEstimator,
    created_at: DateTime<Utc>,
) -> Result<ProfileDoc, GenerateError> {
    plan.validate()?;
    let limit = plan.context_limit.min(provider.context_limit_tokens());
    let mut outputs: Vec<Option<String>> = vec![None; plan.stages.len()];

    for wave in waves(plan) {
        let requests = wave
            .iter()
            .map(|&i| {
                let s = &plan.stages[i];
                let request = CompletionRequest {
                    system: s.system.clone(),
                    user: splice_stage_outputs(&s.user, &outputs),
                    max_output_tokens: s.max_output_tokens,
                };
                let tokens = estimator.estimate(&request.system) + estimator.estimate(&request.user);
                if tokens > limit {
                    return Err(GenerateError::OverBudget { stage: i + 1, tokens, limit });
                }
                Ok((i, request))
            })
            .collect::<Result<Vec<_>, _>>()?;

        let results: Mutex<Vec<(usize, Result<String, GenerateError>)>> = Mutex::new(Vec::new());
        let next = AtomicUsize::new(0);
        let workers = provider.max_concurrency().clamp(1, requests.len());
        let work = || {
            while let Some((i, request)) = requests.get(next.fetch_add(1, Ordering::SeqCst)) {
                let stage = i + 1;
                log::debug!("{}: stage {stage}/{} ({})", plan.researcher_id, plan.stages.len(), plan.stages[*i].label);
                let result = match provider.complete(request) {
                    Err(source) => Err(GenerateError::Provider { stage, source }),
                    Ok(text) if text.trim().is_empty() => Err(GenerateError::EmptyCompletion { stage }),
                    Ok(text) => Ok(text.trim().to_string()),
                };
                results.lock().unwrap().push((*i, result));
            }
        };
        if workers == 1 {
            work();
        } else {
            std::thread::scope(|scope| {
                for _ in 0..workers {
                    scope.spawn(work);
                }
            });
        }
        let mut results = results.into_inner().unwrap();
        results.sort_by_key(|(i, _)| *i);
        for (i, r) in results {
            outputs[i] = Some(r?);
        }
    }

    let text = outputs.pop().flatten().expect("validated plans have stages");
    Ok(ProfileDoc {
        researcher_id: plan.researcher_id.clone(),
        variant: plan.variant(),
        text,
        created_at,
    })
}

/// Paraphrases the researcher's human-written profile.
pub fn paraphrase(
    provider: &dyn LlmProvider,
    researcher: &Researcher,
    config: &GenerationConfig,
    created_at: DateTime<Utc>,
) -> Result<ProfileDoc, GenerateError> {
    let plan = paraphrase_plan(researcher, config)?;
    run_plan_with(provider, &plan, config.estimator.as_ref(), created_at)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{PublicationRecord, Variant};
    use crate::generate::plan::{build_abstract_plan_from_groups, build_mesh_plan, MeshSplit};
    use crate::generate::provider::{MockProvider, ProviderError};

    fn at() -> DateTime<Utc> {
        "2024-01-01T00:00:00Z".parse().unwrap()
    }

    fn researcher() -> Researcher {
        let mut r = Researcher::new("r1", "Dr. Ada Stone", "Example Medical Center");
        r.human_profile = Some("Dr. Stone studies wound healing in older adults.".into());
        r
    }

    fn docs(n: usize) -> Vec<PublicationRecord> {
        (0..n)
            .map(|i| PublicationRecord {
                pmid: (100 + i).to_string(),
                title: format!("Title {i}"),
                abstract_text: format!("Abstract number {i} about wound care."),
                mesh_terms: vec![],
                authors: vec![],
                year: Some(2021),
                notes: vec![],
            })
            .collect()
    }

    fn three_stage_plan() -> PromptPlan {
        build_abstract_plan_from_groups(&researcher(), &docs(2), &[vec![0], vec![1]], &GenerationConfig::default()).unwrap()
    }

    #[test]
    fn echo_text_becomes_profile() {
        let split = MeshSplit { methodology_terms: vec!["Cohort Studies".into()], ..Default::default() };
        let plan = build_mesh_plan(&researcher(), &split, &GenerationConfig::default()).unwrap();
        let doc = run_plan(&MockProvider::Echo("Fixed profile.".into()), &plan, at()).unwrap();
        assert_eq!(doc.text, "Fixed profile.");
        assert_eq!(doc.variant, Variant::MeshGen);
        assert_eq!(doc.researcher_id, "r1");
        assert_eq!(doc.created_at, at());
    }

    #[test]
    fn stages_run_in_order_and_splice() {
        let plan = three_stage_plan();
        assert_eq!(plan.stages.len(), 3);
        let doc = run_plan(&MockProvider::counter(), &plan, at()).unwrap();
        assert_eq!(doc.text, "call 3 after call 1, call 2");
        assert_eq!(doc.variant, Variant::AbstractGen);
    }

    struct FailOn(usize, AtomicUsize);

    impl LlmProvider for FailOn {
        fn complete(&self, _: &CompletionRequest) -> Result<String, ProviderError> {
            let n = self.1.fetch_add(1, Ordering::SeqCst) + 1;
            if n == self.0 {
                Err(ProviderError::Failed("forced".into()))
            } else {
                Ok(format!("out {n}"))
            }
        }
        fn name(&self) -> String {
            "fail".into()
        }
    }

    #[test]
    fn provider_error_names_stage() {
        let err = run_plan(&FailOn(2, AtomicUsize::new(0)), &three_stage_plan(), at()).unwrap_err();
        assert!(matches!(err, GenerateError::Provider { stage: 2, .. }), "{err}");
        assert_eq!(err.stage(), Some(2));
        assert!(err.to_string().starts_with("stage 2:"));
    }

    #[test]
    fn empty_completion_is_an_error() {
        let err = run_plan(&MockProvider::Echo("  ".into()), &three_stage_plan(), at()).unwrap_err();
        assert!(matches!(err, GenerateError::EmptyCompletion { stage: 1 }));
    }

    #[test]
    fn dispatch_checks_actual_size() {
        // Outputs far larger than their allowance overflow the final stage.
        let mut plan = three_stage_plan();
        plan.context_limit = plan.stages.iter().map(|s| s.estimated_tokens).max().unwrap();
        let big = MockProvider::Echo("long ".repeat(2000));
        assert!(matches!(run_plan(&big, &plan, at()), Err(GenerateError::OverBudget { stage: 3, .. })));
    }

    #[test]
    fn concurrent_condense_is_deterministic() {
        let docs = docs(12);
        let groups: Vec<Vec<usize>> = (0..6).map(|g| vec![2 * g, 2 * g + 1]).collect();
        let plan = build_abstract_plan_from_groups(&researcher(), &docs, &groups, &GenerationConfig::default()).unwrap();
        let p = MockProvider::Extractive { max_words: 40 };
        let a = run_plan(&p, &plan, at()).unwrap();
        for _ in 0..5 {
            assert_eq!(run_plan(&p, &plan, at()).unwrap(), a);
        }
    }

    #[test]
    fn identity_paraphrase_returns_input() {
        let cfg = GenerationConfig::default();
        let doc = paraphrase(&MockProvider::Identity, &researcher(), &cfg, at()).unwrap();
        assert_eq!(doc.text, researcher().human_profile.unwrap());
        assert_eq!(doc.variant, Variant::Paraphrase);
        let bare = Researcher::new("r2", "X", "Y");
        assert!(matches!(paraphrase(&MockProvider::Identity, &bare, &cfg, at()), Err(GenerateError::MissingHumanProfile(_))));
    }
}
