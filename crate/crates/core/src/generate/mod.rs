//! Profile generation: prompt plans for the MeSH-based and abstract-based
//! strategies, the paraphrase baseline, and plan execution against a
//! pluggable LLM provider.

mod plan;
pub mod provider;
mod run;
mod template;

pub use plan::{
    build_abstract_plan, build_abstract_plan_from_groups, build_mesh_plan, categorize_mesh_terms, paraphrase_plan, Budget,
    GenerationConfig, MeshBranches, MeshSplit, PromptPlan, PromptStage, Strategy,
};
pub use provider::{
    CompletionRequest, HttpChatProvider, LlmProvider, MockProvider, ProviderConfig, ProviderError, ProviderKind,
};
pub use run::{paraphrase, run_plan, run_plan_with, splice_stage_outputs};
pub use template::{render, stage_placeholder, stage_refs, OneShotExample, TemplateSet, TEMPLATE_NAMES};

/// Counts tokens for budget checks.
pub trait TokenEstimator: Send + Sync {
    fn estimate(&self, text: &str) -> usize;
}

/// `ceil(bytes / 4)`, a common approximation for English text.
#[derive(Debug, Clone, Copy, Default)]
pub struct ByteHeuristic;

impl TokenEstimator for ByteHeuristic {
    fn estimate(&self, text: &str) -> usize {
        estimate_tokens(text)
    }
}

pub fn estimate_tokens(text: &str) -> usize {
    text.len().div_ceil(4)
}

#[derive(Debug, thiserror::Error)]
pub enum GenerateError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("template: {0}")]
    Template(String),
    #[error("stage {stage}: {source}")]
    Provider {
        stage: usize,
        #[source]
        source: ProviderError,
    },
    #[error("stage {stage}: provider returned an empty completion")]
    EmptyCompletion { stage: usize },
    #[error("stage {stage}: estimated {tokens} input tokens exceeds the limit of {limit}")]
    OverBudget { stage: usize, tokens: usize, limit: usize },
    #[error("researcher {0} has no human-written profile")]
    MissingHumanProfile(String),
    #[error("nothing to generate from: {0}")]
    EmptyInput(String),
}

impl GenerateError {
    /// 1-based index of the failing stage, when the error belongs to one.
    pub fn stage(&self) -> Option<usize> {
        match self {
            Self::Provider { stage, .. } | Self::EmptyCompletion { stage } | Self::OverBudget { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}
