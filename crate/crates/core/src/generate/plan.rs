use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::template::{stage_placeholder, stage_refs, OneShotExample, TemplateSet};
use super::{ByteHeuristic, GenerateError, TokenEstimator};
use crate::corpus::{PublicationRecord, Researcher, Variant};
use crate::divergence::MeshVocabulary;
use crate::topics::LdaModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    MeshBased,
    AbstractBased,
    Paraphrase,
}

impl Strategy {
    pub fn variant(self) -> Variant {
        match self {
            Strategy::MeshBased => Variant::MeshGen,
            Strategy::AbstractBased => Variant::AbstractGen,
            Strategy::Paraphrase => Variant::Paraphrase,
        }
    }
}

/// Token limits applied while planning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Maximum estimated input tokens per stage.
    pub context_limit: usize,
    /// Output allowance for condense and merge stages; reserved in the input
    /// of every stage that consumes their output.
    pub condense_output_tokens: usize,
    pub final_output_tokens: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            context_limit: 128_000,
            condense_output_tokens: 400,
            final_output_tokens: 600,
        }
    }
}

impl Budget {
    pub fn with_context_limit(mut self, limit: usize) -> Self {
        self.context_limit = limit;
        self
    }
}

/// Everything the planners need besides the researcher's data.
#[derive(Clone)]
pub struct GenerationConfig {
    pub templates: TemplateSet,
    pub budget: Budget,
    pub estimator: Arc<dyn TokenEstimator>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            templates: TemplateSet::builtin_v1(),
            budget: Budget::default(),
            estimator: Arc::new(ByteHeuristic),
        }
    }
}

impl std::fmt::Debug for GenerationConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GenerationConfig")
            .field("templates", &self.templates.version)
            .field("budget", &self.budget)
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptStage {
    pub label: String,
    pub system: String,
    pub user: String,
    pub max_output_tokens: usize,
    /// 1-based stages whose output is spliced into `user`.
    pub depends_on: Vec<usize>,
    /// Input estimate, counting each dependency at its output allowance.
    pub estimated_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptPlan {
    pub strategy: Strategy,
    pub researcher_id: String,
    pub template_version: String,
    pub context_limit: usize,
    pub stages: Vec<PromptStage>,
    pub one_shot_example: Option<OneShotExample>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl PromptPlan {
    pub fn variant(&self) -> Variant {
        self.strategy.variant()
    }

    /// Checks stage ordering and the per-stage budget.
    pub fn validate(&self) -> Result<(), GenerateError> {
        if self.stages.is_empty() {
            return Err(GenerateError::EmptyInput("plan has no stages".into()));
        }
        for (i, s) in self.stages.iter().enumerate() {
            let stage = i + 1;
            if s.depends_on.iter().any(|&d| d == 0 || d >= stage) {
                return Err(GenerateError::Config(format!("stage {stage} depends on a stage that does not precede it")));
            }
            if s.estimated_tokens > self.context_limit {
                return Err(GenerateError::OverBudget { stage, tokens: s.estimated_tokens, limit: self.context_limit });
            }
        }
        Ok(())
    }
}

/// Tree-number prefixes that select the methodology and health groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeshBranches {
    pub methodology: Vec<String>,
    pub health: Vec<String>,
}

impl Default for MeshBranches {
    fn default() -> Self {
        Self {
            methodology: ["E", "L", "H"].map(String::from).to_vec(),
            health: ["C", "F", "G"].map(String::from).to_vec(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeshSplit {
    pub methodology_terms: Vec<String>,
    pub health_terms: Vec<String>,
    pub unassigned: Vec<String>,
}

impl MeshSplit {
    pub fn is_empty(&self) -> bool {
        self.methodology_terms.is_empty() && self.health_terms.is_empty() && self.unassigned.is_empty()
    }

    pub fn len(&self) -> usize {
        self.methodology_terms.len() + self.health_terms.len() + self.unassigned.len()
    }
}

/// Splits terms by descriptor tree number. Terms are deduplicated
/// case-insensitively. A descriptor with tree numbers in both groups counts
/// as methodology.
pub fn categorize_mesh_terms<S: AsRef<str>>(terms: &[S], vocab: &MeshVocabulary, branches: &MeshBranches) -> MeshSplit {
    let mut seen = HashSet::new();
    let mut split = MeshSplit::default();
    for term in terms.iter().map(AsRef::as_ref) {
        let term = term.trim();
        if term.is_empty() || !seen.insert(term.to_lowercase()) {
            continue;
        }
        let trees = vocab.tree_numbers(term);
        let under = |prefixes: &[String]| trees.iter().any(|tn| prefixes.iter().any(|p| tn.starts_with(p.as_str())));
        let group = if under(&branches.methodology) {
            Some(true)
        } else if under(&branches.health) {
            Some(false)
        } else {
            None
        };
        match group {
            Some(true) => split.methodology_terms.push(term.to_string()),
            Some(false) => split.health_terms.push(term.to_string()),
            None => split.unassigned.push(term.to_string()),
        }
    }
    split
}

fn bullet_list(terms: &[String]) -> String {
    terms.iter().map(|t| format!("- {t}")).collect::<Vec<_>>().join("\n")
}

struct StageBuilder<'a> {
    config: &'a GenerationConfig,
    stages: Vec<PromptStage>,
}

impl<'a> StageBuilder<'a> {
    fn estimate(&self, system: &str, user: &str) -> usize {
        let est = &self.config.estimator;
        let mut bare = user.to_string();
        let mut reserved = 0;
        for k in stage_refs(user) {
            bare = bare.replacen(&stage_placeholder(k), "", 1);
            reserved += self.stages.get(k - 1).map_or(0, |s| s.max_output_tokens);
        }
        est.estimate(system) + est.estimate(&bare) + reserved
    }

    fn fits(&self, system: &str, user: &str) -> bool {
        self.estimate(system, user) <= self.config.budget.context_limit
    }

    fn push(&mut self, label: String, system: String, user: String, max_output_tokens: usize) -> Result<usize, GenerateError> {
        let estimated_tokens = self.estimate(&system, &user);
        let stage = self.stages.len() + 1;
        if estimated_tokens > self.config.budget.context_limit {
            return Err(GenerateError::OverBudget { stage, tokens: estimated_tokens, limit: self.config.budget.context_limit });
        }
        let depends_on = stage_refs(&user);
        self.stages.push(PromptStage { label, system, user, max_output_tokens, depends_on, estimated_tokens });
        Ok(stage)
    }
}

/// Single-stage plan over the researcher's MeSH terms. Unassigned terms are
/// listed with the health terms; an empty section is left out.
pub fn build_mesh_plan(researcher: &Researcher, split: &MeshSplit, config: &GenerationConfig) -> Result<PromptPlan, GenerateError> {
    if split.is_empty() {
        return Err(GenerateError::EmptyInput(format!("researcher {} has no MeSH terms", researcher.id)));
    }
    let t = &config.templates;
    let health: Vec<String> = split.health_terms.iter().chain(&split.unassigned).cloned().collect();
    let mut sections = Vec::new();
    for (label, terms) in [("Methodology terms", &split.methodology_terms), ("Health domain terms", &health)] {
        if !terms.is_empty() {
            sections.push(t.render("mesh_section", &[("LABEL", label), ("TERMS", &bullet_list(terms))])?);
        }
    }
    let user = t.render(
        "mesh_user",
        &[
            ("EXAMPLE", &t.example_block()?),
            ("NAME", &researcher.name),
            ("AFFILIATION", &researcher.affiliation),
            ("SECTIONS", &sections.join("\n\n")),
        ],
    )?;
    let mut b = StageBuilder { config, stages: Vec::new() };
    b.push("mesh profile".into(), t.get("profile_system").to_string(), user, config.budget.final_output_tokens)?;
    Ok(PromptPlan {
        strategy: Strategy::MeshBased,
        researcher_id: researcher.id.clone(),
        template_version: t.version.clone(),
        context_limit: config.budget.context_limit,
        stages: b.stages,
        one_shot_example: Some(t.example.clone()),
        warnings: Vec::new(),
    })
}

fn abstract_entry(doc: &PublicationRecord, body: &str) -> String {
    format!("PMID {}: {}\n{}", doc.pmid, doc.title.trim(), body.trim())
}

/// Divide-and-conquer plan using the model's dominant-topic grouping.
/// `model` must have been fitted on `docs`, in the same order.
pub fn build_abstract_plan(
    researcher: &Researcher,
    docs: &[PublicationRecord],
    model: &LdaModel,
    config: &GenerationConfig,
) -> Result<PromptPlan, GenerateError> {
    if model.num_docs() != docs.len() {
        return Err(GenerateError::Config(format!(
            "topic model covers {} documents but {} were given",
            model.num_docs(),
            docs.len()
        )));
    }
    build_abstract_plan_from_groups(researcher, docs, &model.group_docs_by_topic(), config)
}

/// Divide-and-conquer plan over explicit document groups (indices into
/// `docs`). Each non-empty group becomes one or more condense stages, packed
/// greedily in document order. If the final stage would not fit, condense
/// outputs are merged in intermediate stages first.
pub fn build_abstract_plan_from_groups(
    researcher: &Researcher,
    docs: &[PublicationRecord],
    groups: &[Vec<usize>],
    config: &GenerationConfig,
) -> Result<PromptPlan, GenerateError> {
    if docs.is_empty() {
        return Err(GenerateError::EmptyInput(format!("researcher {} has no publications", researcher.id)));
    }
    let t = &config.templates;
    let budget = config.budget;
    let condense_system = t.get("condense_system").to_string();
    let condense_user = |entries: &[String]| t.render("condense_user", &[("NAME", &researcher.name), ("ABSTRACTS", &entries.join("\n\n"))]);
    let mut b = StageBuilder { config, stages: Vec::new() };
    let mut warnings = Vec::new();
    let mut condensed = Vec::new();

    for (topic, group) in groups.iter().enumerate().filter(|(_, g)| !g.is_empty()) {
        let mut batches: Vec<Vec<String>> = Vec::new();
        let mut current: Vec<String> = Vec::new();
        for &i in group {
            let doc = docs
                .get(i)
                .ok_or_else(|| GenerateError::Config(format!("topic group refers to document {i} of {}", docs.len())))?;
            let mut entry = abstract_entry(doc, &doc.abstract_text);
            current.push(entry.clone());
            if b.fits(&condense_system, &condense_user(&current)?) {
                continue;
            }
            current.pop();
            if !current.is_empty() {
                batches.push(std::mem::take(&mut current));
                current.push(entry.clone());
                if b.fits(&condense_system, &condense_user(&current)?) {
                    continue;
                }
                current.clear();
            }
            entry = truncate_to_fit(doc, |e| Ok(b.fits(&condense_system, &condense_user(&[e.to_string()])?)))?
                .ok_or_else(|| GenerateError::OverBudget {
                    stage: b.stages.len() + batches.len() + 1,
                    tokens: b.estimate(&condense_system, &condense_user(&[]).unwrap_or_default()),
                    limit: budget.context_limit,
                })?;
            let msg = format!("PMID {} truncated to fit the {}-token stage budget", doc.pmid, budget.context_limit);
            log::warn!("{msg}");
            warnings.push(msg);
            batches.push(vec![entry]);
        }
        if !current.is_empty() {
            batches.push(current);
        }
        let n = batches.len();
        for (j, batch) in batches.iter().enumerate() {
            let label = format!("condense topic {topic} batch {}/{n}", j + 1);
            condensed.push(b.push(label, condense_system.clone(), condense_user(batch)?, budget.condense_output_tokens)?);
        }
    }
    if condensed.is_empty() {
        return Err(GenerateError::EmptyInput(format!("researcher {}: every topic group is empty", researcher.id)));
    }

    let example = t.example_block()?;
    let final_user = |refs: &[usize]| {
        let summaries: Vec<String> = refs.iter().map(|&k| stage_placeholder(k)).collect();
        t.render(
            "final_user",
            &[
                ("EXAMPLE", &example),
                ("NAME", &researcher.name),
                ("AFFILIATION", &researcher.affiliation),
                ("SUMMARIES", &summaries.join("\n\n")),
            ],
        )
    };
    let merge_user = |refs: &[usize]| {
        let summaries: Vec<String> = refs.iter().map(|&k| stage_placeholder(k)).collect();
        t.render("merge_user", &[("NAME", &researcher.name), ("SUMMARIES", &summaries.join("\n\n"))])
    };
    let profile_system = t.get("profile_system").to_string();
    let mut level = 0;
    while !b.fits(&profile_system, &final_user(&condensed)?) {
        level += 1;
        let mut next = Vec::new();
        let mut group: Vec<usize> = Vec::new();
        let mut groups_out = Vec::new();
        for &k in &condensed {
            group.push(k);
            if group.len() > 1 && !b.fits(&condense_system, &merge_user(&group)?) {
                group.pop();
                groups_out.push(std::mem::replace(&mut group, vec![k]));
            }
        }
        groups_out.push(group);
        if groups_out.len() >= condensed.len() {
            // Merging no longer shrinks the frontier.
            let tokens = b.estimate(&profile_system, &final_user(&condensed)?);
            return Err(GenerateError::OverBudget { stage: b.stages.len() + 1, tokens, limit: budget.context_limit });
        }
        let n = groups_out.len();
        for (j, refs) in groups_out.iter().enumerate() {
            let label = format!("merge level {level} group {}/{n}", j + 1);
            next.push(b.push(label, condense_system.clone(), merge_user(refs)?, budget.condense_output_tokens)?);
        }
        condensed = next;
    }
    b.push("final profile".into(), profile_system, final_user(&condensed)?, budget.final_output_tokens)?;

    Ok(PromptPlan {
        strategy: Strategy::AbstractBased,
        researcher_id: researcher.id.clone(),
        template_version: t.version.clone(),
        context_limit: budget.context_limit,
        stages: b.stages,
        one_shot_example: Some(t.example.clone()),
        warnings,
    })
}

/// Longest prefix of the abstract (on a char boundary) whose entry passes
/// `fits`; `None` when even an empty abstract does not fit.
fn truncate_to_fit(
    doc: &PublicationRecord,
    fits: impl Fn(&str) -> Result<bool, GenerateError>,
) -> Result<Option<String>, GenerateError> {
    let text = doc.abstract_text.trim();
    let bounds: Vec<usize> = text.char_indices().map(|(i, _)| i).chain(std::iter::once(text.len())).collect();
    let entry = |n: usize| abstract_entry(doc, &format!("{} [truncated]", &text[..bounds[n]]));
    if !fits(&entry(0))? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0, bounds.len() - 1);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if fits(&entry(mid))? {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Ok(Some(entry(lo)))
}

/// Single-stage plan whose user text is the human profile verbatim.
pub fn paraphrase_plan(researcher: &Researcher, config: &GenerationConfig) -> Result<PromptPlan, GenerateError> {
    let text = researcher
        .human_profile
        .as_deref()
        .filter(|t| !t.trim().is_empty())
        .ok_or_else(|| GenerateError::MissingHumanProfile(researcher.id.clone()))?;
    let t = &config.templates;
    let mut b = StageBuilder { config, stages: Vec::new() };
    let max_out = config.budget.final_output_tokens.max(config.estimator.estimate(text) * 2);
    b.push("paraphrase".into(), t.get("paraphrase_system").to_string(), text.to_string(), max_out)?;
    Ok(PromptPlan {
        strategy: Strategy::Paraphrase,
        researcher_id: researcher.id.clone(),
        template_version: t.version.clone(),
        context_limit: config.budget.context_limit,
        stages: b.stages,
        one_shot_example: None,
        warnings: Vec::new(),
    })
}
