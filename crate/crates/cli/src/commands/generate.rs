use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use scholar_profile::corpus::{load_corpus, save_corpus, Stoplist};
use scholar_profile::divergence::{load_mesh_vocabulary, MeshVocabulary};
use scholar_profile::generate::{
    build_abstract_plan_from_groups, build_mesh_plan, categorize_mesh_terms, paraphrase_plan, run_plan_with, GenerateError,
    GenerationConfig, LlmProvider, MeshBranches, PromptPlan, ProviderConfig, Strategy, TemplateSet,
};
use scholar_profile::http::HttpTransport;
use scholar_profile::topics::{fit_lda, LdaConfig, LdaModel};
use scholar_profile::{Corpus, ProfileDoc, PublicationRecord, Researcher};
use serde::Serialize;
use serde_json::json;

use crate::error::{require_exists, CliError, CliResult};
use crate::util::{
    created_at, ensure_dir, publication_tokens, recorded_opt, recorded_path, stoplist, thread_pool, write_json, write_run_config,
    write_text,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum StrategyArg {
    Mesh,
    Abstract,
    Paraphrase,
    All,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Corpus file; generated profiles are written back into it.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Provider configuration JSON.
    #[arg(long)]
    provider: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
    strategy: Vec<StrategyArg>,
    /// MeSH descriptor XML; required by the mesh strategy.
    #[arg(long)]
    mesh_vocab: Option<PathBuf>,
    /// Template directory (default: built-in v1 templates).
    #[arg(long)]
    templates: Option<PathBuf>,
    /// Override the provider's context limit, in tokens.
    #[arg(long)]
    context_limit: Option<usize>,
    /// Topic model from `topics`; its dominant topics group each researcher's abstracts.
    #[arg(long)]
    lda_model: Option<PathBuf>,
    /// K for the per-researcher topic model; ignored with --lda-model.
    #[arg(long = "topics", default_value_t = 5)]
    num_topics: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    iterations: usize,
    #[arg(long)]
    stoplist: Option<PathBuf>,
    /// RFC 3339 timestamp for generated profiles (default: SOURCE_DATE_EPOCH, else the Unix epoch).
    #[arg(long)]
    created_at: Option<String>,
    #[arg(long, default_value_t = 4)]
    workers: usize,
    /// HTTP timeout in seconds for remote providers.
    #[arg(long, default_value_t = 300)]
    timeout: u64,
}

enum Outcome {
    Generated(Box<PromptPlan>, ProfileDoc),
    Skipped(String),
}

#[derive(Serialize)]
struct Skip<'a> {
    researcher_id: &'a str,
    strategy: &'a str,
    reason: String,
}

struct Context<'a> {
    provider: &'a dyn LlmProvider,
    config: GenerationConfig,
    vocab: Option<MeshVocabulary>,
    lda_groups: Option<HashMap<String, usize>>,
    lda: LdaConfig,
    stop: Stoplist,
    stamp: DateTime<Utc>,
}

fn strategy_name(s: Strategy) -> &'static str {
    match s {
        Strategy::MeshBased => "mesh",
        Strategy::AbstractBased => "abstract",
        Strategy::Paraphrase => "paraphrase",
    }
}

fn strategies(args: &[StrategyArg]) -> Vec<Strategy> {
    let mut out = Vec::new();
    for s in args {
        let add: &[Strategy] = match s {
            StrategyArg::Mesh => &[Strategy::MeshBased],
            StrategyArg::Abstract => &[Strategy::AbstractBased],
            StrategyArg::Paraphrase => &[Strategy::Paraphrase],
            StrategyArg::All => &[Strategy::MeshBased, Strategy::AbstractBased, Strategy::Paraphrase],
        };
        for a in add {
            if !out.contains(a) {
                out.push(*a);
            }
        }
    }
    out
}

/// Groups a researcher's abstracts by dominant topic: from the corpus-wide
/// model when given, else from a model fitted to this researcher alone.
/// Fewer than two documents, or too little text to model, gives one group.
fn topic_groups(ctx: &Context, researcher: &Researcher, docs: &[PublicationRecord]) -> Vec<Vec<usize>> {
    if let Some(labels) = &ctx.lda_groups {
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut unlabelled = Vec::new();
        for (i, d) in docs.iter().enumerate() {
            match labels.get(&format!("{}:{}", researcher.id, d.pmid)) {
                Some(&t) => groups.entry(t).or_default().push(i),
                None => unlabelled.push(i),
            }
        }
        let mut out: Vec<Vec<usize>> = groups.into_values().collect();
        if !unlabelled.is_empty() {
            out.push(unlabelled);
        }
        return out;
    }
    if docs.len() < 2 {
        return vec![(0..docs.len()).collect()];
    }
    let tokens: Vec<_> = docs.iter().map(|d| publication_tokens(d, &ctx.stop)).collect();
    match fit_lda(&tokens, &ctx.lda) {
        Ok(model) => model.group_docs_by_topic(),
        Err(e) => {
            log::warn!("{}: topic model not fitted ({e}); using one group", researcher.id);
            vec![(0..docs.len()).collect()]
        }
    }
}

fn generate_one(ctx: &Context, corpus: &Corpus, researcher: &Researcher, strategy: Strategy) -> CliResult<Outcome> {
    let docs: Vec<PublicationRecord> = corpus.publications_of(&researcher.id).cloned().collect();
    let plan = match strategy {
        Strategy::MeshBased => {
            let vocab = ctx.vocab.as_ref().expect("vocabulary checked before dispatch");
            let terms: Vec<&str> = docs.iter().flat_map(|d| d.mesh_terms.iter().map(String::as_str)).collect();
            let split = categorize_mesh_terms(&terms, vocab, &MeshBranches::default());
            build_mesh_plan(researcher, &split, &ctx.config)
        }
        Strategy::AbstractBased => {
            if docs.is_empty() {
                return Ok(Outcome::Skipped("no publications".into()));
            }
            let groups = topic_groups(ctx, researcher, &docs);
            build_abstract_plan_from_groups(researcher, &docs, &groups, &ctx.config)
        }
        Strategy::Paraphrase => paraphrase_plan(researcher, &ctx.config),
    };
    let plan = match plan {
        Ok(p) => p,
        Err(e @ (GenerateError::EmptyInput(_) | GenerateError::MissingHumanProfile(_))) => return Ok(Outcome::Skipped(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    for w in &plan.warnings {
        log::warn!("{} {}: {w}", researcher.id, strategy_name(strategy));
    }
    let doc = run_plan_with(ctx.provider, &plan, ctx.config.estimator.as_ref(), ctx.stamp)?;
    Ok(Outcome::Generated(Box::new(plan), doc))
}

pub fn run(args: Args) -> CliResult<()> {
    require_exists(&args.corpus, "corpus")?;
    require_exists(&args.provider, "provider config")?;
    let strategies = strategies(&args.strategy);
    let stamp = created_at(args.created_at.as_deref())?;
    let provider_config = ProviderConfig::load(&args.provider).map_err(CliError::config)?;
    let transport = HttpTransport::new(Duration::from_secs(args.timeout)).map_err(|e| CliError::transport(e.to_string()))?;
    let provider = provider_config.build(Arc::new(transport)).map_err(CliError::config)?;

    let vocab = match (&args.mesh_vocab, strategies.contains(&Strategy::MeshBased)) {
        (Some(p), _) => {
            require_exists(p, "MeSH vocabulary")?;
            Some(load_mesh_vocabulary(p).map_err(|e| CliError::data(e.to_string()))?)
        }
        (None, true) => return Err(CliError::config("--mesh-vocab is required for the mesh strategy")),
        (None, false) => None,
    };
    let lda_groups = match &args.lda_model {
        Some(p) => {
            require_exists(p, "topic model")?;
            let f = std::fs::File::open(p).map_err(|e| crate::error::io_error(p, e))?;
            let model = LdaModel::read_json(std::io::BufReader::new(f)).map_err(|e| CliError::data(format!("{}: {e}", p.display())))?;
            if model.doc_labels.len() != model.num_docs() {
                return Err(CliError::data(format!("{}: model has no document labels", p.display())));
            }
            Some(model.doc_labels.iter().enumerate().map(|(d, l)| (l.clone(), model.dominant_topic(d))).collect())
        }
        None => None,
    };
    let mut config = GenerationConfig::default();
    if let Some(dir) = &args.templates {
        config.templates = TemplateSet::load(dir)?;
    }
    config.budget = config.budget.with_context_limit(args.context_limit.unwrap_or(provider.context_limit_tokens()));
    let lda = LdaConfig::new(args.num_topics).with_seed(args.seed).with_iterations(args.iterations);
    lda.validate().map_err(|e| CliError::config(e.to_string()))?;

    let mut corpus = load_corpus(&args.corpus)?;
    let ctx = Context { provider: &provider, config, vocab, lda_groups, lda: lda.clone(), stop: stoplist(args.stoplist.as_deref())?, stamp };
    let tasks: Vec<(&Researcher, Strategy)> =
        corpus.researchers.iter().flat_map(|r| strategies.iter().map(move |&s| (r, s))).collect();
    let pool = thread_pool(args.workers)?;
    let results: Vec<CliResult<Outcome>> = pool.install(|| {
        tasks.par_iter().map(|&(r, s)| generate_one(&ctx, &corpus, r, s).map_err(|e| e.context(format!("{} {}", r.id, strategy_name(s))))).collect()
    });
    let tasks: Vec<(String, Strategy)> = tasks.into_iter().map(|(r, s)| (r.id.clone(), s)).collect();

    ensure_dir(&args.out)?;
    let mut generated = Vec::new();
    let mut skipped = Vec::new();
    let mut first_error = None;
    let mut docs = Vec::new();
    for ((rid, strategy), result) in tasks.iter().zip(results) {
        match result {
            Ok(Outcome::Generated(plan, doc)) => {
                let stem = format!("{rid}.{}", doc.variant);
                write_text(&args.out.join("profiles").join(format!("{stem}.txt")), &format!("{}\n", doc.text))?;
                write_json(&args.out.join("plans").join(format!("{stem}.json")), &plan)?;
                println!("{rid}\t{}\t{} stages", doc.variant, plan.stages.len());
                generated.push(json!({ "researcher_id": rid, "variant": doc.variant, "stages": plan.stages.len(), "warnings": plan.warnings }));
                docs.push(doc);
            }
            Ok(Outcome::Skipped(reason)) => {
                log::warn!("{rid} {}: skipped: {reason}", strategy_name(*strategy));
                skipped.push(Skip { researcher_id: rid, strategy: strategy_name(*strategy), reason });
            }
            Err(e) => {
                log::error!("{e}");
                first_error.get_or_insert(e);
            }
        }
    }
    for doc in docs {
        corpus.upsert_profile(doc);
    }
    save_corpus(&corpus, &args.corpus)?;
    write_json(&args.out.join("generate_report.json"), &json!({ "generated": generated, "skipped": skipped }))?;
    write_run_config(
        &args.out,
        "generate",
        &json!({
            "corpus": recorded_path(&args.corpus, &args.out),
            "provider": recorded_path(&args.provider, &args.out),
            "provider_config": provider_config,
            "strategies": strategies,
            "mesh_vocab": recorded_opt(args.mesh_vocab.as_ref(), &args.out),
            "templates": recorded_opt(args.templates.as_ref(), &args.out),
            "template_version": ctx.config.templates.version,
            "budget": ctx.config.budget,
            "lda_model": recorded_opt(args.lda_model.as_ref(), &args.out),
            "lda": if args.lda_model.is_none() { Some(lda) } else { None },
            "stoplist": recorded_opt(args.stoplist.as_ref(), &args.out),
            "created_at": stamp,
        }),
    )?;
    match first_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
