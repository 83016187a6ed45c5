use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use scholar_profile::corpus::{load_corpus, tokenize};
use scholar_profile::divergence::{load_mesh_vocabulary, score_pair, tfidf_corpus, write_divergence_csv, DivergenceRow, KlDirection};
use scholar_profile::lexical::{lexical_scores, load_synonyms, SynonymTable};
use scholar_profile::semantic::{greedy_match_score, load_embeddings};
use scholar_profile::stats::{Family, MetricValue};
use scholar_profile::syntactic::{conllu_path, parse_conllu, SyntacticReport};
use scholar_profile::{Corpus, Variant};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{require_exists, CliError, CliResult};
use crate::util::{create_file, csv_error, ensure_dir, recorded_opt, recorded_path, serde_enum, stoplist, write_json, write_run_config};

const MACHINE_VARIANTS: [Variant; 3] = [Variant::MeshGen, Variant::AbstractGen, Variant::Paraphrase];

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Metric families to compute.
    #[arg(long, value_delimiter = ',', default_value = "lexical,divergence,semantic,syntactic", value_parser = |s: &str| s.parse::<Family>())]
    metrics: Vec<Family>,
    #[arg(long, default_value = "machine-to-human", value_parser = serde_enum::<KlDirection>)]
    kl_direction: KlDirection,
    /// Directory of `<id>.<variant>.json` token embeddings; required by semantic.
    #[arg(long)]
    embeddings_dir: Option<PathBuf>,
    /// Directory of `<id>.<variant>.conllu` parses; required by syntactic.
    #[arg(long)]
    conllu_dir: Option<PathBuf>,
    /// MeSH descriptor XML, for counting MeSH terms among unique terms.
    #[arg(long)]
    mesh_vocab: Option<PathBuf>,
    /// `word<TAB>synset` file for METEOR synonym matching.
    #[arg(long)]
    synonyms: Option<PathBuf>,
    #[arg(long)]
    stoplist: Option<PathBuf>,
}

/// The file `evaluate` writes and `report` reads.
#[derive(Debug, Serialize, Deserialize)]
pub struct Evaluation {
    pub metrics: Vec<Family>,
    pub values: Vec<MetricValue>,
    pub notes: Vec<String>,
}

struct Collector {
    values: Vec<MetricValue>,
    notes: Vec<String>,
}

impl Collector {
    fn push(&mut self, family: Family, metric: &str, rid: &str, variant: Variant, reference: Option<Variant>, value: f64) {
        self.values.push(MetricValue {
            family,
            metric: metric.to_string(),
            researcher_id: rid.to_string(),
            variant,
            reference,
            value,
        });
    }

    fn note(&mut self, note: String) {
        log::warn!("{note}");
        self.notes.push(note);
    }
}

/// The self-written profile: a stored human profile doc, else the roster text.
fn human_text<'a>(corpus: &'a Corpus, rid: &str) -> Option<&'a str> {
    corpus
        .profile(rid, Variant::Human)
        .map(|p| p.text.as_str())
        .or_else(|| corpus.researcher(rid).and_then(|r| r.human_profile.as_deref()))
}

fn profile_text<'a>(corpus: &'a Corpus, rid: &str, variant: Variant) -> Option<&'a str> {
    match variant {
        Variant::Human => human_text(corpus, rid),
        v => corpus.profile(rid, v).map(|p| p.text.as_str()),
    }
}

/// Every (researcher, machine variant) with both texts present.
fn pairs(corpus: &Corpus, out: &mut Collector) -> Vec<(String, Variant)> {
    let mut pairs = Vec::new();
    for r in &corpus.researchers {
        if human_text(corpus, &r.id).is_none() {
            if MACHINE_VARIANTS.iter().any(|&v| corpus.profile(&r.id, v).is_some()) {
                out.note(format!("{}: no self-written profile; pairwise metrics skipped", r.id));
            }
            continue;
        }
        for v in MACHINE_VARIANTS {
            if corpus.profile(&r.id, v).is_some() {
                pairs.push((r.id.clone(), v));
            }
        }
    }
    pairs
}

fn lexical(corpus: &Corpus, pairs: &[(String, Variant)], synonyms: &SynonymTable, out: &mut Collector) {
    for (rid, v) in pairs {
        let cand = tokenize(profile_text(corpus, rid, *v).unwrap_or_default());
        let reference = tokenize(human_text(corpus, rid).unwrap_or_default());
        let s = lexical_scores(&cand, &reference, synonyms);
        let h = Some(Variant::Human);
        out.push(Family::Lexical, "rouge_l_precision", rid, *v, h, s.rouge_l.precision);
        out.push(Family::Lexical, "rouge_l_recall", rid, *v, h, s.rouge_l.recall);
        out.push(Family::Lexical, "rouge_l_f1", rid, *v, h, s.rouge_l.f1);
        out.push(Family::Lexical, "bleu", rid, *v, h, s.bleu);
        out.push(Family::Lexical, "meteor", rid, *v, h, s.meteor);
    }
}

fn divergence(args: &Args, corpus: &Corpus, pairs: &[(String, Variant)], out: &mut Collector) -> CliResult<()> {
    let stop = stoplist(args.stoplist.as_deref())?;
    let vocab = match &args.mesh_vocab {
        Some(p) => {
            require_exists(p, "MeSH vocabulary")?;
            Some(load_mesh_vocabulary(p).map_err(|e| CliError::data(e.to_string()))?)
        }
        None => None,
    };
    // Document frequencies come from every profile text in the corpus.
    let mut keys = Vec::new();
    let mut docs = Vec::new();
    for r in &corpus.researchers {
        for v in Variant::ALL {
            if let Some(text) = profile_text(corpus, &r.id, v) {
                keys.push((r.id.clone(), v));
                docs.push(tokenize(text));
            }
        }
    }
    let vectors = match tfidf_corpus(&docs, &stop) {
        Ok(v) => v,
        Err(e) => {
            out.note(format!("divergence: skipped ({e})"));
            return Ok(());
        }
    };
    let index: BTreeMap<&(String, Variant), usize> = keys.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let mut rows = Vec::new();
    let mut terms = BTreeMap::new();
    for (rid, v) in pairs {
        let m = index[&(rid.clone(), *v)];
        let h = index[&(rid.clone(), Variant::Human)];
        match score_pair(&vectors[m], &vectors[h], &docs[h].tokens, args.kl_direction, vocab.as_ref()) {
            Ok((kl, unique, novel)) => {
                let hv = Some(Variant::Human);
                out.push(Family::Divergence, "kl_nats", rid, *v, hv, kl);
                out.push(Family::Divergence, "unique_term_count", rid, *v, hv, unique.len() as f64);
                if vocab.is_some() {
                    out.push(Family::Divergence, "mesh_novel_count", rid, *v, hv, novel.len() as f64);
                }
                rows.push(DivergenceRow {
                    researcher_id: rid.clone(),
                    variant_pair: format!("{v}_vs_human"),
                    kl_nats: kl,
                    unique_term_count: unique.len(),
                    mesh_novel_count: novel.len(),
                });
                terms.insert(format!("{rid}.{v}"), json!({ "unique_terms": unique, "mesh_novel_terms": novel }));
            }
            Err(e) => out.note(format!("divergence: {rid} {v}: {e}")),
        }
    }
    let path = args.out.join("divergence.csv");
    write_divergence_csv(create_file(&path)?, &rows).map_err(|e| csv_error(&path, e))?;
    write_json(&args.out.join("divergence_terms.json"), &terms)
}

fn semantic(dir: &Path, pairs: &[(String, Variant)], out: &mut Collector) {
    for (rid, v) in pairs {
        let load = |variant: Variant| {
            let path = dir.join(format!("{rid}.{variant}.json"));
            if path.exists() {
                load_embeddings(&path).map(Some).map_err(|e| e.to_string())
            } else {
                Ok(None)
            }
        };
        let (cand, reference) = match (load(*v), load(Variant::Human)) {
            (Ok(Some(c)), Ok(Some(r))) => (c, r),
            (Err(e), _) | (_, Err(e)) => {
                out.note(format!("semantic: {rid} {v}: {e}"));
                continue;
            }
            _ => {
                out.note(format!("semantic: {rid} {v}: embeddings missing in {}", dir.display()));
                continue;
            }
        };
        match greedy_match_score(&cand, &reference) {
            Ok(s) => {
                let h = Some(Variant::Human);
                out.push(Family::Semantic, "precision", rid, *v, h, s.precision);
                out.push(Family::Semantic, "recall", rid, *v, h, s.recall);
                out.push(Family::Semantic, "f1", rid, *v, h, s.f1);
            }
            Err(e) => out.note(format!("semantic: {rid} {v}: {e}")),
        }
    }
}

fn syntactic(dir: &Path, args: &Args, corpus: &Corpus, out: &mut Collector) -> CliResult<()> {
    let mut reports: Vec<(String, Variant, SyntacticReport)> = Vec::new();
    for r in &corpus.researchers {
        for v in Variant::ALL {
            if profile_text(corpus, &r.id, v).is_none() {
                continue;
            }
            let path = conllu_path(dir, &r.id, v);
            if !path.exists() {
                out.note(format!("syntactic: {} {v}: no parse at {}", r.id, path.display()));
                continue;
            }
            match parse_conllu(&path) {
                Ok(doc) => reports.push((r.id.clone(), v, SyntacticReport::for_document(&doc))),
                Err(e) => out.note(format!("syntactic: {} {v}: {e}", r.id)),
            }
        }
    }
    let pos: BTreeSet<&String> = reports.iter().flat_map(|(_, _, s)| s.pos_distribution.keys()).collect();
    let lex: BTreeSet<&String> = reports.iter().flat_map(|(_, _, s)| s.lexical_diversity.keys()).collect();
    for (rid, v, s) in &reports {
        out.push(Family::Syntactic, "max_dep_depth", rid, *v, None, s.max_dep_depth);
        out.push(Family::Syntactic, "syntactic_complexity", rid, *v, None, s.syntactic_complexity);
        out.push(Family::Syntactic, "syntactic_ambiguity", rid, *v, None, s.syntactic_ambiguity);
        for tag in &pos {
            out.push(Family::Syntactic, &format!("pos_{tag}"), rid, *v, None, s.pos_distribution.get(*tag).copied().unwrap_or(0.0));
        }
        for tag in &lex {
            out.push(Family::Syntactic, &format!("lexical_diversity_{tag}"), rid, *v, None, s.lexical_diversity.get(*tag).copied().unwrap_or(0.0));
        }
    }
    let means: BTreeMap<String, SyntacticReport> = Variant::ALL
        .into_iter()
        .filter_map(|v| {
            let of: Vec<SyntacticReport> = reports.iter().filter(|(_, rv, _)| *rv == v).map(|(_, _, s)| s.clone()).collect();
            SyntacticReport::mean(&of).map(|m| (v.to_string(), m))
        })
        .collect();
    let per_doc: BTreeMap<String, &SyntacticReport> = reports.iter().map(|(rid, v, s)| (format!("{rid}.{v}"), s)).collect();
    write_json(&args.out.join("syntactic.json"), &json!({ "documents": per_doc, "variant_means": means }))
}

pub fn run(args: Args) -> CliResult<()> {
    let families: BTreeSet<Family> = args.metrics.iter().copied().collect();
    let embeddings_dir = match (&args.embeddings_dir, families.contains(&Family::Semantic)) {
        (Some(d), true) => Some(d),
        (None, true) => return Err(CliError::config("--embeddings-dir is required for the semantic metrics")),
        _ => None,
    };
    let conllu_dir = match (&args.conllu_dir, families.contains(&Family::Syntactic)) {
        (Some(d), true) => Some(d),
        (None, true) => return Err(CliError::config("--conllu-dir is required for the syntactic metrics")),
        _ => None,
    };
    for d in embeddings_dir.iter().chain(conllu_dir.iter()) {
        require_exists(d, "input directory")?;
    }
    let synonyms = match &args.synonyms {
        Some(p) => load_synonyms(p).map_err(CliError::config)?,
        None => SynonymTable::new(),
    };
    require_exists(&args.corpus, "corpus")?;
    let corpus = load_corpus(&args.corpus)?;
    ensure_dir(&args.out)?;

    let mut out = Collector { values: Vec::new(), notes: Vec::new() };
    let pairs = pairs(&corpus, &mut out);
    if pairs.is_empty() {
        out.note("no (generated, self-written) profile pairs in the corpus".into());
    }
    for family in &families {
        match family {
            Family::Lexical => lexical(&corpus, &pairs, &synonyms, &mut out),
            Family::Divergence => divergence(&args, &corpus, &pairs, &mut out)?,
            Family::Semantic => semantic(embeddings_dir.expect("checked above"), &pairs, &mut out),
            Family::Syntactic => syntactic(conllu_dir.expect("checked above"), &args, &corpus, &mut out)?,
        }
    }

    for family in &families {
        let n = out.values.iter().filter(|v| v.family == *family).count();
        println!("{family}\t{n} values");
    }
    let evaluation = Evaluation { metrics: families.iter().copied().collect(), values: out.values, notes: out.notes };
    write_json(&args.out.join("evaluation.json"), &evaluation)?;
    write_run_config(
        &args.out,
        "evaluate",
        &json!({
            "corpus": recorded_path(&args.corpus, &args.out),
            "metrics": evaluation.metrics,
            "kl_direction": args.kl_direction,
            "embeddings_dir": recorded_opt(args.embeddings_dir.as_ref(), &args.out),
            "conllu_dir": recorded_opt(args.conllu_dir.as_ref(), &args.out),
            "mesh_vocab": recorded_opt(args.mesh_vocab.as_ref(), &args.out),
            "synonyms": recorded_opt(args.synonyms.as_ref(), &args.out),
            "stoplist": recorded_opt(args.stoplist.as_ref(), &args.out),
        }),
    )
}
