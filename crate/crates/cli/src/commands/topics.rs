use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use scholar_profile::corpus::load_corpus;
use scholar_profile::topics::{
    diversity_score, fit_lda, write_heatmap_csv, write_transitions_csv, year_heatmap, DiversityBand, LdaConfig, TopicAssignment,
    TopicError,
};
use serde_json::json;

use crate::error::{require_exists, CliError, CliResult};
use crate::util::{create_file, csv_error, ensure_dir, publication_tokens, recorded_opt, recorded_path, stoplist, write_run_config};

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Number of topics K.
    #[arg(long = "topics", default_value_t = 30)]
    num_topics: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    iterations: usize,
    /// Document-topic prior (default 50/K).
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    /// Stoplist file, one word per line (default: built-in English list).
    #[arg(long)]
    stoplist: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    top_words: usize,
}

fn topic_error(e: TopicError) -> CliError {
    match e {
        TopicError::InvalidParameter(_) => CliError::config(e.to_string()),
        _ => CliError::data(e.to_string()),
    }
}

pub fn run(args: Args) -> CliResult<()> {
    require_exists(&args.corpus, "corpus")?;
    let corpus = load_corpus(&args.corpus)?;
    let stop = stoplist(args.stoplist.as_deref())?;
    let mut config = LdaConfig::new(args.num_topics).with_seed(args.seed).with_iterations(args.iterations);
    config.beta = args.beta;
    if let Some(a) = args.alpha {
        config.alpha = a;
    }
    config.validate().map_err(topic_error)?;

    let mut docs = Vec::new();
    let mut entries = Vec::new();
    for entry in &corpus.publications {
        let doc = publication_tokens(&entry.record, &stop);
        if doc.is_empty() {
            log::warn!("{}: PMID {} has no tokens after stopword removal; skipped", entry.researcher_id, entry.record.pmid);
            continue;
        }
        docs.push(doc);
        entries.push(entry);
    }
    if docs.is_empty() {
        return Err(CliError::data(format!("{}: corpus has no publications to model", args.corpus.display())));
    }

    let labels = entries.iter().map(|e| format!("{}:{}", e.researcher_id, e.record.pmid)).collect();
    let model = fit_lda(&docs, &config).map_err(topic_error)?.with_doc_labels(labels);
    ensure_dir(&args.out)?;

    let path = args.out.join("lda_model.json");
    let mut w = create_file(&path)?;
    model.write_json(&mut w).map_err(topic_error)?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| csv_error(&path, e))?;

    let path = args.out.join("top_words.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    w.write_record(["topic", "rank", "word"]).map_err(|e| csv_error(&path, e))?;
    for t in 0..model.num_topics {
        for (rank, word) in model.top_words(t, args.top_words).into_iter().enumerate() {
            w.write_record([t.to_string(), (rank + 1).to_string(), word.to_string()]).map_err(|e| csv_error(&path, e))?;
        }
    }
    w.flush().map_err(|e| csv_error(&path, e))?;

    let mut by_researcher: BTreeMap<String, Vec<TopicAssignment>> = BTreeMap::new();
    let path = args.out.join("assignments.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    w.write_record(["researcher_id", "pmid", "year", "dominant_topic"]).map_err(|e| csv_error(&path, e))?;
    for (d, entry) in entries.iter().enumerate() {
        let topic = model.dominant_topic(d);
        let year = entry.record.year.map(|y| y.to_string()).unwrap_or_default();
        w.write_record([entry.researcher_id.as_str(), entry.record.pmid.as_str(), year.as_str(), topic.to_string().as_str()])
            .map_err(|e| csv_error(&path, e))?;
        if let Some(year) = entry.record.year {
            by_researcher.entry(entry.researcher_id.clone()).or_default().push(TopicAssignment {
                researcher_id: entry.researcher_id.clone(),
                pmid: entry.record.pmid.clone(),
                year,
                dominant_topic: topic,
            });
        }
    }
    w.flush().map_err(|e| csv_error(&path, e))?;

    let path = args.out.join("diversity.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    w.write_record(["researcher_id", "publications", "unique_topics", "diversity", "band"]).map_err(|e| csv_error(&path, e))?;
    let mut bands: BTreeMap<&str, usize> = BTreeMap::new();
    for (rid, assignments) in &by_researcher {
        let score = diversity_score(assignments).map_err(topic_error)?;
        let unique = assignments.iter().map(|a| a.dominant_topic).collect::<std::collections::BTreeSet<_>>().len();
        let band = match DiversityBand::classify(score) {
            DiversityBand::Stable => "stable",
            DiversityBand::Intermediate => "intermediate",
            DiversityBand::Evolving => "evolving",
        };
        *bands.entry(band).or_default() += 1;
        w.write_record([rid.clone(), assignments.len().to_string(), unique.to_string(), score.to_string(), band.to_string()])
            .map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| csv_error(&path, e))?;

    let years = by_researcher.values().flatten().map(|a| a.year);
    if let (Some(first), Some(last)) = (years.clone().min(), years.max()) {
        let maps = by_researcher
            .iter()
            .map(|(rid, a)| year_heatmap(a, first..=last, model.num_topics).map(|m| (rid.clone(), m)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(topic_error)?;
        let path = args.out.join("heatmap.csv");
        write_heatmap_csv(create_file(&path)?, &maps, model.num_topics).map_err(|e| csv_error(&path, e))?;
        let path = args.out.join("transitions.csv");
        write_transitions_csv(create_file(&path)?, &maps, model.num_topics).map_err(|e| csv_error(&path, e))?;
    }

    println!("{} documents, {} topics, vocabulary {}", model.num_docs(), model.num_topics, model.vocabulary.len());
    for (band, n) in &bands {
        println!("{band}\t{n}");
    }
    write_run_config(
        &args.out,
        "topics",
        &json!({
            "corpus": recorded_path(&args.corpus, &args.out),
            "stoplist": recorded_opt(args.stoplist.as_ref(), &args.out),
            "lda": config,
            "top_words": args.top_words,
        }),
    )
}
