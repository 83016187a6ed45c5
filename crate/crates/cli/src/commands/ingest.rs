use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use chrono::Datelike;
use rayon::prelude::*;
use scholar_profile::corpus::{save_corpus, PublicationEntry};
use scholar_profile::http::{HttpTransport, RecordingTransport, ReplayTransport, Transport};
use scholar_profile::pubmed::{ingest_researcher, AuthorshipRule, EutilsClient, IngestOptions, IngestReport, NameMatch, SystemClock};
use scholar_profile::Corpus;
use serde::Serialize;
use serde_json::json;

use crate::error::{CliError, CliResult, ErrorKind};
use crate::roster::load_roster;
use crate::util::{ensure_dir, recorded_opt, recorded_path, serde_enum, thread_pool, write_json, write_run_config};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Roster CSV: id,name,affiliation[,human_profile_path].
    #[arg(long)]
    roster: PathBuf,
    /// Corpus file to write.
    #[arg(long)]
    corpus: PathBuf,
    /// Directory for the ingest report and run config (default: the corpus directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Serve E-utilities responses from recorded fixtures instead of the network.
    #[arg(long, conflicts_with = "record")]
    replay: Option<PathBuf>,
    /// Store every E-utilities response in this directory.
    #[arg(long)]
    record: Option<PathBuf>,
    #[arg(long, default_value = "first-three-or-last-three", value_parser = serde_enum::<AuthorshipRule>)]
    authorship_rule: AuthorshipRule,
    #[arg(long, default_value = "initial", value_parser = serde_enum::<NameMatch>)]
    name_match: NameMatch,
    #[arg(long, default_value_t = 10)]
    recency_years: u32,
    /// Last year of the recency window (default: the current year).
    #[arg(long)]
    reference_year: Option<i32>,
    #[arg(long, default_value_t = 4)]
    workers: usize,
    /// HTTP timeout in seconds.
    #[arg(long, default_value_t = 60)]
    timeout: u64,
}

#[derive(Serialize)]
#[serde(untagged)]
enum Outcome {
    Ok(IngestReport),
    Failed { researcher_id: String, error: CliError },
}

fn transport(args: &Args) -> CliResult<Arc<dyn Transport>> {
    if let Some(dir) = &args.replay {
        crate::error::require_exists(dir, "replay directory")?;
        return Ok(Arc::new(ReplayTransport::new(dir, "xml")));
    }
    let http = HttpTransport::new(Duration::from_secs(args.timeout)).map_err(|e| CliError::transport(e.to_string()))?;
    Ok(match &args.record {
        Some(dir) => Arc::new(RecordingTransport::new(http, dir, "xml")),
        None => Arc::new(http),
    })
}

pub fn run(args: Args) -> CliResult<()> {
    let roster = load_roster(&args.roster)?;
    let reference_year = args.reference_year.unwrap_or_else(|| chrono::Utc::now().year());
    let options = IngestOptions {
        authorship_rule: args.authorship_rule,
        name_match: args.name_match,
        recency_years: args.recency_years,
        reference_year,
    };
    if options.recency_years == 0 {
        return Err(CliError::config("--recency-years must be at least 1"));
    }
    let out = args.out.clone().unwrap_or_else(|| args.corpus.parent().map(Path::to_path_buf).unwrap_or_default());
    let out = if out.as_os_str().is_empty() { PathBuf::from(".") } else { out };
    ensure_dir(&out)?;

    let client = EutilsClient::from_env(transport(&args)?, Arc::new(SystemClock::new()))?;
    let pool = thread_pool(args.workers)?;
    let results: Vec<CliResult<(Vec<_>, IngestReport)>> = pool.install(|| {
        roster
            .par_iter()
            .map(|r| ingest_researcher(&client, r, &options).map_err(|e| CliError::from(e).context(&r.id)))
            .collect()
    });

    let mut corpus = Corpus { researchers: roster.clone(), ..Corpus::default() };
    let mut outcomes = Vec::new();
    for (researcher, result) in roster.iter().zip(results) {
        match result {
            Ok((records, report)) => {
                println!("{}\t{}", researcher.id, records.len());
                if records.is_empty() {
                    log::warn!("{}: no publications passed the filters", researcher.id);
                }
                corpus.publications.extend(records.into_iter().map(|record| PublicationEntry { researcher_id: researcher.id.clone(), record }));
                outcomes.push(Outcome::Ok(report));
            }
            Err(e) => {
                println!("{}\t0\t{}", researcher.id, e.message);
                log::warn!("{e}");
                outcomes.push(Outcome::Failed { researcher_id: researcher.id.clone(), error: e });
            }
        }
    }

    if let Some(parent) = args.corpus.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    save_corpus(&corpus, &args.corpus)?;
    write_json(&out.join("ingest_report.json"), &json!({ "researchers": outcomes }))?;
    write_run_config(
        &out,
        "ingest",
        &json!({
            "roster": recorded_path(&args.roster, &out),
            "corpus": recorded_path(&args.corpus, &out),
            "replay": recorded_opt(args.replay.as_ref(), &out),
            "record": recorded_opt(args.record.as_ref(), &out),
            "options": options,
        }),
    )?;

    let failed_transport = outcomes.iter().filter(|o| matches!(o, Outcome::Failed { error, .. } if error.kind == ErrorKind::Transport)).count();
    if !roster.is_empty() && failed_transport == roster.len() {
        return Err(CliError::transport(format!("all {} researchers failed on transport; see ingest_report.json", roster.len())));
    }
    Ok(())
}
