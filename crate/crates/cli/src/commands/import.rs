use std::path::PathBuf;

use scholar_profile::corpus::{load_corpus, save_corpus};
use scholar_profile::{Corpus, ProfileDoc, Variant};
use serde_json::json;

use crate::error::{io_error, require_exists, CliResult};
use crate::roster::load_roster;
use crate::util::{created_at, ensure_dir, recorded_path, write_run_config};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Roster CSV: id,name,affiliation[,human_profile_path].
    #[arg(long)]
    roster: PathBuf,
    /// Directory of `<id>.<variant>.txt` profile files.
    #[arg(long)]
    profiles: PathBuf,
    /// Corpus file to create, or to update when it already exists.
    #[arg(long)]
    corpus: PathBuf,
    /// Directory for the run config (default: the corpus directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// RFC 3339 timestamp for imported profiles.
    #[arg(long)]
    created_at: Option<String>,
}

pub fn run(args: Args) -> CliResult<()> {
    require_exists(&args.profiles, "profiles directory")?;
    let roster = load_roster(&args.roster)?;
    let stamp = created_at(args.created_at.as_deref())?;
    let mut corpus = if args.corpus.exists() { load_corpus(&args.corpus)? } else { Corpus::default() };

    for mut researcher in roster {
        let mut imported = Vec::new();
        for variant in Variant::ALL {
            let path = args.profiles.join(format!("{}.{}.txt", researcher.id, variant));
            if !path.exists() {
                continue;
            }
            let text = std::fs::read_to_string(&path).map_err(|e| io_error(&path, e))?.trim().to_string();
            if text.is_empty() {
                log::warn!("{}: empty profile file skipped", path.display());
                continue;
            }
            if variant == Variant::Human {
                if researcher.human_profile.is_none() {
                    researcher.human_profile = Some(text);
                    imported.push(variant.as_str());
                }
                continue;
            }
            corpus.upsert_profile(ProfileDoc { researcher_id: researcher.id.clone(), variant, text, created_at: stamp });
            imported.push(variant.as_str());
        }
        if researcher.human_profile.is_some() && !imported.contains(&"human") {
            imported.insert(0, "human");
        }
        println!("{}\t{}", researcher.id, imported.join(","));
        match corpus.researchers.iter_mut().find(|r| r.id == researcher.id) {
            Some(slot) => *slot = researcher,
            None => corpus.researchers.push(researcher),
        }
    }

    let out = args.out.clone().or_else(|| args.corpus.parent().map(PathBuf::from)).filter(|p| !p.as_os_str().is_empty()).unwrap_or_else(|| ".".into());
    ensure_dir(&out)?;
    if let Some(parent) = args.corpus.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    save_corpus(&corpus, &args.corpus)?;
    write_run_config(
        &out,
        "import",
        &json!({
            "roster": recorded_path(&args.roster, &out),
            "profiles": recorded_path(&args.profiles, &out),
            "corpus": recorded_path(&args.corpus, &out),
            "created_at": stamp,
        }),
    )
}
