use std::collections::BTreeMap;
use std::path::PathBuf;

use scholar_profile::stats::{build_report, StatsError};
use serde_json::json;

use super::evaluate::Evaluation;
use crate::error::{require_exists, CliError, CliResult};
use crate::util::{csv_error, read_json, recorded_opt, recorded_path, write_run_config};

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    out: PathBuf,
    /// Output of `evaluate` (default: <out>/evaluation.json).
    #[arg(long)]
    evaluation: Option<PathBuf>,
    /// Output of `humaneval`, added as a report section.
    #[arg(long)]
    humaneval: Option<PathBuf>,
    /// Output directory of `topics`, whose diversity table is added as a report section.
    #[arg(long)]
    topics_dir: Option<PathBuf>,
}

fn stats_error(e: StatsError) -> CliError {
    CliError::data(e.to_string())
}

fn diversity_section(dir: &std::path::Path) -> CliResult<serde_json::Value> {
    let path = dir.join("diversity.csv");
    require_exists(&path, "diversity table")?;
    let mut reader = csv::Reader::from_path(&path).map_err(|e| csv_error(&path, e))?;
    let mut rows = Vec::new();
    let mut bands: BTreeMap<String, usize> = BTreeMap::new();
    for rec in reader.deserialize::<BTreeMap<String, String>>() {
        let rec = rec.map_err(|e| csv_error(&path, e))?;
        *bands.entry(rec.get("band").cloned().unwrap_or_default()).or_default() += 1;
        rows.push(rec);
    }
    Ok(json!({ "researchers": rows, "band_counts": bands }))
}

pub fn run(args: Args) -> CliResult<()> {
    let eval_path = args.evaluation.clone().unwrap_or_else(|| args.out.join("evaluation.json"));
    require_exists(&eval_path, "evaluation file")?;
    let evaluation: Evaluation = read_json(&eval_path)?;
    if evaluation.values.is_empty() {
        return Err(CliError::data(format!("{}: no metric values to report", eval_path.display())));
    }
    let mut report = build_report(evaluation.values).map_err(stats_error)?;
    report.notes.extend(evaluation.notes);

    if let Some(path) = &args.humaneval {
        require_exists(path, "human evaluation file")?;
        let he: serde_json::Value = read_json(path)?;
        let pooled = &he["agreement"]["pooled"];
        if let (Some(ac1), Some(desc)) = (pooled["result"]["ac1"].as_f64(), pooled["description"].as_str()) {
            report.notes.push(format!("human evaluation: pooled AC1 {ac1:.4} with pooling: {desc}"));
        }
        report.sections.insert("human_evaluation".into(), he);
    }
    if let Some(dir) = &args.topics_dir {
        report.sections.insert("topic_stability".into(), diversity_section(dir)?);
    }

    let written = report.emit(&args.out).map_err(stats_error)?;
    for p in &written {
        println!("{}", p.display());
    }
    println!("{} values, {} aggregates, {} tests", report.values.len(), report.aggregates.len(), report.tests.len());
    write_run_config(
        &args.out,
        "report",
        &json!({
            "evaluation": recorded_path(&eval_path, &args.out),
            "humaneval": recorded_opt(args.humaneval.as_ref(), &args.out),
            "topics_dir": recorded_opt(args.topics_dir.as_ref(), &args.out),
        }),
    )
}
