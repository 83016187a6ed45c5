use std::collections::BTreeMap;
use std::path::PathBuf;

use scholar_profile::human::{
    favourable_count, identified_as_human_count, load_ratings_dir, pooled_ac1, stratified_ac1, AgreementResult, Band, Dimension,
    HumanEvalError, Pooling,
};
use scholar_profile::Variant;
use serde_json::json;

use crate::error::{require_exists, CliError, CliResult};
use crate::util::{ensure_dir, recorded_path, serde_enum, write_json, write_run_config};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Directory of rating CSV tables.
    #[arg(long)]
    ratings: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Dimension whose agreement is computed.
    #[arg(long, default_value = "overall", value_parser = |s: &str| s.parse::<Dimension>())]
    dimension: Dimension,
    #[arg(long, default_value = "faculty-variant", value_parser = serde_enum::<Pooling>)]
    pooling: Pooling,
}

fn pooling_name(p: Pooling) -> &'static str {
    match p {
        Pooling::FacultyVariant => "faculty-variant",
        Pooling::BandCollapsed => "band-collapsed",
    }
}

fn pct(k: usize, n: usize) -> f64 {
    if n == 0 { 0.0 } else { 100.0 * k as f64 / n as f64 }
}

fn agreement_json(pooling: Pooling, r: &AgreementResult) -> serde_json::Value {
    json!({ "pooling": pooling_name(pooling), "description": pooling.describe(), "result": r })
}

pub fn run(args: Args) -> CliResult<()> {
    require_exists(&args.ratings, "ratings directory")?;
    let records = load_ratings_dir(&args.ratings).map_err(|e| CliError::data(e.to_string()))?;
    if records.is_empty() {
        return Err(CliError::data(format!("no rating rows in {}", args.ratings.display())));
    }
    let mut variants: Vec<Variant> = records.iter().map(|r| r.variant).collect();
    variants.sort();
    variants.dedup();

    let mut table = BTreeMap::new();
    println!("{:<14}{:>5}  {:<18}{:>10}{:>10}", "variant", "n", "dimension", "favour.", "percent");
    for &v in &variants {
        let mut dims = BTreeMap::new();
        for d in Dimension::ALL {
            let (k, n) = favourable_count(&records, v, d);
            println!("{:<14}{:>5}  {:<18}{:>10}{:>9.2}%", v.as_str(), n, d.as_str(), format!("{k}/{n}"), pct(k, n));
            dims.insert(d.as_str(), json!({ "favourable": k, "total": n, "percent": pct(k, n) }));
        }
        let (k, n) = identified_as_human_count(&records, v);
        println!("{:<14}{:>5}  {:<18}{:>10}{:>9.2}%", v.as_str(), n, "identified_human", format!("{k}/{n}"), pct(k, n));
        table.insert(v.as_str(), json!({ "dimensions": dims, "identified_as_human": { "count": k, "total": n, "percent": pct(k, n) } }));
    }

    let ac1_err = |e: HumanEvalError| CliError::data(e.to_string());
    let main = pooled_ac1(&records, args.dimension, &variants, args.pooling).map_err(ac1_err)?;
    let other = match args.pooling {
        Pooling::FacultyVariant => Pooling::BandCollapsed,
        Pooling::BandCollapsed => Pooling::FacultyVariant,
    };
    let alt = pooled_ac1(&records, args.dimension, &variants, other).map_err(ac1_err)?;
    println!();
    println!("{:<28}{:>8}{:>8}{:>8}{:>7}{:>7}", format!("AC1 ({})", args.dimension.as_str()), "ac1", "pa", "pe", "items", "raters");
    let row = |label: &str, r: &AgreementResult| {
        println!("{:<28}{:>8.4}{:>8.4}{:>8.4}{:>7}{:>7}", label, r.ac1, r.pa, r.pe, r.n_items, r.n_raters);
    };
    row(&format!("pooled, {}", pooling_name(args.pooling)), &main);
    row(&format!("pooled, {}", pooling_name(other)), &alt);

    let mut stratified = BTreeMap::new();
    let mut notes = Vec::new();
    for band in Band::ALL {
        match stratified_ac1(&records, &variants, band) {
            Ok(r) => {
                row(&format!("stratified, {band} band"), &r);
                stratified.insert(band.as_str(), Some(r));
            }
            Err(e) => {
                println!("{:<28}{:>8}", format!("stratified, {band} band"), "n/a");
                notes.push(format!("stratified {band}: {e}"));
                stratified.insert(band.as_str(), None);
            }
        }
    }
    println!("pooling: {}", args.pooling.describe());

    ensure_dir(&args.out)?;
    write_json(
        &args.out.join("humaneval.json"),
        &json!({
            "variants": table,
            "agreement": {
                "dimension": args.dimension.as_str(),
                "variants": variants,
                "pooled": agreement_json(args.pooling, &main),
                "alternative": agreement_json(other, &alt),
                "stratified": stratified,
            },
            "notes": notes,
        }),
    )?;
    write_run_config(
        &args.out,
        "humaneval",
        &json!({
            "ratings": recorded_path(&args.ratings, &args.out),
            "dimension": args.dimension.as_str(),
            "pooling": pooling_name(args.pooling),
        }),
    )
}
