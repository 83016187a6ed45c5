//! Researcher roster: `id,name,affiliation[,human_profile_path]`.

use std::path::Path;

use scholar_profile::Researcher;

use crate::error::{CliError, CliResult};

/// Reads the roster. Profile paths are resolved against the roster's
/// directory; an empty file yields an empty roster.
pub fn load_roster(path: &Path) -> CliResult<Vec<Researcher>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("roster {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let bad = |row: usize, msg: String| CliError::data(format!("roster {} row {row}: {msg}", path.display()));

    let headers = reader.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Ok(Vec::new());
    }
    let expected = ["id", "name", "affiliation"];
    if headers.len() < 3 || headers.iter().take(3).ne(expected) {
        return Err(bad(1, format!("header must start with id,name,affiliation, got '{}'", headers.iter().collect::<Vec<_>>().join(","))));
    }

    let mut out: Vec<Researcher> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| bad(row, e.to_string()))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() < 3 {
            return Err(bad(row, format!("expected at least 3 fields, got {}", rec.len())));
        }
        let mut r = Researcher::new(&rec[0], &rec[1], &rec[2]);
        if let Some(p) = rec.get(3).filter(|p| !p.is_empty()) {
            let p = base.join(p);
            let text = std::fs::read_to_string(&p).map_err(|e| bad(row, format!("human profile {}: {e}", p.display())))?;
            r.human_profile = Some(text.trim().to_string());
        }
        r.validate().map_err(|m| bad(row, m))?;
        if out.iter().any(|o| o.id == r.id) {
            return Err(bad(row, format!("duplicate researcher id '{}'", r.id)));
        }
        out.push(r);
    }
    Ok(out)
}
