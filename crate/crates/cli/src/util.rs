//! Small helpers shared by the commands.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::Serialize;

use crate::error::{io_error, CliError, CliResult};

/// Timestamp stamped on generated or imported profiles: the flag value,
/// else `SOURCE_DATE_EPOCH`, else the Unix epoch. A wall-clock default
/// would make every run differ.
pub fn created_at(flag: Option<&str>) -> CliResult<DateTime<Utc>> {
    if let Some(s) = flag {
        return DateTime::parse_from_rfc3339(s)
            .map(|t| t.with_timezone(&Utc))
            .map_err(|e| CliError::config(format!("--created-at '{s}': {e}")));
    }
    match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(s) if !s.trim().is_empty() => {
            let secs: i64 = s.trim().parse().map_err(|_| CliError::config(format!("SOURCE_DATE_EPOCH '{s}' is not an integer")))?;
            DateTime::from_timestamp(secs, 0).ok_or_else(|| CliError::config(format!("SOURCE_DATE_EPOCH {secs} out of range")))
        }
        _ => Ok(DateTime::UNIX_EPOCH),
    }
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

/// Path as recorded in run configs. Paths sharing more than the filesystem
/// root with the output directory are written relative to it, so two runs
/// into sibling directories record the same text.
pub fn recorded_path(path: &Path, out: &Path) -> String {
    let abs = |p: &Path| std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf());
    let (path_abs, out_abs) = (abs(path), abs(out));
    let shared = path_abs.components().zip(out_abs.components()).take_while(|(a, b)| a == b).count();
    match pathdiff::diff_paths(&path_abs, &out_abs) {
        Some(rel) if shared > 1 => rel.display().to_string(),
        _ => path.display().to_string(),
    }
}

pub fn recorded_opt(path: Option<&PathBuf>, out: &Path) -> Option<String> {
    path.map(|p| recorded_path(p, out))
}

/// Writes `run_config.<command>.json` into the output directory.
pub fn write_run_config(out: &Path, command: &str, config: &serde_json::Value) -> CliResult<()> {
    let value = serde_json::json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
    });
    write_json(&out.join(format!("run_config.{command}.json")), &value)
}

pub fn thread_pool(workers: usize) -> CliResult<rayon::ThreadPool> {
    if workers == 0 {
        return Err(CliError::config("--workers must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::config(format!("worker pool: {e}")))
}

/// Parses a flag value through the type's serde names, so flag spellings
/// match the configuration files.
pub fn serde_enum<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

pub fn stoplist(path: Option<&Path>) -> CliResult<scholar_profile::corpus::Stoplist> {
    match path {
        Some(p) => scholar_profile::corpus::load_stoplist(p).map_err(|e| CliError::config(format!("stoplist {}: {e}", p.display()))),
        None => Ok(scholar_profile::corpus::default_stoplist()),
    }
}

/// Stopword-free tokens of a publication's title and abstract.
pub fn publication_tokens(record: &scholar_profile::PublicationRecord, stop: &scholar_profile::corpus::Stoplist) -> scholar_profile::TokenizedDoc {
    scholar_profile::corpus::remove_stopwords(&scholar_profile::corpus::tokenize(&record.text()), stop)
}

pub fn csv_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::data(format!("{}: {e}", path.display()))
}

pub fn create_file(path: &Path) -> CliResult<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path).map(std::io::BufWriter::new).map_err(|e| io_error(path, e))
}
