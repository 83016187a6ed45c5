//! `scholar-profile`: researcher profile generation and evaluation pipeline.
//!
//! Commands share one JSON Lines corpus file and can run independently:
//! `ingest` or `import` fill it, `topics` and `generate` extend it,
//! `evaluate`, `humaneval` and `report` score and summarise.
//!
//! Failures print `{"error": {"kind", "message"}}` on stderr and exit with
//! 2 (configuration), 3 (data) or 4 (transport).

mod commands;
mod error;
mod roster;
mod util;

use clap::{ArgAction, Parser, Subcommand};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "scholar-profile", version, about = "Generate and evaluate researcher interest profiles")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Search and fetch PubMed records for every researcher in a roster.
    Ingest(commands::ingest::Args),
    /// Build a corpus from a roster and profile text files, without PubMed.
    Import(commands::import::Args),
    /// Fit a corpus-wide topic model and compute topic-stability tables.
    Topics(commands::topics::Args),
    /// Generate profiles with an LLM provider.
    Generate(commands::generate::Args),
    /// Score generated profiles against the self-written ones.
    Evaluate(commands::evaluate::Args),
    /// Summarise rating tables and inter-rater agreement.
    Humaneval(commands::humaneval::Args),
    /// Aggregate metric values, run paired tests and write report tables.
    Report(commands::report::Args),
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Ingest(a) => commands::ingest::run(a),
        Command::Import(a) => commands::import::run(a),
        Command::Topics(a) => commands::topics::run(a),
        Command::Generate(a) => commands::generate::run(a),
        Command::Evaluate(a) => commands::evaluate::run(a),
        Command::Humaneval(a) => commands::humaneval::run(a),
        Command::Report(a) => commands::report::run(a),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                std::process::exit(0);
            }
            let err = CliError::config(e.to_string().trim_end());
            eprintln!("{}", err.to_json());
            std::process::exit(err.kind.exit_code());
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Err(e) = run(cli) {
        eprintln!("{}", e.to_json());
        std::process::exit(e.kind.exit_code());
    }
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        super::Cli::command().debug_assert();
    }
}
