//! `tabnli`: validate, expand and split tabular NLI corpora.

mod commands;
mod config;
#[cfg(test)]
mod tests;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tabnli::hypothesis::BalanceMode;

use crate::config::{FileConfig, Overrides};

#[derive(Parser, Debug)]
#[command(name = "tabnli", version, about = "Generate tabular NLI corpora from tables and templates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// TOML run configuration; relative paths inside resolve against its directory.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; required here or in the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tables: Option<PathBuf>,
    #[arg(long)]
    templates: Option<PathBuf>,
    #[arg(long)]
    paraphrases: Option<PathBuf>,
    #[arg(long)]
    constraints: Option<PathBuf>,
    #[arg(long)]
    schemas: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
struct Mutation {
    /// Per-row alteration probability.
    #[arg(long)]
    p: Option<f64>,
    /// Counterfactuals per original table.
    #[arg(long = "n-counterfactuals")]
    n_counterfactuals: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
struct Balance {
    /// Target Entail:Contradict ratio.
    #[arg(long)]
    balance: Option<f64>,
    #[arg(long = "balance-mode", value_parser = parse_balance_mode)]
    balance_mode: Option<BalanceMode>,
}

#[derive(Args, Debug, Clone, Default)]
struct Produced {
    /// Pair TSV to read (defaults to <out>/pairs.tsv).
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Expanded table corpus to read (defaults to <out>/tables.jsonl).
    #[arg(long)]
    corpus: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check schemas, tables, templates and constraints; exit 1 on violations.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Expand the corpus with counterfactuals and generate labelled pairs.
    Generate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mutation: Mutation,
        #[command(flatten)]
        balance: Balance,
    },
    /// Expand the corpus with counterfactual tables only.
    Counterfactual {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mutation: Mutation,
    },
    /// Build train/dev/test splits from generated pairs.
    Split {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        produced: Produced,
        /// category-random, cross-category, key-random, key-entity, no-para or cross-para.
        #[arg(long)]
        strategy: Option<String>,
        /// Hardness threshold in percent.
        #[arg(long)]
        threshold: Option<f64>,
        /// Hardness matrix CSV.
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Train, dev and test fractions, e.g. 0.6,0.2,0.2.
        #[arg(long, value_parser = parse_ratios)]
        ratios: Option<[f64; 3]>,
    },
    /// Corpus statistics as JSON plus a readable summary.
    Stats {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        produced: Produced,
    },
    /// Sample pairs into a review sheet.
    Audit {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        produced: Produced,
        /// Number of pairs to sample.
        #[arg(long)]
        k: Option<usize>,
    },
}

fn parse_balance_mode(s: &str) -> Result<BalanceMode, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown balance mode '{s}' (global, per-table, off)"))
}

fn parse_ratios(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> =
        s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}"))).collect::<Result<_, _>>()?;
    parts.try_into().map_err(|_| "expected three comma-separated fractions".to_string())
}

fn overrides(c: &Common) -> Overrides {
    Overrides {
        seed: c.seed,
        tables: c.tables.clone(),
        templates: c.templates.clone(),
        paraphrases: c.paraphrases.clone(),
        constraints: c.constraints.clone(),
        schemas: c.schemas.clone(),
        out: c.out.clone(),
        jobs: c.jobs,
        ..Default::default()
    }
}

fn run(cli: Cli) -> Result<(), commands::Failure> {
    use commands::Failure;
    let load = |c: &Common, o: Overrides| -> Result<config::RunConfig, Failure> {
        let file = match &c.config {
            Some(p) => FileConfig::load(p).map_err(Failure::Io)?,
            None => FileConfig::default(),
        };
        config::resolve(file, o).map_err(Failure::Io)
    };
    match cli.command {
        Command::Validate { common } => commands::validate(&load(&common, overrides(&common))?),
        Command::Generate { common, mutation, balance } => {
            let o = Overrides {
                p: mutation.p,
                n_counterfactuals: mutation.n_counterfactuals,
                balance: balance.balance,
                balance_mode: balance.balance_mode,
                ..overrides(&common)
            };
            commands::generate(&load(&common, o)?)
        }
        Command::Counterfactual { common, mutation } => {
            let o = Overrides { p: mutation.p, n_counterfactuals: mutation.n_counterfactuals, ..overrides(&common) };
            commands::counterfactual(&load(&common, o)?)
        }
        Command::Split { common, produced, strategy, threshold, matrix, ratios } => {
            let o = Overrides { strategy, threshold, matrix, ratios, ..overrides(&common) };
            commands::split(&load(&common, o)?, &commands::Artifacts::new(produced.pairs, produced.corpus))
        }
        Command::Stats { common, produced } => commands::stats(
            &load(&common, overrides(&common))?,
            &commands::Artifacts::new(produced.pairs, produced.corpus),
        ),
        Command::Audit { common, produced, k } => {
            let o = Overrides { k, ..overrides(&common) };
            commands::audit(&load(&common, o)?, &commands::Artifacts::new(produced.pairs, produced.corpus))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            f.report();
            ExitCode::from(f.code())
        }
    }
}
