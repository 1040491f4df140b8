use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use innatecoder::tasks::TaskId;

mod chart;
mod commands;
mod config;

use config::Settings;

#[derive(Parser, Debug)]
#[command(
    name = "innatecoder",
    version,
    about = "Harvest programmatic options and search Karel policies"
)]
struct Cli {
    /// Flat TOML settings file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Collect candidate programs from a chat model, a mock, or an existing corpus.
    Harvest {
        #[arg(long)]
        task: TaskId,
        /// Corpus file to write.
        #[arg(long)]
        out: PathBuf,
        /// Validate and copy this corpus instead of querying a model.
        #[arg(long, conflicts_with = "mock")]
        from_corpus: Option<PathBuf>,
        /// Replay model replies from this file (one JSON string per line).
        #[arg(long)]
        mock: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Build the filtered option set from a corpus.
    Options {
        #[arg(long)]
        task: TaskId,
        /// Corpus file; defaults to `<corpus_dir>/<Task>.jsonl`.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Options file to write.
        #[arg(long)]
        out: PathBuf,
        /// Seed for probe-state collection.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        settings: Settings,
    },
    /// Run every (task, method, seed) job and write curves and a summary.
    Run {
        #[command(flatten)]
        settings: Settings,
    },
    /// Recompute the summary from a curves file.
    Report {
        #[arg(long)]
        curves: PathBuf,
        /// Write the summary JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw mean learning curves for one task as SVG.
    Chart {
        #[arg(long)]
        curves: PathBuf,
        #[arg(long)]
        task: TaskId,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    match cli.cmd {
        Cmd::Harvest {
            task,
            out,
            from_corpus,
            mock,
            settings,
        } => commands::harvest(
            task,
            &out,
            from_corpus.as_deref(),
            mock.as_deref(),
            &settings.over(file),
        ),
        Cmd::Options {
            task,
            corpus,
            out,
            seed,
            settings,
        } => commands::options(task, corpus, &out, seed, &settings.over(file)),
        Cmd::Run { settings } => commands::run(&settings.over(file)),
        Cmd::Report { curves, out } => commands::report(&curves, out.as_deref()),
        Cmd::Chart { curves, task, out } => chart::chart(&curves, task, &out),
    }
}
