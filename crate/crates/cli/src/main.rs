use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fairsep_cli::{run, Command, Overrides, RunConfig};
use fairsep_core::notions::NotionKind;

/// Fairness audits, privilege extraction and fairness-constrained training.
#[derive(Debug, Parser)]
#[command(name = "fairsep", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    args: Args,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Violation report and subgroup statistics for predictions, a model or the labels.
    Audit,
    /// Train on a seeded split, audit on the held-out rows.
    Train,
    /// Rank ordinal/numerical columns by importance for the non-protected group.
    ExtractPrivilege,
    /// Sweep top-p% privilege cutoffs against the 80% rule.
    SweepP,
    /// Render SVG charts and a summary of finished runs.
    Report,
}

#[derive(Debug, clap::Args)]
struct Args {
    /// Run configuration (JSON); flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    #[arg(long, global = true)]
    schema: Option<PathBuf>,
    /// Notion kind: EP, DP, CDP, SEP, CSEP or SEP_relaxed.
    #[arg(long, global = true)]
    notion: Option<NotionKind>,
    /// Privileged share in percent.
    #[arg(long, global = true)]
    p: Option<f64>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Predictions CSV for `audit`.
    #[arg(long, global = true)]
    predictions: Option<PathBuf>,
    /// Model JSON for `audit`.
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Audit the labels themselves.
    #[arg(long, global = true)]
    ground_truth: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let command = match cli.command {
        Cmd::Audit => Command::Audit,
        Cmd::Train => Command::Train,
        Cmd::ExtractPrivilege => Command::ExtractPrivilege,
        Cmd::SweepP => Command::SweepP,
        Cmd::Report => Command::Report,
    };
    let a = cli.args;
    let overrides = Overrides {
        data: a.data,
        schema: a.schema,
        notion: a.notion,
        p: a.p,
        epsilon: a.epsilon,
        seed: a.seed,
        out: a.out,
        predictions: a.predictions,
        model: a.model,
        ground_truth: a.ground_truth,
    };
    let result = (|| {
        let mut cfg = match &a.config {
            Some(path) => RunConfig::from_path(path)?,
            None => RunConfig::default(),
        };
        cfg.apply(&overrides)?;
        run(command, &cfg)
    })();
    match result {
        Ok(outcome) => {
            log::info!(
                "{}: wrote {} files to {}",
                command.name(),
                outcome.files.len(),
                outcome.out_dir.display()
            );
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            log::error!("{}: {e:#}", command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
