//! Command implementations behind the `fairsep` binary.
//!
//! Every command reads a [`RunConfig`], writes its artifacts into the run's
//! output directory and records them in `manifest.json` with their SHA-256.
//! Outputs carry no timestamps, so identical configs give identical bytes.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;
pub mod tables;

use std::path::PathBuf;

pub use config::{Overrides, RunConfig};

/// Failure classes, mapped to process exit codes by [`CliError::exit_code`].
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Missing or inconsistent inputs.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<fairsep_core::Error> for CliError {
    fn from(e: fairsep_core::Error) -> Self {
        use fairsep_core::Error as E;
        match e {
            E::Config(_) | E::Schema(_) | E::Io { .. } => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.into()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

/// What a successful command reports back.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// `false` only for an audit whose aggregate exceeds epsilon.
    pub pass: bool,
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
    pub out_dir: PathBuf,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Audit,
    Train,
    ExtractPrivilege,
    SweepP,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Audit => "audit",
            Command::Train => "train",
            Command::ExtractPrivilege => "extract-privilege",
            Command::SweepP => "sweep-p",
            Command::Report => "report",
        }
    }
}

/// Runs `command` with a fully merged configuration.
pub fn run(command: Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    match command {
        Command::Audit => commands::audit::run(cfg),
        Command::Train => commands::train::run(cfg),
        Command::ExtractPrivilege => commands::privilege::extract(cfg),
        Command::SweepP => commands::privilege::sweep(cfg),
        Command::Report => commands::report::run(cfg),
    }
}
