use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{self, EvalModel};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::models::ModelKind;

#[derive(Debug, Parser)]
#[command(name = "aft", version, about = "Auto-focus attention experiments on synthetic sports QA")]
pub struct Cli {
    /// TOML run configuration; defaults to the built-in desk configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate, balance, pool and split a synthetic corpus.
    Gen,
    /// Train one model on the generated data.
    Train {
        #[arg(long, value_parser = parse_kind)]
        model: ModelKind,
    },
    /// Score a trained model or a random baseline on one split.
    Eval {
        #[arg(long, value_parser = parse_eval)]
        model: EvalModel,
        #[arg(long, default_value = "test")]
        split: String,
    },
    /// Count and time banded against dense attention.
    Bench,
    /// Run the balance filter and answer pool on their own.
    Balance {
        /// Records in the split-file format; generated afresh when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Write per-question focus weights of the trained AFT model.
    FocusDump {
        #[arg(long, default_value = "test")]
        split: String,
    },
    /// Print the resolved configuration as TOML.
    Config,
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: crate::CliError| e.to_string())
}

fn parse_eval(s: &str) -> Result<EvalModel, String> {
    s.parse().map_err(|e: crate::CliError| e.to_string())
}

impl Cli {
    pub fn resolve_config(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.set_seed(seed);
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn run(&self) -> CliResult<()> {
        let cfg = self.resolve_config()?;
        match &self.command {
            Command::Gen => commands::gen(&cfg).map(drop),
            Command::Train { model } => commands::train(&cfg, *model).map(drop),
            Command::Eval { model, split } => commands::eval(&cfg, *model, split).map(drop),
            Command::Bench => commands::bench(&cfg).map(drop),
            Command::Balance { input } => commands::balance(&cfg, input.as_deref()).map(drop),
            Command::FocusDump { split } => commands::focus_dump(&cfg, split).map(drop),
            Command::Config => {
                print!("{}", cfg.to_toml());
                Ok(())
            }
        }
    }
}
