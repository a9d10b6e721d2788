use std::path::PathBuf;

use bandchol::rankcov::RankMethod;
use bandchol::simlab::{Method, ModelFamily, TransformSpec};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use crate::config::{CommandKind, Overrides, RunConfig};
use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "bandchol", version, about = "Bandable precision matrix estimation and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a model (A, D, omega, sigma) and a data matrix.
    Generate(RunArgs),
    /// Fit one estimator to a data file.
    Estimate(RunArgs),
    /// Run an experiment grid and write CSV and JSON risk reports.
    Simulate(RunArgs),
    /// Turn risk reports into plot data.
    Report(RunArgs),
}

/// Values in the names of enums as they appear in config files.
fn parse_name<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = "BANDCHOL_THREADS")]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write matrices in the binary format.
    #[arg(long)]
    pub binary: bool,
    /// Record wall time in the estimate sidecar.
    #[arg(long)]
    pub record_time: bool,

    /// crop, frob, banding, adaptive or rank-crop.
    #[arg(long, value_parser = parse_name::<Method>)]
    pub method: Option<Method>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub cl: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, value_parser = parse_name::<RankMethod>)]
    pub rank: Option<RankMethod>,

    /// q_decay, p_firstcol, q_misspec or identity.
    #[arg(long, value_parser = parse_name::<ModelFamily>)]
    pub family: Option<ModelFamily>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub level: Option<u32>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Sample sizes for simulate, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Vec<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// identity, cubic or step.
    #[arg(long, value_parser = parse_name::<TransformSpec>)]
    pub transform: Option<TransformSpec>,
    /// Data file (estimate) or report JSON files (report).
    #[arg(long)]
    pub input: Vec<PathBuf>,
}

impl Command {
    pub fn kind(&self) -> CommandKind {
        match self {
            Command::Generate(_) => CommandKind::Generate,
            Command::Estimate(_) => CommandKind::Estimate,
            Command::Simulate(_) => CommandKind::Simulate,
            Command::Report(_) => CommandKind::Report,
        }
    }

    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Generate(a) | Command::Estimate(a) | Command::Simulate(a) | Command::Report(a) => a,
        }
    }

    /// Loads the config file (if any) and applies the flags.
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let a = self.args();
        let base = match &a.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        base.resolve(self.kind(), a.overrides())
    }
}

impl RunArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            threads: self.threads,
            out: self.out.clone(),
            binary: self.binary,
            record_time: self.record_time,
            method: self.method,
            k: self.k,
            alpha: self.alpha,
            eta: self.eta,
            cl: self.cl,
            c: self.c,
            rank: self.rank,
            family: self.family,
            p: self.p,
            level: self.level,
            n: self.n,
            n_grid: self.n_grid.clone(),
            reps: self.reps,
            transform: self.transform,
            input: self.input.clone(),
        }
    }
}
