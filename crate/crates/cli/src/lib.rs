//! Command-line workbench: dataset ingestion, experiment orchestration and
//! report emission on top of `humanrate-core`.

pub mod config;
pub mod csvio;
pub mod error;
pub mod output;
pub mod pipeline;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use humanrate_core::NoiseFamilySpec;

pub use config::{Overrides, RunConfig, SEED_ENV};
pub use error::{CliError, Result};
pub use output::{write_run, RunOutput, Table};

#[derive(Debug, Parser)]
#[command(
    name = "humanrate",
    version,
    about = "Human rating uncertainty workbench"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    Synth,
    Fit,
    Q1,
    Q2,
    Rmse,
    Distinguish,
    Converge,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a re-rating and a pdf-rating dataset
    Synth(RunArgs),
    /// Fit latent rating distributions
    Fit(RunArgs),
    /// Compare re-rating and pdf-rating distributions and noise
    Q1(RunArgs),
    /// Propagate uncertainty into RMSE and assess distinguishability
    Q2(RunArgs),
    /// RMSE distributions of the predictor family
    Rmse(RunArgs),
    /// Ranking-error curve of the optimal predictor under distortion
    Distinguish(RunArgs),
    /// Convergence of RMSE overlap with sample size
    Converge(RunArgs),
}

impl Command {
    pub fn split(self) -> (Verb, RunArgs) {
        match self {
            Command::Synth(a) => (Verb::Synth, a),
            Command::Fit(a) => (Verb::Fit, a),
            Command::Q1(a) => (Verb::Q1, a),
            Command::Q2(a) => (Verb::Q2, a),
            Command::Rmse(a) => (Verb::Rmse, a),
            Command::Distinguish(a) => (Verb::Distinguish, a),
            Command::Converge(a) => (Verb::Converge, a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    /// σ ~ N(1.3, 0.3)
    Gaussian,
    /// σ ~ power law, a = 2.5, x_min = 0.2
    Powerlaw,
}

impl From<NoiseArg> for NoiseFamilySpec {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::Gaussian => NoiseFamilySpec::GAUSSIAN_DEFAULT,
            NoiseArg::Powerlaw => NoiseFamilySpec::POWER_LAW_DEFAULT,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML file setting any run option; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Re-rating CSV (user_id,item_id,trial,rating); synthesized when absent
    #[arg(long)]
    pub rerating: Option<PathBuf>,
    /// Pdf-rating CSV (user_id,item_id,w1..w5); synthesized when absent
    #[arg(long)]
    pub pdfrating: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub variance_floor: Option<f64>,
    #[arg(long)]
    pub confidence_level: Option<f64>,
    #[arg(long)]
    pub mc_trials: Option<usize>,
    /// Master seed [default: $HUMANRATE_SEED or 0]
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub users: Option<usize>,
    #[arg(long)]
    pub items: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_enum)]
    pub noise: Option<NoiseArg>,
    #[arg(long, value_enum)]
    pub pdf_noise: Option<NoiseArg>,
    #[arg(long)]
    pub candidates: Option<usize>,
    #[arg(long)]
    pub distortion_seeds: Option<usize>,
}

impl RunArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            rerating: self.rerating.clone(),
            pdfrating: self.pdfrating.clone(),
            alpha: self.alpha,
            variance_floor: self.variance_floor,
            confidence_level: self.confidence_level,
            mc_trials: self.mc_trials,
            seed: self.seed,
            output_dir: self.out.clone(),
            users: self.users,
            items: self.items,
            trials_per_pair: self.trials,
            noise: self.noise.map(Into::into),
            pdf_noise: self.pdf_noise.map(Into::into),
            candidates: self.candidates,
            distortion_seeds: self.distortion_seeds,
        }
    }

    pub fn resolve(&self, env_seed: Option<&str>) -> Result<RunConfig> {
        RunConfig::resolve(self.config.as_deref(), env_seed, &self.overrides())
    }
}

pub fn execute(verb: Verb, cfg: &RunConfig) -> Result<RunOutput> {
    match verb {
        Verb::Synth => pipeline::run_synth(cfg),
        Verb::Fit => pipeline::run_fit(cfg),
        Verb::Q1 => pipeline::run_q1(cfg),
        Verb::Q2 => pipeline::run_q2(cfg),
        Verb::Rmse => pipeline::run_rmse(cfg),
        Verb::Distinguish => pipeline::run_distinguish(cfg),
        Verb::Converge => pipeline::run_converge(cfg),
    }
}
