//! Run configuration. Layers, lowest first: built-in defaults, the
//! `HUMANRATE_SEED` environment variable, a TOML config file, command-line flags.

use std::path::{Path, PathBuf};

use humanrate_core::distinguish::NoiseSearchSettings;
use humanrate_core::estimation::{DEFAULT_CONFIDENCE_LEVEL, DEFAULT_VARIANCE_FLOOR};
use humanrate_core::propagation::{ConvergenceSettings, DEFAULT_CANDIDATES};
use humanrate_core::stats::DEFAULT_ALPHA;
use humanrate_core::synth::evenly_spaced_means;
use humanrate_core::{CohortSpec, EstimationSettings, NoiseFamilySpec, RatingScale};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, CliError, Result};

pub const SEED_ENV: &str = "HUMANRATE_SEED";

/// Shape of the synthetic cohort used when no dataset file is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CohortConfig {
    pub users: usize,
    pub items: usize,
    pub trials_per_pair: usize,
    /// Evenly spaced over [2, 4.5] when absent.
    pub item_base_means: Option<Vec<f64>>,
    pub mean_jitter: f64,
    pub noise: NoiseFamilySpec,
    /// Noise population for synthesized pdf-ratings; the re-rating one when absent.
    pub pdf_noise: Option<NoiseFamilySpec>,
}

impl Default for CohortConfig {
    fn default() -> Self {
        let spec = CohortSpec::default();
        Self {
            users: spec.n_users,
            items: spec.n_items,
            trials_per_pair: spec.trials_per_pair,
            item_base_means: None,
            mean_jitter: spec.mean_jitter,
            noise: spec.noise,
            pdf_noise: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub rerating: Option<PathBuf>,
    pub pdfrating: Option<PathBuf>,
    pub cohort: CohortConfig,
    pub alpha: f64,
    pub variance_floor: f64,
    pub confidence_level: f64,
    pub mc_trials: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub candidates: usize,
    pub convergence_grid: Vec<usize>,
    pub convergence_threshold: f64,
    pub noise_grid: Vec<f64>,
    pub distortion_seeds: usize,
    pub epsilon: f64,
    pub indirect_sample_size: usize,
    pub indirect_repetitions: usize,
    pub resamples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let conv = ConvergenceSettings::default();
        let noise = NoiseSearchSettings::default();
        Self {
            rerating: None,
            pdfrating: None,
            cohort: CohortConfig::default(),
            alpha: DEFAULT_ALPHA,
            variance_floor: DEFAULT_VARIANCE_FLOOR,
            confidence_level: DEFAULT_CONFIDENCE_LEVEL,
            mc_trials: 20_000,
            seed: 0,
            output_dir: PathBuf::from("humanrate-out"),
            candidates: DEFAULT_CANDIDATES,
            convergence_grid: conv.n_grid,
            convergence_threshold: conv.threshold,
            noise_grid: noise.p_grid,
            distortion_seeds: noise.distortion_seeds,
            epsilon: noise.epsilon,
            indirect_sample_size: 30,
            indirect_repetitions: 200,
            resamples: 200,
        }
    }
}

/// Values given on the command line; `None` leaves the lower layer in place.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub rerating: Option<PathBuf>,
    pub pdfrating: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub variance_floor: Option<f64>,
    pub confidence_level: Option<f64>,
    pub mc_trials: Option<usize>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub users: Option<usize>,
    pub items: Option<usize>,
    pub trials_per_pair: Option<usize>,
    pub noise: Option<NoiseFamilySpec>,
    pub pdf_noise: Option<NoiseFamilySpec>,
    pub candidates: Option<usize>,
    pub distortion_seeds: Option<usize>,
}

impl RunConfig {
    pub fn resolve(file: Option<&Path>, env_seed: Option<&str>, flags: &Overrides) -> Result<Self> {
        let mut base = RunConfig::default();
        if let Some(s) = env_seed {
            base.seed = s.trim().parse().map_err(|_| {
                CliError::Config(format!("{SEED_ENV}={s:?} is not an unsigned integer"))
            })?;
        }
        let mut cfg = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(io_err(path))?;
                let table: toml::Table = toml::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                let has_seed = table.contains_key("seed");
                let mut cfg: RunConfig = toml::Value::Table(table)
                    .try_into()
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                if !has_seed {
                    cfg.seed = base.seed;
                }
                cfg
            }
            None => base,
        };
        cfg.apply(flags);
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, o: &Overrides) {
        macro_rules! set {
            ($($field:ident).+ <- $val:expr) => {
                if let Some(v) = $val.clone() {
                    self.$($field).+ = v;
                }
            };
        }
        if o.rerating.is_some() {
            self.rerating = o.rerating.clone();
        }
        if o.pdfrating.is_some() {
            self.pdfrating = o.pdfrating.clone();
        }
        if o.pdf_noise.is_some() {
            self.cohort.pdf_noise = o.pdf_noise;
        }
        set!(alpha <- o.alpha);
        set!(variance_floor <- o.variance_floor);
        set!(confidence_level <- o.confidence_level);
        set!(mc_trials <- o.mc_trials);
        set!(seed <- o.seed);
        set!(output_dir <- o.output_dir);
        set!(cohort.users <- o.users);
        set!(cohort.items <- o.items);
        set!(cohort.trials_per_pair <- o.trials_per_pair);
        set!(cohort.noise <- o.noise);
        set!(candidates <- o.candidates);
        set!(distortion_seeds <- o.distortion_seeds);
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0,1), got {}", self.alpha));
        }
        if self.mc_trials == 0 {
            return bad("mc_trials must be at least 1".into());
        }
        if self.resamples < 2 || self.indirect_repetitions == 0 || self.indirect_sample_size < 2 {
            return bad(
                "resamples >= 2, indirect_repetitions >= 1 and indirect_sample_size >= 2 required"
                    .into(),
            );
        }
        self.estimation().validate()?;
        self.convergence().validate()?;
        self.noise_search().validate()?;
        self.cohort_spec(false).validate()?;
        Ok(())
    }

    pub fn estimation(&self) -> EstimationSettings {
        EstimationSettings {
            confidence_level: self.confidence_level,
            variance_floor: self.variance_floor,
            scale: RatingScale::FIVE_STAR,
        }
    }

    pub fn convergence(&self) -> ConvergenceSettings {
        ConvergenceSettings {
            n_grid: self.convergence_grid.clone(),
            threshold: self.convergence_threshold,
            candidates: self.candidates,
            mc_trials: self.mc_trials,
            estimation: self.estimation(),
        }
    }

    pub fn noise_search(&self) -> NoiseSearchSettings {
        NoiseSearchSettings {
            p_grid: self.noise_grid.clone(),
            distortion_seeds: self.distortion_seeds,
            mc_trials: self.mc_trials,
            epsilon: self.epsilon,
        }
    }

    /// Cohort for synthesis; `pdf` selects the pdf-rating noise population.
    pub fn cohort_spec(&self, pdf: bool) -> CohortSpec {
        let c = &self.cohort;
        let noise = if pdf {
            c.pdf_noise.unwrap_or(c.noise)
        } else {
            c.noise
        };
        CohortSpec {
            n_users: c.users,
            n_items: c.items,
            trials_per_pair: c.trials_per_pair,
            item_base_means: c
                .item_base_means
                .clone()
                .unwrap_or_else(|| evenly_spaced_means(c.items)),
            mean_jitter: c.mean_jitter,
            noise,
            variance_floor: self.variance_floor,
            seed: self.seed,
        }
    }
}
