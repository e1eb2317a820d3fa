//! How many ratings per pair until measurement uncertainty stops mattering.
//!
//! Point estimates stay frozen while the sample size behind their confidence
//! intervals is increased artificially. At each size the configurations with
//! the smallest and largest expected RMSE are simulated and their histogram
//! overlap measured.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::borderline::{argext, draw_configuration, DEFAULT_CANDIDATES};
use super::histogram::HistogramGrid;
use super::metric::{overlap, RmseModel};
use super::predictor::Predictor;
use crate::error::{invalid, Result};
use crate::estimation::{EstimationSettings, FittedRating};
use crate::rating::PairKey;
use crate::seed::{tags, SeedStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvergenceSettings {
    /// Artificial sample sizes, ascending.
    pub n_grid: Vec<usize>,
    pub threshold: f64,
    pub candidates: usize,
    pub mc_trials: usize,
    pub estimation: EstimationSettings,
}

impl ConvergenceSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid(
                "sample-size grid must be non-empty and strictly ascending",
            ));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(invalid(format!(
                "threshold must lie in (0,1), got {}",
                self.threshold
            )));
        }
        if self.candidates < 2 || self.mc_trials == 0 {
            return Err(invalid(
                "need at least two candidates and one Monte-Carlo trial",
            ));
        }
        self.estimation.validate()
    }
}

impl Default for ConvergenceSettings {
    fn default() -> Self {
        Self {
            n_grid: vec![5, 10, 20, 40, 80, 160, 320, 640, 1280, 2560, 5120],
            threshold: 0.9,
            candidates: DEFAULT_CANDIDATES,
            mc_trials: 100_000,
            estimation: EstimationSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    /// Overlap of the minimum- and maximum-RMSE distributions.
    pub overlap: f64,
    pub min_rmse_mean: f64,
    pub max_rmse_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub threshold: f64,
    pub rows: Vec<ConvergenceRow>,
    /// First sample size whose overlap exceeds the threshold; `None` if the grid tops out first.
    pub crossing: Option<usize>,
}

impl ConvergenceReport {
    pub fn converged(&self) -> bool {
        self.crossing.is_some()
    }
}

pub fn convergence_analysis(
    fits: &BTreeMap<PairKey, FittedRating>,
    predictor: &Predictor,
    settings: &ConvergenceSettings,
    seed: SeedStream,
) -> Result<ConvergenceReport> {
    settings.validate()?;

    let stream = seed.derive(tags::CONVERGENCE);
    let mut rows = Vec::with_capacity(settings.n_grid.len());
    for (g, &n) in settings.n_grid.iter().enumerate() {
        let refit: BTreeMap<PairKey, FittedRating> = fits
            .iter()
            .map(|(k, f)| Ok((k.clone(), f.at_sample_size(n, &settings.estimation)?)))
            .collect::<Result<_>>()?;
        let grid_stream = stream.derive(g as u64);
        let expected: Vec<f64> = (0..settings.candidates)
            .into_par_iter()
            .map(|m| {
                let config =
                    draw_configuration(&refit, grid_stream.derive2(tags::CANDIDATE, m as u64));
                Ok(RmseModel::new(predictor, &config)?.squared_moments().0)
            })
            .collect::<Result<_>>()?;
        let lo = argext(&expected, |a, b| a < b);
        let hi = argext(&expected, |a, b| a > b);
        // Common random numbers for both extremes.
        let mc_seed = grid_stream.derive(tags::BORDERLINE_MC);
        let simulate = |m: usize| {
            let config = draw_configuration(&refit, grid_stream.derive2(tags::CANDIDATE, m as u64));
            RmseModel::new(predictor, &config)?.metric_distribution(
                predictor.label.clone(),
                settings.mc_trials,
                mc_seed,
                HistogramGrid::RMSE,
            )
        };
        let (min_rmse, max_rmse) = (simulate(lo)?, simulate(hi)?);
        rows.push(ConvergenceRow {
            n,
            overlap: overlap(&min_rmse, &max_rmse)?,
            min_rmse_mean: min_rmse.summary.mean,
            max_rmse_mean: max_rmse.summary.mean,
        });
    }
    let crossing = rows
        .iter()
        .find(|r| r.overlap > settings.threshold)
        .map(|r| r.n);
    Ok(ConvergenceReport {
        threshold: settings.threshold,
        rows,
        crossing,
    })
}
