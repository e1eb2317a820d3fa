//! Extreme RMSE pictures reachable under parameter uncertainty.
//!
//! Every pair's (μ, σ) is only known up to its confidence intervals. Candidate
//! configurations are drawn from those intervals; the one where the
//! predictors' RMSE distributions separate best and the one where they overlap
//! most are then simulated in full.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::histogram::HistogramGrid;
use super::metric::{overlap, MetricDistribution, RmseModel};
use super::predictor::Predictor;
use crate::error::{invalid, Result};
use crate::estimation::{sample_parameters, FittedRating};
use crate::gaussian::normal_overlap;
use crate::rating::{PairKey, RatingDistribution};
use crate::seed::{tags, SeedStream};

pub const DEFAULT_CANDIDATES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorderlineCases {
    /// One distribution per predictor, in input order.
    pub best: Vec<MetricDistribution>,
    pub worst: Vec<MetricDistribution>,
    /// Mean pairwise histogram overlap of the simulated cases.
    pub best_overlap: f64,
    pub worst_overlap: f64,
    pub best_candidate: usize,
    pub worst_candidate: usize,
    /// Screening score (approximate mean pairwise overlap) of every candidate.
    pub candidate_scores: Vec<f64>,
}

pub(crate) fn draw_configuration(
    fits: &BTreeMap<PairKey, FittedRating>,
    stream: SeedStream,
) -> BTreeMap<PairKey, RatingDistribution> {
    let mut rng = stream.rng();
    fits.iter()
        .map(|(k, f)| (k.clone(), sample_parameters(f, &mut rng)))
        .collect()
}

/// Mean overlap over all unordered pairs; 1 for fewer than two distributions.
pub fn mean_pairwise_overlap(dists: &[MetricDistribution]) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..dists.len() {
        for j in i + 1..dists.len() {
            sum += overlap(&dists[i], &dists[j])?;
            count += 1;
        }
    }
    Ok(if count == 0 { 1.0 } else { sum / count as f64 })
}

fn approximate_overlap(models: &[RmseModel]) -> f64 {
    let approx: Vec<(f64, f64)> = models
        .iter()
        .map(|m| {
            let (mean, sd) = m.normal_approximation();
            (mean, sd.max(1e-12))
        })
        .collect();
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..approx.len() {
        for j in i + 1..approx.len() {
            sum += normal_overlap(approx[i].0, approx[i].1, approx[j].0, approx[j].1);
            count += 1;
        }
    }
    sum / count as f64
}

/// Draws `candidates` parameter configurations, scores each by the mean
/// pairwise overlap of the predictors' RMSE distributions (normal
/// approximation from exact RMSE² moments), and simulates the least and most
/// overlapping configurations with `mc_trials` draws each.
pub fn borderline_cases(
    predictors: &[Predictor],
    fits: &BTreeMap<PairKey, FittedRating>,
    candidates: usize,
    mc_trials: usize,
    seed: SeedStream,
) -> Result<BorderlineCases> {
    if predictors.len() < 2 {
        return Err(invalid("borderline cases compare at least two predictors"));
    }
    if candidates < 2 {
        return Err(invalid(format!(
            "need at least two candidate configurations, got {candidates}"
        )));
    }
    if mc_trials == 0 {
        return Err(invalid("at least one Monte-Carlo trial is required"));
    }
    let candidate_stream = seed.derive(tags::CANDIDATE);
    let scores: Vec<f64> = (0..candidates)
        .into_par_iter()
        .map(|m| {
            let config = draw_configuration(fits, candidate_stream.derive(m as u64));
            let models = predictors
                .iter()
                .map(|p| RmseModel::new(p, &config))
                .collect::<Result<Vec<_>>>()?;
            Ok(approximate_overlap(&models))
        })
        .collect::<Result<_>>()?;

    let best_candidate = argext(&scores, |a, b| a < b);
    let worst_candidate = argext(&scores, |a, b| a > b);

    // Both cases share MC seeds, so identical configurations give identical results.
    let simulate = |m: usize| -> Result<Vec<MetricDistribution>> {
        let config = draw_configuration(fits, candidate_stream.derive(m as u64));
        predictors
            .iter()
            .enumerate()
            .map(|(j, p)| {
                RmseModel::new(p, &config)?.metric_distribution(
                    p.label.clone(),
                    mc_trials,
                    seed.derive2(tags::BORDERLINE_MC, j as u64),
                    HistogramGrid::RMSE,
                )
            })
            .collect()
    };
    let best = simulate(best_candidate)?;
    let worst = simulate(worst_candidate)?;
    Ok(BorderlineCases {
        best_overlap: mean_pairwise_overlap(&best)?,
        worst_overlap: mean_pairwise_overlap(&worst)?,
        best,
        worst,
        best_candidate,
        worst_candidate,
        candidate_scores: scores,
    })
}

/// Index of the first extreme element under `better`.
pub(crate) fn argext(values: &[f64], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut idx = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if better(v, values[idx]) {
            idx = i;
        }
    }
    idx
}
