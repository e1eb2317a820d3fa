use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::histogram::{Histogram, HistogramGrid};
use super::predictor::Predictor;
use crate::error::{invalid, Error, Result};
use crate::rating::{PairKey, RatingDistribution};
use crate::seed::{tags, SeedStream, SimRng};
use crate::stats::{quantile_sorted, DrawSource};

/// Trials per independently seeded block; fixes the seed layout of every MC run.
const BLOCK_TRIALS: usize = 4096;

pub const SUMMARY_QUANTILES: [f64; 7] = [0.025, 0.05, 0.25, 0.5, 0.75, 0.95, 0.975];

#[derive(Debug, Clone, Copy)]
struct Term {
    residual: f64,
    sigma: f64,
}

/// RMSE of a fixed predictor against Gaussian ratings, one draw per call.
#[derive(Debug, Clone)]
pub struct RmseModel {
    terms: Vec<Term>,
}

impl RmseModel {
    /// Every pair in `distributions` must have a prediction; extra predictions are ignored.
    pub fn new(
        predictor: &Predictor,
        distributions: &BTreeMap<PairKey, RatingDistribution>,
    ) -> Result<Self> {
        if distributions.is_empty() {
            return Err(invalid("RMSE needs at least one rating distribution"));
        }
        let terms = distributions
            .iter()
            .map(|(key, d)| {
                Ok(Term {
                    residual: predictor.get(key)? - d.mu,
                    sigma: d.sigma,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { terms })
    }

    /// Builds the model from `(prediction, mu, sigma)` triples.
    pub fn from_triples(triples: impl IntoIterator<Item = (f64, f64, f64)>) -> Result<Self> {
        let terms: Vec<Term> = triples
            .into_iter()
            .map(|(p, mu, sigma)| Term {
                residual: p - mu,
                sigma,
            })
            .collect();
        if terms.is_empty() {
            return Err(invalid("RMSE needs at least one rating distribution"));
        }
        Ok(Self { terms })
    }

    pub fn pairs(&self) -> usize {
        self.terms.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut sum = 0.0;
        for t in &self.terms {
            let z: f64 = rng.sample(StandardNormal);
            let e = t.residual - t.sigma * z;
            sum += e * e;
        }
        (sum / self.terms.len() as f64).sqrt()
    }

    /// Exact mean and variance of RMSE².
    pub fn squared_moments(&self) -> (f64, f64) {
        let n = self.terms.len() as f64;
        let (mut mean, mut var) = (0.0, 0.0);
        for t in &self.terms {
            let (s2, d2) = (t.sigma * t.sigma, t.residual * t.residual);
            mean += s2 + d2;
            var += 2.0 * s2 * s2 + 4.0 * s2 * d2;
        }
        (mean / n, var / (n * n))
    }

    /// Normal approximation `(mean, sd)` of the RMSE by the delta method on RMSE².
    pub fn normal_approximation(&self) -> (f64, f64) {
        let (m, v) = self.squared_moments();
        let mean = m.sqrt();
        let sd = if mean > 0.0 {
            v.sqrt() / (2.0 * mean)
        } else {
            0.0
        };
        (mean, sd)
    }

    /// `trials` draws. The result depends only on `seed`, never on thread count.
    pub fn draws(&self, trials: usize, seed: SeedStream) -> Vec<f64> {
        let blocks = trials.div_ceil(BLOCK_TRIALS);
        let chunks: Vec<Vec<f64>> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = seed.derive2(tags::MC_BLOCK, b as u64).rng();
                let len = BLOCK_TRIALS.min(trials - b * BLOCK_TRIALS);
                (0..len).map(|_| self.sample(&mut rng)).collect()
            })
            .collect();
        chunks.concat()
    }

    pub fn metric_distribution(
        &self,
        label: impl Into<String>,
        trials: usize,
        seed: SeedStream,
        grid: HistogramGrid,
    ) -> Result<MetricDistribution> {
        if trials == 0 {
            return Err(invalid("at least one Monte-Carlo trial is required"));
        }
        Ok(MetricDistribution::new(
            label,
            self.draws(trials, seed),
            grid,
        ))
    }
}

impl DrawSource for RmseModel {
    fn draw(&self, rng: &mut SimRng) -> f64 {
        self.sample(rng)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    /// `(q, value)` at [`SUMMARY_QUANTILES`].
    pub quantiles: Vec<(f64, f64)>,
}

impl MetricSummary {
    fn of(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            count: n,
            mean,
            std,
            min: sorted[0],
            max: sorted[n - 1],
            quantiles: SUMMARY_QUANTILES
                .iter()
                .map(|&q| (q, quantile_sorted(&sorted, q)))
                .collect(),
        }
    }
}

/// Empirical distribution of a composed metric: raw draws, a histogram on a
/// shared grid and summary statistics. Only summary and histogram serialize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDistribution {
    pub label: String,
    #[serde(skip)]
    pub draws: Vec<f64>,
    pub histogram: Histogram,
    pub summary: MetricSummary,
}

impl MetricDistribution {
    /// Panics if `draws` is empty.
    pub fn new(label: impl Into<String>, draws: Vec<f64>, grid: HistogramGrid) -> Self {
        assert!(!draws.is_empty(), "metric distribution without draws");
        Self {
            label: label.into(),
            histogram: Histogram::from_values(grid, &draws),
            summary: MetricSummary::of(&draws),
            draws,
        }
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }
}

/// RMSE of `predictor` as a random variable: each trial draws one rating per
/// pair from its Gaussian and evaluates `sqrt(Σ (π - R)² / n)`.
pub fn rmse_mc(
    predictor: &Predictor,
    distributions: &BTreeMap<PairKey, RatingDistribution>,
    mc_trials: usize,
    seed: SeedStream,
) -> Result<MetricDistribution> {
    RmseModel::new(predictor, distributions)?.metric_distribution(
        predictor.label.clone(),
        mc_trials,
        seed,
        HistogramGrid::RMSE,
    )
}

/// Intersection area `Σ min(f_a, f_b) · width` of two histograms on the same grid.
pub fn overlap(a: &MetricDistribution, b: &MetricDistribution) -> Result<f64> {
    let (ha, hb) = (&a.histogram, &b.histogram);
    if ha.grid != hb.grid {
        return Err(Error::GridMismatch);
    }
    let (na, nb) = (ha.total() as f64, hb.total() as f64);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::EmptySample);
    }
    let shared = |x: u64, y: u64| (x as f64 / na).min(y as f64 / nb);
    let inside: f64 = ha
        .counts
        .iter()
        .zip(&hb.counts)
        .map(|(&x, &y)| shared(x, y))
        .sum();
    let total = inside + shared(ha.underflow, hb.underflow) + shared(ha.overflow, hb.overflow);
    Ok(total.clamp(0.0, 1.0))
}
