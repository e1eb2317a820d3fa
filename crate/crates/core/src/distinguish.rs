//! Ranking-error probability between competing metric distributions and the
//! smallest quality difference that survives human uncertainty.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gaussian::std_normal_cdf;
use crate::propagation::{predictor_family, MetricDistribution, Predictor, RmseModel};
use crate::rating::{PairKey, RatingDistribution, ReRatingSample};
use crate::seed::{tags, SeedStream};

pub const DEFAULT_EPSILON: f64 = 0.05;
pub const MIN_DISTORTION_SEEDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorMethod {
    Analytic,
    Empirical,
}

/// `p_error` is the probability that ranking `ranking.0` above `ranking.1` is wrong.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingErrorReport {
    pub p_error: f64,
    pub method: ErrorMethod,
    pub ranking: (String, String),
}

/// Fraction of index-paired draws with `a[i] > b[i]`; ties count one half.
pub fn error_probability_draws(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::EmptySample);
    }
    let score: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            if x > y {
                1.0
            } else if x == y {
                0.5
            } else {
                0.0
            }
        })
        .sum();
    Ok(score / a.len() as f64)
}

/// Empirical `P(R_a > R_b)` for the ranking "a better than b". Both
/// distributions must come from independent seeds with equal draw counts.
pub fn error_probability_empirical(
    a: &MetricDistribution,
    b: &MetricDistribution,
) -> Result<RankingErrorReport> {
    Ok(RankingErrorReport {
        p_error: error_probability_draws(&a.draws, &b.draws)?,
        method: ErrorMethod::Empirical,
        ranking: (a.label.clone(), b.label.clone()),
    })
}

/// `Φ((μ_a − μ_b) / √(σ_a² + σ_b²))`.
pub fn error_probability_gaussian(mu_a: f64, sigma_a: f64, mu_b: f64, sigma_b: f64) -> f64 {
    let scale = (sigma_a * sigma_a + sigma_b * sigma_b).sqrt();
    let diff = mu_a - mu_b;
    if scale == 0.0 {
        return if diff > 0.0 {
            1.0
        } else if diff < 0.0 {
            0.0
        } else {
            0.5
        };
    }
    std_normal_cdf(diff / scale)
}

/// Mean over all trials per pair.
pub fn optimal_predictor(cohort: &[ReRatingSample]) -> Result<Predictor> {
    if cohort.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut p = predictor_family(cohort, 1)?;
    p.label = "optimal".into();
    Ok(p)
}

/// Resamples every prediction uniformly from `[(1−p)π, (1+p)π]`.
pub fn distort_predictor<R: Rng + ?Sized>(
    predictor: &Predictor,
    noise_fraction: f64,
    rng: &mut R,
) -> Result<Predictor> {
    if !(noise_fraction >= 0.0 && noise_fraction.is_finite()) {
        return Err(invalid(format!(
            "noise fraction must be non-negative, got {noise_fraction}"
        )));
    }
    let values = predictor
        .values
        .iter()
        .map(|(k, &pi)| {
            let u: f64 = rng.random();
            (
                k.clone(),
                pi * (1.0 - noise_fraction + 2.0 * noise_fraction * u),
            )
        })
        .collect();
    Ok(Predictor::new(
        format!("{}+{noise_fraction}", predictor.label),
        values,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSearchSettings {
    /// Ascending, starting at 0.
    pub p_grid: Vec<f64>,
    pub distortion_seeds: usize,
    pub mc_trials: usize,
    pub epsilon: f64,
}

impl Default for NoiseSearchSettings {
    fn default() -> Self {
        Self {
            p_grid: (0..=50).map(|i| f64::from(i) / 100.0).collect(),
            distortion_seeds: MIN_DISTORTION_SEEDS,
            mc_trials: 10_000,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl NoiseSearchSettings {
    pub fn validate(&self) -> Result<()> {
        if self.p_grid.first() != Some(&0.0) {
            return Err(invalid("noise grid must start at 0"));
        }
        if self.p_grid.iter().any(|p| !p.is_finite())
            || self.p_grid.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(invalid("noise grid must be strictly ascending"));
        }
        if self.distortion_seeds < MIN_DISTORTION_SEEDS {
            return Err(invalid(format!(
                "at least {MIN_DISTORTION_SEEDS} distortion seeds per grid point, got {}",
                self.distortion_seeds
            )));
        }
        if self.mc_trials == 0 {
            return Err(invalid("at least one Monte-Carlo trial is required"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(invalid(format!(
                "epsilon must lie in (0,1), got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseCurvePoint {
    pub p: f64,
    /// Mean over distortion seeds.
    pub p_error: f64,
    /// Spread across distortion seeds.
    pub p_error_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinDetectableNoise {
    pub epsilon: f64,
    pub points: Vec<NoiseCurvePoint>,
    /// First grid point with `p_error < epsilon`; `None` if never reached.
    pub crossing: Option<f64>,
}

/// P_ε of ranking the optimal predictor above a distorted copy of itself, over
/// a grid of distortion strengths.
pub fn min_detectable_noise(
    distributions: &BTreeMap<PairKey, RatingDistribution>,
    optimal: &Predictor,
    settings: &NoiseSearchSettings,
    seed: SeedStream,
) -> Result<MinDetectableNoise> {
    settings.validate()?;
    let optimal_draws = RmseModel::new(optimal, distributions)?
        .draws(settings.mc_trials, seed.derive(tags::OPTIMAL_MC));

    let seeds = settings.distortion_seeds;
    let jobs: Vec<(usize, usize)> = (0..settings.p_grid.len())
        .flat_map(|g| (0..seeds).map(move |j| (g, j)))
        .collect();
    let errors: Vec<f64> = jobs
        .into_par_iter()
        .map(|(g, j)| {
            let mut rng = seed
                .derive2(tags::DISTORTION, g as u64)
                .derive(j as u64)
                .rng();
            let distorted = distort_predictor(optimal, settings.p_grid[g], &mut rng)?;
            let draws = RmseModel::new(&distorted, distributions)?.draws(
                settings.mc_trials,
                seed.derive2(tags::DISTORTED_MC, g as u64).derive(j as u64),
            );
            error_probability_draws(&optimal_draws, &draws)
        })
        .collect::<Result<_>>()?;

    let points: Vec<NoiseCurvePoint> = settings
        .p_grid
        .iter()
        .zip(errors.chunks(seeds))
        .map(|(&p, chunk)| {
            let mean = chunk.iter().sum::<f64>() / seeds as f64;
            let var = chunk.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (seeds - 1) as f64;
            NoiseCurvePoint {
                p,
                p_error: mean,
                p_error_std: var.sqrt(),
            }
        })
        .collect();
    let crossing = points
        .iter()
        .find(|pt| pt.p_error < settings.epsilon)
        .map(|pt| pt.p);
    Ok(MinDetectableNoise {
        epsilon: settings.epsilon,
        points,
        crossing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::HistogramGrid;
    use crate::rating::RatingScale;
    use crate::stats::ks_distance_to_cdf;

    fn gaussian_draws(mu: f64, sd: f64, n: usize, seed: u64) -> Vec<f64> {
        let d = RatingDistribution::new(mu, sd, 1).unwrap();
        let mut rng = SeedStream::new(seed).rng();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn analytic_reference_values() {
        assert_eq!(error_probability_gaussian(1.0, 0.2, 1.0, 0.2), 0.5);
        let s = (0.3f64 * 0.3 + 0.4 * 0.4).sqrt();
        let p = error_probability_gaussian(1.0 - 3.0 * s, 0.3, 1.0, 0.4);
        assert!((p - 0.0013498980316301).abs() < 1e-9);
        let p = error_probability_gaussian(0.9, 0.05, 1.0, 0.05);
        assert!((p - 0.07864960352514258).abs() < 1e-9);
    }

    #[test]
    fn empirical_matches_analytic() {
        let a = MetricDistribution::new(
            "a",
            gaussian_draws(0.9, 0.05, 1_000_000, 1),
            HistogramGrid::RMSE,
        );
        let b = MetricDistribution::new(
            "b",
            gaussian_draws(1.0, 0.05, 1_000_000, 2),
            HistogramGrid::RMSE,
        );
        let r = error_probability_empirical(&a, &b).unwrap();
        assert_eq!(r.ranking, ("a".to_string(), "b".to_string()));
        assert_eq!(r.method, ErrorMethod::Empirical);
        assert!((r.p_error - 0.0786).abs() < 0.005, "{}", r.p_error);
        let back = error_probability_empirical(&b, &a).unwrap();
        assert!((r.p_error + back.p_error - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_mismatched_inputs() {
        assert_eq!(
            error_probability_draws(&[0.8; 10], &[1.0; 10]).unwrap(),
            0.0
        );
        assert_eq!(
            error_probability_draws(&[1.0; 10], &[1.0; 10]).unwrap(),
            0.5
        );
        assert!(matches!(
            error_probability_draws(&[1.0; 3], &[1.0; 4]),
            Err(Error::LengthMismatch(3, 4))
        ));
    }

    #[test]
    fn translation_invariance() {
        let a = gaussian_draws(1.0, 0.1, 10_000, 3);
        let b = gaussian_draws(1.05, 0.1, 10_000, 4);
        let shift = |v: &[f64]| v.iter().map(|x| x + 7.0).collect::<Vec<_>>();
        assert_eq!(
            error_probability_draws(&a, &b).unwrap(),
            error_probability_draws(&shift(&a), &shift(&b)).unwrap()
        );
    }

    #[test]
    fn optimal_predictor_is_trial_mean() {
        let s = ReRatingSample::new(PairKey::new("u", "i"), vec![1, 5], RatingScale::FIVE_STAR)
            .unwrap();
        let p = optimal_predictor(std::slice::from_ref(&s)).unwrap();
        assert_eq!(p.get(s.key()).unwrap(), 3.0);
        assert_eq!(p.values, predictor_family(&[s], 1).unwrap().values);
        assert!(optimal_predictor(&[]).is_err());
    }

    #[test]
    fn mean_minimizes_expected_squared_error() {
        // E[(π − X)²] = σ² + (π − μ)² for X ~ N(μ, σ).
        let d = RatingDistribution::new(3.2, 0.7, 5).unwrap();
        let mut rng = SeedStream::new(5).rng();
        let xs: Vec<f64> = (0..200_000).map(|_| d.sample(&mut rng)).collect();
        let mse = |pi: f64| xs.iter().map(|x| (pi - x).powi(2)).sum::<f64>() / xs.len() as f64;
        let best = (0..=40)
            .map(|i| 2.2 + f64::from(i) * 0.05)
            .min_by(|a, b| mse(*a).total_cmp(&mse(*b)))
            .unwrap();
        assert!((best - 3.2).abs() < 0.051);
    }

    #[test]
    fn distortion_bounds_and_uniformity() {
        let key = PairKey::new("u", "i");
        let p = Predictor::new("opt", BTreeMap::from([(key.clone(), 4.0)]));
        let mut rng = SeedStream::new(6).rng();
        assert_eq!(
            distort_predictor(&p, 0.0, &mut rng).unwrap().values,
            p.values
        );
        assert!(distort_predictor(&p, -0.1, &mut rng).is_err());
        let ratios: Vec<f64> = (0..100_000)
            .map(|_| {
                let v = distort_predictor(&p, 0.25, &mut rng)
                    .unwrap()
                    .get(&key)
                    .unwrap();
                assert!((3.0..=5.0).contains(&v));
                v / 4.0
            })
            .collect();
        let d = ks_distance_to_cdf(&ratios, |x| ((x - 0.75) / 0.5).clamp(0.0, 1.0));
        // Asymptotic 5% critical value 1.358/√n.
        assert!(d < 1.358 / (ratios.len() as f64).sqrt(), "{d}");
    }

    fn toy_cohort(sigma: f64) -> (BTreeMap<PairKey, RatingDistribution>, Predictor) {
        let mut dists = BTreeMap::new();
        let mut values = BTreeMap::new();
        for u in 0..100 {
            let key = PairKey::new(format!("u{u}"), "i");
            let mu = 1.5 + f64::from(u % 7) * 0.5;
            dists.insert(key.clone(), RatingDistribution::new(mu, sigma, 5).unwrap());
            values.insert(key, mu);
        }
        (dists, Predictor::new("optimal", values))
    }

    #[test]
    fn curve_starts_at_half_and_decreases() {
        let (dists, opt) = toy_cohort(0.5);
        let settings = NoiseSearchSettings {
            p_grid: (0..=20).map(|i| f64::from(i) / 40.0).collect(),
            mc_trials: 4_000,
            ..Default::default()
        };
        let r = min_detectable_noise(&dists, &opt, &settings, SeedStream::new(7)).unwrap();
        assert!((r.points[0].p_error - 0.5).abs() < 0.02);
        for w in r.points.windows(2) {
            assert!(w[1].p_error <= w[0].p_error + 0.02);
        }
        assert!(r.crossing.is_some());
        let again = min_detectable_noise(&dists, &opt, &settings, SeedStream::new(7)).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn larger_uncertainty_widens_the_barrier() {
        let settings = NoiseSearchSettings {
            mc_trials: 4_000,
            ..Default::default()
        };
        let (d1, opt) = toy_cohort(0.4);
        let (d2, _) = toy_cohort(0.8);
        let a = min_detectable_noise(&d1, &opt, &settings, SeedStream::new(8)).unwrap();
        let b = min_detectable_noise(&d2, &opt, &settings, SeedStream::new(8)).unwrap();
        assert!(b.crossing.unwrap() > a.crossing.unwrap());
    }

    #[test]
    fn grid_validation() {
        let (d, opt) = toy_cohort(0.5);
        for bad in [
            NoiseSearchSettings {
                p_grid: vec![0.1, 0.2],
                ..Default::default()
            },
            NoiseSearchSettings {
                p_grid: vec![0.0, 0.2, 0.1],
                ..Default::default()
            },
            NoiseSearchSettings {
                distortion_seeds: 3,
                ..Default::default()
            },
        ] {
            assert!(min_detectable_noise(&d, &opt, &bad, SeedStream::new(0)).is_err());
        }
    }
}
