//! Synthetic cohorts standing in for a human re-rating study.
//!
//! Every (user, item) pair gets a latent `N(μ, σ)`: μ is jittered around the
//! item's base mean and σ comes from a configurable noise population. The
//! same latent cohort yields both a re-rating and a pdf-rating dataset.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rating::{PairKey, PdfRating, RatingScale, ReRatingSample, MAX_CONFIDENCE};
use crate::seed::{tags, SeedStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NoiseFamilySpec {
    Gaussian {
        mean: f64,
        std: f64,
    },
    /// Density `∝ x^(−exponent)` above `x_min`.
    PowerLaw {
        exponent: f64,
        x_min: f64,
    },
}

impl NoiseFamilySpec {
    pub const GAUSSIAN_DEFAULT: NoiseFamilySpec = NoiseFamilySpec::Gaussian {
        mean: 1.3,
        std: 0.3,
    };
    pub const POWER_LAW_DEFAULT: NoiseFamilySpec = NoiseFamilySpec::PowerLaw {
        exponent: 2.5,
        x_min: 0.2,
    };

    fn validate(&self) -> Result<()> {
        match *self {
            NoiseFamilySpec::Gaussian { mean, std } => {
                if !(mean.is_finite() && std >= 0.0 && std.is_finite()) {
                    return Err(invalid(format!("bad gaussian noise ({mean}, {std})")));
                }
            }
            NoiseFamilySpec::PowerLaw { exponent, x_min } => {
                if !(exponent > 1.0 && exponent.is_finite() && x_min > 0.0 && x_min.is_finite()) {
                    return Err(invalid(format!(
                        "bad power-law noise (a={exponent}, x_min={x_min})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseFamilySpec::Gaussian { mean, std } => {
                if std == 0.0 {
                    mean
                } else {
                    Normal::new(mean, std).expect("validated").sample(rng)
                }
            }
            NoiseFamilySpec::PowerLaw { exponent, x_min } => {
                let u: f64 = rng.random();
                x_min * (1.0 - u).powf(-1.0 / (exponent - 1.0))
            }
        }
    }
}

impl Default for NoiseFamilySpec {
    fn default() -> Self {
        Self::POWER_LAW_DEFAULT
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortSpec {
    pub n_users: usize,
    pub n_items: usize,
    pub trials_per_pair: usize,
    /// One per item, within the scale.
    pub item_base_means: Vec<f64>,
    /// Half-width of the uniform jitter of μ around the base mean.
    pub mean_jitter: f64,
    pub noise: NoiseFamilySpec,
    pub variance_floor: f64,
    pub seed: u64,
}

impl Default for CohortSpec {
    fn default() -> Self {
        Self {
            n_users: 67,
            n_items: 5,
            trials_per_pair: 5,
            item_base_means: evenly_spaced_means(5),
            mean_jitter: 0.5,
            noise: NoiseFamilySpec::default(),
            variance_floor: 0.1,
            seed: 0,
        }
    }
}

/// `n` base means spread evenly over [2, 4.5].
pub fn evenly_spaced_means(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![3.25],
        _ => (0..n)
            .map(|i| 2.0 + 2.5 * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

impl CohortSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.n_items == 0 || self.trials_per_pair == 0 {
            return Err(invalid("cohort needs at least one user, item and trial"));
        }
        if self.item_base_means.len() != self.n_items {
            return Err(invalid(format!(
                "{} base means for {} items",
                self.item_base_means.len(),
                self.n_items
            )));
        }
        if let Some(m) = self
            .item_base_means
            .iter()
            .find(|m| !(1.0..=5.0).contains(*m))
        {
            return Err(invalid(format!("base mean {m} outside the scale")));
        }
        if !(self.mean_jitter >= 0.0 && self.mean_jitter.is_finite()) {
            return Err(invalid(format!(
                "mean jitter must be non-negative, got {}",
                self.mean_jitter
            )));
        }
        if !(self.variance_floor > 0.0 && self.variance_floor.is_finite()) {
            return Err(invalid(format!(
                "variance floor must be positive, got {}",
                self.variance_floor
            )));
        }
        self.noise.validate()
    }

    pub fn user_id(u: usize) -> String {
        format!("u{u:03}")
    }

    pub fn item_id(i: usize) -> String {
        format!("i{i:02}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentPair {
    pub key: PairKey,
    pub mu: f64,
    pub sigma: f64,
}

/// Latent parameters in user-major order. μ and σ use separate streams, so
/// swapping the noise family leaves every μ unchanged.
pub fn latent_cohort(spec: &CohortSpec) -> Result<Vec<LatentPair>> {
    spec.validate()?;
    let master = SeedStream::new(spec.seed);
    let mut out = Vec::with_capacity(spec.n_users * spec.n_items);
    for u in 0..spec.n_users {
        for (i, &base) in spec.item_base_means.iter().enumerate() {
            let idx = (u * spec.n_items + i) as u64;
            let mut mu_rng = master.derive2(tags::LATENT_MU, idx).rng();
            let jitter = if spec.mean_jitter > 0.0 {
                mu_rng.random_range(-spec.mean_jitter..=spec.mean_jitter)
            } else {
                0.0
            };
            let mut sigma_rng = master.derive2(tags::LATENT_SIGMA, idx).rng();
            out.push(LatentPair {
                key: PairKey::new(CohortSpec::user_id(u), CohortSpec::item_id(i)),
                mu: (base + jitter).clamp(1.0, 5.0),
                sigma: spec.noise.sample(&mut sigma_rng).max(spec.variance_floor),
            });
        }
    }
    Ok(out)
}

pub fn generate_rerating(spec: &CohortSpec) -> Result<Vec<ReRatingSample>> {
    let scale = RatingScale::FIVE_STAR;
    let master = SeedStream::new(spec.seed);
    latent_cohort(spec)?
        .into_iter()
        .enumerate()
        .map(|(idx, lp)| {
            let mut rng = master.derive2(tags::TRIALS, idx as u64).rng();
            let normal = Normal::new(lp.mu, lp.sigma).expect("positive sigma");
            let trials = (0..spec.trials_per_pair)
                .map(|_| discretize(normal.sample(&mut rng), scale))
                .collect();
            ReRatingSample::new(lp.key, trials, scale)
        })
        .collect()
}

/// Round to the nearest category, clamp to the scale.
fn discretize(x: f64, scale: RatingScale) -> u8 {
    x.round()
        .clamp(f64::from(scale.min()), f64::from(scale.max())) as u8
}

/// Weights proportional to the latent density at each category, scaled so
/// the largest is [`MAX_CONFIDENCE`].
pub fn pdf_weights(mu: f64, sigma: f64, scale: RatingScale) -> Vec<u8> {
    let sq: Vec<f64> = scale
        .categories()
        .map(|c| (f64::from(c) - mu).powi(2))
        .collect();
    let min = sq.iter().copied().fold(f64::INFINITY, f64::min);
    let max_w = f64::from(MAX_CONFIDENCE);
    sq.iter()
        .map(|s| (max_w * (-(s - min) / (2.0 * sigma * sigma)).exp()).round() as u8)
        .collect()
}

pub fn generate_pdfrating(spec: &CohortSpec) -> Result<Vec<PdfRating>> {
    let scale = RatingScale::FIVE_STAR;
    latent_cohort(spec)?
        .into_iter()
        .map(|lp| PdfRating::new(lp.key, pdf_weights(lp.mu, lp.sigma, scale), scale))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::{fit_gaussian_mle, EstimationSettings};
    use crate::rating::tau_transform;

    fn constant_fraction(samples: &[ReRatingSample]) -> f64 {
        samples.iter().filter(|s| s.is_constant()).count() as f64 / samples.len() as f64
    }

    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn default_cohort_shape() {
        let spec = CohortSpec::default();
        let data = generate_rerating(&spec).unwrap();
        assert_eq!(data.len(), 67 * 5);
        assert!(data.iter().all(|s| s.len() == 5));
        assert_eq!(data[0].key(), &PairKey::new("u000", "i00"));
        let f = constant_fraction(&data);
        assert!((0.05..=0.45).contains(&f), "{f}");
    }

    #[test]
    fn near_zero_noise_gives_constant_raters() {
        let spec = CohortSpec {
            noise: NoiseFamilySpec::Gaussian {
                mean: 0.0,
                std: 0.0,
            },
            variance_floor: 0.01,
            ..Default::default()
        };
        assert!(constant_fraction(&generate_rerating(&spec).unwrap()) >= 0.95);
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = CohortSpec {
            seed: 11,
            ..Default::default()
        };
        assert_eq!(
            generate_rerating(&spec).unwrap(),
            generate_rerating(&spec).unwrap()
        );
        assert_eq!(
            generate_pdfrating(&spec).unwrap(),
            generate_pdfrating(&spec).unwrap()
        );
        let other = CohortSpec {
            seed: 12,
            ..Default::default()
        };
        assert_ne!(
            generate_rerating(&spec).unwrap(),
            generate_rerating(&other).unwrap()
        );
    }

    #[test]
    fn noise_family_does_not_move_means() {
        let a = latent_cohort(&CohortSpec::default()).unwrap();
        let b = latent_cohort(&CohortSpec {
            noise: NoiseFamilySpec::GAUSSIAN_DEFAULT,
            ..Default::default()
        })
        .unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.mu == y.mu));
    }

    #[test]
    fn pdf_weight_shapes() {
        assert_eq!(
            pdf_weights(3.0, 0.3, RatingScale::FIVE_STAR),
            vec![0, 0, 5, 0, 0]
        );
        assert_eq!(
            pdf_weights(3.0, 10.0, RatingScale::FIVE_STAR),
            vec![5, 5, 5, 5, 5]
        );
        for r in generate_pdfrating(&CohortSpec::default()).unwrap() {
            assert!(r.weights().iter().all(|&w| w <= 5));
            assert!(r.weights().contains(&5));
        }
    }

    #[test]
    fn pdf_spread_tracks_latent_sigma() {
        let spec = CohortSpec {
            n_users: 100,
            seed: 3,
            ..Default::default()
        };
        let latent = latent_cohort(&spec).unwrap();
        let pdf = generate_pdfrating(&spec).unwrap();
        assert_eq!(pdf.len(), 500);
        let settings = EstimationSettings::default();
        let fitted: Vec<f64> = pdf
            .iter()
            .map(|r| {
                fit_gaussian_mle(&tau_transform(r), &settings)
                    .unwrap()
                    .raw_sigma
            })
            .collect();
        let truth: Vec<f64> = latent.iter().map(|l| l.sigma).collect();
        let rho = pearson(&ranks(&fitted), &ranks(&truth));
        assert!(rho > 0.5, "{rho}");
    }

    #[test]
    fn large_samples_recover_item_means() {
        let spec = CohortSpec {
            trials_per_pair: 100,
            seed: 4,
            ..Default::default()
        };
        let data = generate_rerating(&spec).unwrap();
        let settings = EstimationSettings::default();
        let mut per_item = vec![Vec::new(); spec.n_items];
        for s in &data {
            let i: usize = s.key().item[1..].parse().unwrap();
            per_item[i].push(fit_gaussian_mle(s, &settings).unwrap().distribution.mu);
        }
        let err: f64 = per_item
            .iter()
            .zip(&spec.item_base_means)
            .map(|(mus, base)| (mus.iter().sum::<f64>() / mus.len() as f64 - base).abs())
            .sum::<f64>()
            / spec.n_items as f64;
        assert!(err < 0.2, "{err}");
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(latent_cohort(&CohortSpec {
            n_users: 0,
            ..Default::default()
        })
        .is_err());
        assert!(latent_cohort(&CohortSpec {
            item_base_means: vec![3.0],
            ..Default::default()
        })
        .is_err());
        assert!(latent_cohort(&CohortSpec {
            noise: NoiseFamilySpec::PowerLaw {
                exponent: 1.0,
                x_min: 0.2
            },
            ..Default::default()
        })
        .is_err());
    }
}
