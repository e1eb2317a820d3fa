//! User- and item-specific noise: the spread of fitted standard deviations
//! across the items one user rated, or across the users who rated one item.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::FittedRating;
use crate::gaussian::normal_cdf;
use crate::rating::PairKey;
use crate::stats::{ks_distance_to_cdf, ks_two_sample, levene, welch_t, TestResult};

/// Fewest σ values a population model is fitted to.
pub const MIN_MODEL_VALUES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    /// σ over all items rated by one user.
    UserSpecific,
    /// σ over all users who rated one item.
    ItemSpecific,
}

impl NoiseKind {
    pub fn short_name(self) -> &'static str {
        match self {
            NoiseKind::UserSpecific => "usn",
            NoiseKind::ItemSpecific => "isn",
        }
    }

    fn anchor_of(self, key: &PairKey) -> &str {
        match self {
            NoiseKind::UserSpecific => &key.user,
            NoiseKind::ItemSpecific => &key.item,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseFamily {
    Gaussian,
    PowerLaw,
}

/// Population model for σ values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum NoiseModel {
    Gaussian {
        mean: f64,
        std: f64,
    },
    /// Density `∝ x^-exponent` for `x >= x_min`.
    PowerLaw {
        exponent: f64,
        x_min: f64,
    },
}

impl NoiseModel {
    pub fn family(&self) -> NoiseFamily {
        match self {
            NoiseModel::Gaussian { .. } => NoiseFamily::Gaussian,
            NoiseModel::PowerLaw { .. } => NoiseFamily::PowerLaw,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            NoiseModel::Gaussian { mean, std } => normal_cdf(x, mean, std),
            NoiseModel::PowerLaw { exponent, x_min } => {
                if x < x_min {
                    0.0
                } else {
                    1.0 - (x / x_min).powf(1.0 - exponent)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModelFit {
    pub model: NoiseModel,
    /// One-sample KS distance of the σ values against the fitted CDF.
    pub ks_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaObservation {
    pub key: PairKey,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseDistribution {
    pub kind: NoiseKind,
    pub anchor: String,
    pub sigmas: Vec<SigmaObservation>,
    pub fitted_model: Option<NoiseModelFit>,
}

impl NoiseDistribution {
    pub fn values(&self) -> Vec<f64> {
        self.sigmas.iter().map(|s| s.sigma).collect()
    }

    pub fn len(&self) -> usize {
        self.sigmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigmas.is_empty()
    }
}

/// Collects the σ point estimates of every fit whose user (or item) is `anchor`.
pub fn build_noise<'a>(
    fits: impl IntoIterator<Item = &'a FittedRating>,
    kind: NoiseKind,
    anchor: &str,
) -> Result<NoiseDistribution> {
    let sigmas: Vec<SigmaObservation> = fits
        .into_iter()
        .filter(|f| kind.anchor_of(&f.key) == anchor)
        .map(|f| SigmaObservation {
            key: f.key.clone(),
            sigma: f.distribution.sigma,
        })
        .collect();
    if sigmas.is_empty() {
        return Err(Error::NoMatchingFits {
            kind: kind.short_name(),
            anchor: anchor.to_string(),
        });
    }
    Ok(NoiseDistribution {
        kind,
        anchor: anchor.to_string(),
        sigmas,
        fitted_model: None,
    })
}

/// One noise distribution per distinct anchor, ordered by anchor.
pub fn build_all_noise<'a>(
    fits: impl IntoIterator<Item = &'a FittedRating>,
    kind: NoiseKind,
) -> Vec<NoiseDistribution> {
    let mut groups: BTreeMap<String, Vec<SigmaObservation>> = BTreeMap::new();
    for f in fits {
        groups
            .entry(kind.anchor_of(&f.key).to_string())
            .or_default()
            .push(SigmaObservation {
                key: f.key.clone(),
                sigma: f.distribution.sigma,
            });
    }
    groups
        .into_iter()
        .map(|(anchor, sigmas)| NoiseDistribution {
            kind,
            anchor,
            sigmas,
            fitted_model: None,
        })
        .collect()
}

/// Maximum-likelihood fit of `family` to the σ values.
///
/// The power law fixes `x_min` at the smallest observed σ and estimates
/// `exponent = 1 + n / Σ ln(σ_i / x_min)`.
pub fn fit_noise_model(nd: &NoiseDistribution, family: NoiseFamily) -> Result<NoiseModelFit> {
    let values = nd.values();
    if values.len() < MIN_MODEL_VALUES {
        return Err(Error::TooFewValues {
            need: MIN_MODEL_VALUES,
            got: values.len(),
        });
    }
    let n = values.len() as f64;
    let model = match family {
        NoiseFamily::Gaussian => {
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            NoiseModel::Gaussian {
                mean,
                std: var.sqrt(),
            }
        }
        NoiseFamily::PowerLaw => {
            let x_min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let log_sum: f64 = values.iter().map(|x| (x / x_min).ln()).sum();
            if log_sum <= 0.0 {
                return Err(Error::DegeneratePowerLaw);
            }
            NoiseModel::PowerLaw {
                exponent: 1.0 + n / log_sum,
                x_min,
            }
        }
    };
    Ok(NoiseModelFit {
        model,
        ks_distance: ks_distance_to_cdf(&values, |x| model.cdf(x)),
    })
}

/// Fits both families and keeps the one with the smaller KS distance.
/// A family whose fit is undefined is skipped.
pub fn select_noise_model(nd: &NoiseDistribution) -> Result<NoiseModelFit> {
    let gaussian = fit_noise_model(nd, NoiseFamily::Gaussian)?;
    match fit_noise_model(nd, NoiseFamily::PowerLaw) {
        Ok(power) if power.ks_distance < gaussian.ks_distance => Ok(power),
        Ok(_) | Err(Error::DegeneratePowerLaw) => Ok(gaussian),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseComparison {
    pub ks: TestResult,
    pub welch: TestResult,
    pub levene: TestResult,
}

/// Applies the KS, Welch and Levene tests to two σ samples.
pub fn compare_noise(
    rerating: &NoiseDistribution,
    pdf: &NoiseDistribution,
    alpha: f64,
) -> Result<NoiseComparison> {
    let (a, b) = (rerating.values(), pdf.values());
    Ok(NoiseComparison {
        ks: ks_two_sample(&a, &b, alpha)?,
        welch: welch_t(&a, &b, alpha)?,
        levene: levene(&a, &b, alpha)?,
    })
}

/// Resampled noise distributions: each draws every contributing σ uniformly
/// from its confidence interval.
pub fn resample_noise<R: Rng + ?Sized>(
    fits: &[&FittedRating],
    resamples: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    (0..resamples)
        .map(|_| {
            fits.iter()
                .map(|f| f.sigma_est.sample_uniform(rng))
                .collect()
        })
        .collect()
}
