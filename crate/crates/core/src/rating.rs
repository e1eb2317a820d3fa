//! Rating scales, the two raw measurement formats and the latent rating
//! distribution they are fitted to.
//!
//! A re-rating sample holds repeated ratings of one item by one user. A
//! pdf-rating holds one confidence weight per scale category; [`tau_transform`]
//! expands it into the equivalent frequentist sample so both formats share the
//! same estimation path.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest confidence weight a user can assign to one category.
pub const MAX_CONFIDENCE: u8 = 5;

/// Integer star scale `min..=max` with unit step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RatingScale {
    min: u8,
    max: u8,
}

impl RatingScale {
    pub const FIVE_STAR: RatingScale = RatingScale { min: 1, max: 5 };

    pub fn new(min: u8, max: u8) -> Result<Self> {
        if min >= max {
            return Err(Error::InvalidScale { min, max });
        }
        Ok(Self { min, max })
    }

    pub fn min(&self) -> u8 {
        self.min
    }

    pub fn max(&self) -> u8 {
        self.max
    }

    pub fn categories(&self) -> std::ops::RangeInclusive<u8> {
        self.min..=self.max
    }

    pub fn len(&self) -> usize {
        usize::from(self.max - self.min) + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, value: u8) -> bool {
        (self.min..=self.max).contains(&value)
    }

    /// Position of `value` among the ascending categories.
    pub fn index_of(&self, value: u8) -> Option<usize> {
        self.contains(value).then(|| usize::from(value - self.min))
    }

    /// Largest standard deviation any distribution supported on the scale can have.
    pub fn max_sigma(&self) -> f64 {
        f64::from(self.max - self.min) / 2.0
    }

    pub(crate) fn check(&self, value: u8) -> Result<u8> {
        if self.contains(value) {
            Ok(value)
        } else {
            Err(Error::OutOfScale {
                value,
                min: self.min,
                max: self.max,
            })
        }
    }
}

impl Default for RatingScale {
    fn default() -> Self {
        Self::FIVE_STAR
    }
}

/// A (user, item) pair. Identifiers are opaque.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairKey {
    pub user: String,
    pub item: String,
}

impl PairKey {
    pub fn new(user: impl Into<String>, item: impl Into<String>) -> Self {
        Self {
            user: user.into(),
            item: item.into(),
        }
    }
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.user, self.item)
    }
}

/// Repeated ratings `r_{u,i,1..N}` of one item by one user, in trial order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReRatingSample {
    key: PairKey,
    scale: RatingScale,
    trials: Vec<u8>,
}

impl ReRatingSample {
    pub fn new(key: PairKey, trials: Vec<u8>, scale: RatingScale) -> Result<Self> {
        if trials.is_empty() {
            return Err(Error::EmptySample);
        }
        for &t in &trials {
            scale.check(t)?;
        }
        Ok(Self { key, scale, trials })
    }

    pub fn key(&self) -> &PairKey {
        &self.key
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    pub fn trials(&self) -> &[u8] {
        &self.trials
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.trials.iter().map(|&t| f64::from(t)).collect()
    }

    pub fn is_constant(&self) -> bool {
        self.trials.windows(2).all(|w| w[0] == w[1])
    }

    /// Counts per category in ascending order; they sum to the trial count.
    pub fn histogram(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.scale.len()];
        for &t in &self.trials {
            // Trials were validated at construction.
            counts[usize::from(t - self.scale.min())] += 1;
        }
        counts
    }
}

/// One confidence weight per scale category, entered in a single pass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PdfRating {
    key: PairKey,
    scale: RatingScale,
    weights: Vec<u8>,
}

impl PdfRating {
    /// `weights[j]` is the confidence for the j-th category in ascending order.
    pub fn new(key: PairKey, weights: Vec<u8>, scale: RatingScale) -> Result<Self> {
        if weights.len() != scale.len() {
            return Err(Error::WeightCount {
                expected: scale.len(),
                got: weights.len(),
            });
        }
        for (category, &weight) in scale.categories().zip(&weights) {
            if weight > MAX_CONFIDENCE {
                return Err(Error::InvalidWeight {
                    category,
                    weight,
                    max: MAX_CONFIDENCE,
                });
            }
        }
        if weights.iter().all(|&w| w == 0) {
            return Err(Error::EmptyRating);
        }
        Ok(Self {
            key,
            scale,
            weights,
        })
    }

    pub fn key(&self) -> &PairKey {
        &self.key
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    pub fn weights(&self) -> &[u8] {
        &self.weights
    }

    pub fn weight(&self, category: u8) -> Option<u8> {
        self.scale.index_of(category).map(|i| self.weights[i])
    }

    /// Size of the equivalent frequentist sample.
    pub fn total_weight(&self) -> usize {
        self.weights.iter().map(|&w| usize::from(w)).sum()
    }
}

/// Expands confidence weights into a pseudo-sample holding each category as
/// many times as its weight, categories ascending.
pub fn tau_transform(rating: &PdfRating) -> ReRatingSample {
    let trials: Vec<u8> = rating
        .scale
        .categories()
        .zip(&rating.weights)
        .flat_map(|(category, &w)| std::iter::repeat_n(category, usize::from(w)))
        .collect();
    ReRatingSample {
        key: rating.key.clone(),
        scale: rating.scale,
        trials,
    }
}

/// Gaussian latent response `N(mu, sigma)` on the continuous scale, fitted from
/// `n` observations. The support is the whole real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatingDistribution {
    pub mu: f64,
    pub sigma: f64,
    pub n: usize,
}

impl RatingDistribution {
    pub fn new(mu: f64, sigma: f64, n: usize) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite mean {mu}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "standard deviation must be positive, got {sigma}"
            )));
        }
        Ok(Self { mu, sigma, n })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.mu + self.sigma * z
    }
}
