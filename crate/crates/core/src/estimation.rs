//! Maximum-likelihood Gaussian fits of rating samples and frequentist
//! confidence intervals for their parameters.
//!
//! The mean interval is Student-t, the standard-deviation interval is the
//! chi-square interval built from the unbiased sample deviation. Both are
//! clipped from below by the variance floor so a constant sample still yields
//! a usable, strictly positive spread.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use crate::error::{invalid, Error, Result};
use crate::rating::{PairKey, RatingDistribution, RatingScale, ReRatingSample};

pub const DEFAULT_VARIANCE_FLOOR: f64 = 0.1;
pub const DEFAULT_CONFIDENCE_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimationSettings {
    pub confidence_level: f64,
    /// Lower bound (stars) applied to fitted standard deviations and their intervals.
    pub variance_floor: f64,
    pub scale: RatingScale,
}

impl Default for EstimationSettings {
    fn default() -> Self {
        Self {
            confidence_level: DEFAULT_CONFIDENCE_LEVEL,
            variance_floor: DEFAULT_VARIANCE_FLOOR,
            scale: RatingScale::FIVE_STAR,
        }
    }
}

impl EstimationSettings {
    pub fn validate(&self) -> Result<()> {
        check_level(self.confidence_level)?;
        if !(self.variance_floor > 0.0 && self.variance_floor.is_finite()) {
            return Err(invalid(format!(
                "variance floor must be positive, got {}",
                self.variance_floor
            )));
        }
        Ok(())
    }
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "confidence level must lie in (0,1), got {level}"
        )))
    }
}

/// Point estimate with a confidence interval at `confidence_level`.
///
/// When the sample carries no spread information (a single observation) the
/// interval is the whole admissible range and `informative` is false.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterEstimate {
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence_level: f64,
    pub informative: bool,
}

impl ParameterEstimate {
    pub fn length(&self) -> f64 {
        self.ci_high - self.ci_low
    }

    pub fn contains(&self, x: f64) -> bool {
        self.ci_low <= x && x <= self.ci_high
    }

    fn uninformative(point: f64, low: f64, high: f64, level: f64) -> Self {
        Self {
            point,
            ci_low: low.min(point),
            ci_high: high.max(point),
            confidence_level: level,
            informative: false,
        }
    }

    /// Uniform draw from the interval.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.ci_low + (self.ci_high - self.ci_low) * u
    }
}

/// Sample moments: mean, MLE deviation (divisor N) and unbiased deviation (divisor N-1).
#[derive(Debug, Clone, Copy)]
struct Moments {
    n: usize,
    mean: f64,
    mle_sd: f64,
    unbiased_sd: f64,
}

fn moments(values: &[f64]) -> Result<Moments> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = values.len();
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let ss: f64 = values.iter().map(|x| (x - mean) * (x - mean)).sum();
    Ok(Moments {
        n,
        mean,
        mle_sd: (ss / nf).sqrt(),
        unbiased_sd: if n > 1 { (ss / (nf - 1.0)).sqrt() } else { 0.0 },
    })
}

fn mean_interval(
    mean: f64,
    sd: f64,
    n: usize,
    level: f64,
    scale: RatingScale,
) -> Result<ParameterEstimate> {
    check_level(level)?;
    if n < 2 {
        return Ok(ParameterEstimate::uninformative(
            mean,
            f64::from(scale.min()),
            f64::from(scale.max()),
            level,
        ));
    }
    let half = if sd == 0.0 {
        0.0
    } else {
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .map_err(|e| invalid(e.to_string()))?
            .inverse_cdf(1.0 - (1.0 - level) / 2.0);
        t * sd / (n as f64).sqrt()
    };
    Ok(ParameterEstimate {
        point: mean,
        ci_low: mean - half,
        ci_high: mean + half,
        confidence_level: level,
        informative: true,
    })
}

fn sigma_interval(
    point: f64,
    sd: f64,
    n: usize,
    level: f64,
    floor: f64,
    scale: RatingScale,
) -> Result<ParameterEstimate> {
    check_level(level)?;
    let point = point.max(floor);
    if n < 2 {
        return Ok(ParameterEstimate::uninformative(
            point,
            floor,
            scale.max_sigma().max(floor),
            level,
        ));
    }
    let (low, high) = if sd == 0.0 {
        (0.0, 0.0)
    } else {
        let df = (n - 1) as f64;
        let chi = ChiSquared::new(df).map_err(|e| invalid(e.to_string()))?;
        let alpha = 1.0 - level;
        (
            sd * (df / chi.inverse_cdf(1.0 - alpha / 2.0)).sqrt(),
            sd * (df / chi.inverse_cdf(alpha / 2.0)).sqrt(),
        )
    };
    Ok(ParameterEstimate {
        point,
        ci_low: low.max(floor),
        ci_high: high.max(floor),
        confidence_level: level,
        informative: true,
    })
}

/// Student-t interval for the mean: `mean ± t(1-α/2, N-1) · s / √N`.
pub fn mean_ci(sample: &ReRatingSample, level: f64) -> Result<ParameterEstimate> {
    let m = moments(&sample.values())?;
    mean_interval(m.mean, m.unbiased_sd, m.n, level, sample.scale())
}

/// Chi-square interval for the standard deviation around the MLE point estimate.
pub fn sigma_ci(
    sample: &ReRatingSample,
    level: f64,
    variance_floor: f64,
) -> Result<ParameterEstimate> {
    let m = moments(&sample.values())?;
    sigma_interval(
        m.mle_sd,
        m.unbiased_sd,
        m.n,
        level,
        variance_floor,
        sample.scale(),
    )
}

/// Fitted latent distribution for one pair together with parameter intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedRating {
    pub key: PairKey,
    pub distribution: RatingDistribution,
    pub mu_est: ParameterEstimate,
    pub sigma_est: ParameterEstimate,
    /// MLE standard deviation before flooring; zero for constant samples.
    pub raw_sigma: f64,
}

impl FittedRating {
    /// Builds a fit directly from point estimates, as if they came from `n`
    /// observations whose deviation equals `sigma`.
    pub fn from_point_estimates(
        key: PairKey,
        mu: f64,
        sigma: f64,
        n: usize,
        settings: &EstimationSettings,
    ) -> Result<Self> {
        settings.validate()?;
        if n == 0 {
            return Err(Error::EmptySample);
        }
        if sigma.is_nan() || sigma < 0.0 {
            return Err(invalid(format!("negative standard deviation {sigma}")));
        }
        Self::assemble(key, mu, sigma, sigma, n, settings)
    }

    /// Same point estimates, intervals recomputed for an artificial sample size `n`.
    /// The frozen MLE deviation stands in for the sample deviation, so fits of
    /// constant samples keep zero-width intervals.
    pub fn at_sample_size(&self, n: usize, settings: &EstimationSettings) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySample);
        }
        Self::assemble(
            self.key.clone(),
            self.distribution.mu,
            self.raw_sigma,
            self.raw_sigma,
            n,
            settings,
        )
    }

    fn assemble(
        key: PairKey,
        mu: f64,
        raw_sigma: f64,
        sd_for_intervals: f64,
        n: usize,
        settings: &EstimationSettings,
    ) -> Result<Self> {
        let level = settings.confidence_level;
        let floor = settings.variance_floor;
        let mu_est = mean_interval(mu, sd_for_intervals, n, level, settings.scale)?;
        let sigma_est =
            sigma_interval(raw_sigma, sd_for_intervals, n, level, floor, settings.scale)?;
        Ok(Self {
            key,
            distribution: RatingDistribution::new(mu, sigma_est.point, n)?,
            mu_est,
            sigma_est,
            raw_sigma,
        })
    }
}

/// Gaussian maximum-likelihood fit: sample mean and divisor-N deviation,
/// the latter raised to `variance_floor` when smaller.
pub fn fit_gaussian_mle(
    sample: &ReRatingSample,
    settings: &EstimationSettings,
) -> Result<FittedRating> {
    settings.validate()?;
    let m = moments(&sample.values())?;
    let level = settings.confidence_level;
    let mu_est = mean_interval(m.mean, m.unbiased_sd, m.n, level, sample.scale())?;
    let sigma_est = sigma_interval(
        m.mle_sd,
        m.unbiased_sd,
        m.n,
        level,
        settings.variance_floor,
        sample.scale(),
    )?;
    Ok(FittedRating {
        key: sample.key().clone(),
        distribution: RatingDistribution::new(m.mean, sigma_est.point, m.n)?,
        mu_est,
        sigma_est,
        raw_sigma: m.mle_sd,
    })
}

/// `ℓ(a) − ℓ(b)`; positive when `b` locates its parameter more precisely.
pub fn ci_length_delta(a: &ParameterEstimate, b: &ParameterEstimate) -> Result<f64> {
    if (a.confidence_level - b.confidence_level).abs() > 1e-12 {
        return Err(Error::LevelMismatch(a.confidence_level, b.confidence_level));
    }
    Ok(a.length() - b.length())
}

/// Draws a plausible distribution for the pair: `mu` and `sigma` independently
/// and uniformly from their confidence intervals.
pub fn sample_parameters<R: Rng + ?Sized>(fit: &FittedRating, rng: &mut R) -> RatingDistribution {
    let mu = fit.mu_est.sample_uniform(rng);
    let sigma = fit.sigma_est.sample_uniform(rng).max(fit.sigma_est.ci_low);
    RatingDistribution {
        mu,
        sigma,
        n: fit.distribution.n,
    }
}
