//! Hypothesis tests used to compare rating, noise and metric distributions,
//! plus quantile-spread precision measures.

mod indirect;
mod ks;
mod levene;
mod quantile;
mod welch;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use indirect::{
    indirect_mc_battery, indirect_mc_test, DrawSource, FnSource, IndirectTestOutcome,
};
pub use ks::{kolmogorov_sf, ks_distance_to_cdf, ks_two_sample, ks_two_sample_exact_sf};
pub use levene::levene;
pub use quantile::{
    percentile_precision, quantile, quantile_sorted, quantile_spread, PercentilePrecision,
};
pub use welch::welch_t;

/// Significance level used throughout unless configured otherwise.
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    Ks,
    Welch,
    Levene,
}

impl TestKind {
    pub const ALL: [TestKind; 3] = [TestKind::Ks, TestKind::Welch, TestKind::Levene];

    pub fn name(self) -> &'static str {
        match self {
            TestKind::Ks => "ks",
            TestKind::Welch => "welch",
            TestKind::Levene => "levene",
        }
    }

    pub fn run(self, a: &[f64], b: &[f64], alpha: f64) -> Result<TestResult> {
        match self {
            TestKind::Ks => ks_two_sample(a, b, alpha),
            TestKind::Welch => welch_t(a, b, alpha),
            TestKind::Levene => levene(a, b, alpha),
        }
    }
}

/// Outcome of one two-sample test. `rejected` is exactly `p_value < alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub rejected: bool,
}

impl TestResult {
    pub(crate) fn new(statistic: f64, p_value: f64, alpha: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            statistic,
            p_value,
            alpha,
            rejected: p_value < alpha,
        }
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "significance level must lie in (0,1), got {alpha}"
        )))
    }
}

pub(crate) fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}
