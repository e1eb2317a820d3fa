use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use super::{check_alpha, TestResult};
use crate::error::{invalid, Error, Result};

/// Levene's test for equal variances with mean centering.
///
/// `statistic` is W, referred to F(k-1, N-k). If every absolute deviation is
/// zero the p-value is 1.
pub fn levene(a: &[f64], b: &[f64], alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let groups = [a, b];
    for g in groups {
        if g.len() < 2 {
            return Err(Error::TooFewValues {
                need: 2,
                got: g.len(),
            });
        }
    }
    let deviations: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| {
            let m = g.iter().sum::<f64>() / g.len() as f64;
            g.iter().map(|x| (x - m).abs()).collect()
        })
        .collect();
    let k = groups.len() as f64;
    let total: usize = deviations.iter().map(Vec::len).sum();
    let n = total as f64;
    let group_means: Vec<f64> = deviations
        .iter()
        .map(|z| z.iter().sum::<f64>() / z.len() as f64)
        .collect();
    let grand = deviations.iter().flatten().sum::<f64>() / n;
    let between: f64 = deviations
        .iter()
        .zip(&group_means)
        .map(|(z, zm)| z.len() as f64 * (zm - grand) * (zm - grand))
        .sum();
    let within: f64 = deviations
        .iter()
        .zip(&group_means)
        .map(|(z, zm)| z.iter().map(|v| (v - zm) * (v - zm)).sum::<f64>())
        .sum();

    if within == 0.0 {
        return Ok(if between == 0.0 {
            TestResult::new(0.0, 1.0, alpha)
        } else {
            TestResult::new(f64::INFINITY, 0.0, alpha)
        });
    }
    let w = (n - k) / (k - 1.0) * between / within;
    let f = FisherSnedecor::new(k - 1.0, n - k).map_err(|e| invalid(e.to_string()))?;
    Ok(TestResult::new(w, f.sf(w), alpha))
}
