use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{check_alpha, mean_var, TestResult};
use crate::error::{invalid, Error, Result};

/// Welch's unequal-variance t-test, two-sided.
///
/// `statistic` is t. When both samples have zero variance the p-value is 1 for
/// equal means and 0 otherwise.
pub fn welch_t(a: &[f64], b: &[f64], alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    for s in [a, b] {
        if s.len() < 2 {
            return Err(Error::TooFewValues {
                need: 2,
                got: s.len(),
            });
        }
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    if se2 == 0.0 {
        return Ok(if ma == mb {
            TestResult::new(0.0, 1.0, alpha)
        } else {
            TestResult::new((ma - mb).signum() * f64::INFINITY, 0.0, alpha)
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| invalid(e.to_string()))?;
    Ok(TestResult::new(t, 2.0 * dist.sf(t.abs()), alpha))
}

/// Welch–Satterthwaite degrees of freedom.
#[cfg(test)]
pub(crate) fn welch_df(a: &[f64], b: &[f64]) -> f64 {
    let (_, va) = mean_var(a);
    let (_, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (va / na, vb / nb);
    (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0))
}
