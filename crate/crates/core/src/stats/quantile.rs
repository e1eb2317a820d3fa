use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Quantile of sorted data, linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let q = q.clamp(0.0, 1.0);
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&v, q))
}

fn check_grid(q_grid: &[f64]) -> Result<()> {
    if q_grid.is_empty() {
        return Err(invalid("empty percentile grid"));
    }
    if let Some(q) = q_grid.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(invalid(format!("percentile {q} outside [0,1]")));
    }
    Ok(())
}

/// `σ(q)`: standard deviation across resamples of each resample's q-quantile.
pub fn quantile_spread(resamples: &[Vec<f64>], q_grid: &[f64]) -> Result<Vec<f64>> {
    check_grid(q_grid)?;
    if resamples.len() < 2 {
        return Err(Error::TooFewValues {
            need: 2,
            got: resamples.len(),
        });
    }
    let sorted: Vec<Vec<f64>> = resamples
        .iter()
        .map(|r| {
            if r.is_empty() {
                return Err(Error::EmptySample);
            }
            let mut v = r.clone();
            v.sort_by(f64::total_cmp);
            Ok(v)
        })
        .collect::<Result<_>>()?;
    let k = sorted.len() as f64;
    Ok(q_grid
        .iter()
        .map(|&q| {
            let qs: Vec<f64> = sorted.iter().map(|s| quantile_sorted(s, q)).collect();
            let mean = qs.iter().sum::<f64>() / k;
            (qs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0)).sqrt()
        })
        .collect())
}

/// Precision of one percentile under both measurement methods.
/// `delta_q > 0` means the pdf-rating locates the percentile more precisely.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentilePrecision {
    pub q: f64,
    pub sigma_r_q: f64,
    pub sigma_p_q: f64,
    pub delta_q: f64,
}

pub fn percentile_precision(
    rerating_resamples: &[Vec<f64>],
    pdf_resamples: &[Vec<f64>],
    q_grid: &[f64],
) -> Result<Vec<PercentilePrecision>> {
    let r = quantile_spread(rerating_resamples, q_grid)?;
    let p = quantile_spread(pdf_resamples, q_grid)?;
    Ok(q_grid
        .iter()
        .zip(r.iter().zip(&p))
        .map(|(&q, (&sigma_r_q, &sigma_p_q))| PercentilePrecision {
            q,
            sigma_r_q,
            sigma_p_q,
            delta_q: sigma_r_q - sigma_p_q,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::SeedStream;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn interpolates_between_order_statistics() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
        assert!((quantile_sorted(&v, 0.5) - 2.5).abs() < 1e-12);
        assert!((quantile_sorted(&v, 1.0 / 3.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn identical_resamples_have_zero_spread() {
        let r = vec![vec![0.3, 0.5, 1.0]; 4];
        let s = quantile_spread(&r, &[0.0, 0.25, 0.5, 0.9]).unwrap();
        assert!(s.iter().all(|&x| x == 0.0));
        let pp = percentile_precision(&r, &r, &[0.5]).unwrap();
        assert_eq!(pp[0].delta_q, 0.0);
    }

    #[test]
    fn wider_intervals_give_larger_spread() {
        let mut rng = SeedStream::new(8).rng();
        let centers: Vec<f64> = (0..30).map(|i| 0.5 + i as f64 * 0.05).collect();
        let resample = |half: f64, rng: &mut crate::seed::SimRng| -> Vec<Vec<f64>> {
            (0..300)
                .map(|_| {
                    centers
                        .iter()
                        .map(|c| c + rng.random_range(-half..=half))
                        .collect()
                })
                .collect()
        };
        let narrow = resample(0.05, &mut rng);
        let wide = resample(0.5, &mut rng);
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let sn = quantile_spread(&narrow, &grid).unwrap();
        let sw = quantile_spread(&wide, &grid).unwrap();
        for (q, (n, w)) in grid.iter().zip(sn.iter().zip(&sw)) {
            assert!(w > n, "q={q}: wide {w} <= narrow {n}");
        }
    }

    #[test]
    fn errors() {
        assert!(quantile_spread(&[vec![1.0], vec![2.0]], &[]).is_err());
        assert!(quantile_spread(&[vec![1.0]], &[0.5]).is_err());
        assert!(quantile_spread(&[vec![1.0], vec![2.0]], &[1.5]).is_err());
        assert!(quantile(&[], 0.5).is_err());
    }

    proptest! {
        #[test]
        fn quantile_monotone_in_q(mut v in prop::collection::vec(-100.0f64..100.0, 1..40), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            v.sort_by(f64::total_cmp);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(quantile_sorted(&v, lo) <= quantile_sorted(&v, hi));
        }
    }
}
