use super::{check_alpha, TestResult};
use crate::error::{Error, Result};

/// Largest `n_a * n_b` for which the exact permutation distribution is used.
pub const EXACT_MAX_CELLS: usize = 250_000;

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// `sup |F_a - F_b|` over the two empirical CDFs (inputs sorted).
fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

fn has_ties(a: &[f64], b: &[f64]) -> bool {
    let mut all: Vec<f64> = a.iter().chain(b).copied().collect();
    all.sort_by(f64::total_cmp);
    all.windows(2).any(|w| w[0] == w[1])
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-theta form converges fast for small lambda.
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let s: f64 = (1..=20)
            .map(|k| {
                let odd = (2 * k - 1) as f64;
                (-odd * odd * c).exp()
            })
            .sum();
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda * s;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let s: f64 = (1..=100)
            .map(|j| {
                let jf = j as f64;
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * jf * jf * lambda * lambda).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// Exact `P(D >= d)` under the permutation null for tie-free samples of
/// sizes `m` and `n`, by counting lattice paths that stay strictly inside the
/// band `|i/m - j/n| < d`.
pub fn ks_two_sample_exact_sf(d: f64, m: usize, n: usize) -> f64 {
    let mn = (m * n) as i64;
    let band = (d * mn as f64).round() as i64;
    if band <= 0 {
        return 1.0;
    }
    let inside = |i: usize, j: usize| ((i * n) as i64 - (j * m) as i64).abs() < band;
    // row[j] = inside-path count to (i, j) divided by C(i+j, i).
    let mut row = vec![0.0f64; n + 1];
    row[0] = 1.0;
    for j in 1..=n {
        row[j] = if inside(0, j) { row[j - 1] } else { 0.0 };
    }
    for i in 1..=m {
        row[0] = if inside(i, 0) { row[0] } else { 0.0 };
        for j in 1..=n {
            row[j] = if inside(i, j) {
                let s = (i + j) as f64;
                row[j] * (i as f64 / s) + row[j - 1] * (j as f64 / s)
            } else {
                0.0
            };
        }
    }
    (1.0 - row[n]).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov test.
///
/// The p-value is exact for small tie-free samples and otherwise comes from the
/// asymptotic Kolmogorov distribution at `sqrt(n_a n_b / (n_a + n_b)) * D`.
pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let (sa, sb) = (sorted(a), sorted(b));
    let d = ks_statistic(&sa, &sb);
    let (m, n) = (a.len(), b.len());
    let p = if m * n <= EXACT_MAX_CELLS && !has_ties(&sa, &sb) {
        ks_two_sample_exact_sf(d, m, n)
    } else {
        let ne = (m * n) as f64 / (m + n) as f64;
        kolmogorov_sf(ne.sqrt() * d)
    };
    Ok(TestResult::new(d, p, alpha))
}

/// One-sample KS distance of `values` against a continuous CDF.
pub fn ks_distance_to_cdf(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let v = sorted(values);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}
