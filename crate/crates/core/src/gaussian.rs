//! Closed-form helpers for normal distributions.

use statrs::function::erf::erfc;

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn normal_cdf(x: f64, mean: f64, sd: f64) -> f64 {
    if sd == 0.0 {
        return if x >= mean { 1.0 } else { 0.0 };
    }
    std_normal_cdf((x - mean) / sd)
}

fn log_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln()
}

/// Overlapping coefficient `∫ min(f_a, f_b)` of two normal densities.
pub fn normal_overlap(mean_a: f64, sd_a: f64, mean_b: f64, sd_b: f64) -> f64 {
    debug_assert!(sd_a > 0.0 && sd_b > 0.0);
    // Crossing points solve log f_a = log f_b, a quadratic in x.
    let (va, vb) = (sd_a * sd_a, sd_b * sd_b);
    let qa = 1.0 / (2.0 * vb) - 1.0 / (2.0 * va);
    let qb = mean_a / va - mean_b / vb;
    let qc = mean_b * mean_b / (2.0 * vb) - mean_a * mean_a / (2.0 * va) + (sd_b / sd_a).ln();
    let mut cuts: Vec<f64> = if qa.abs() < 1e-14 * (1.0 / va) {
        if qb.abs() < f64::MIN_POSITIVE {
            return 1.0;
        }
        vec![-qc / qb]
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc <= 0.0 {
            vec![]
        } else {
            let r = disc.sqrt();
            vec![(-qb - r) / (2.0 * qa), (-qb + r) / (2.0 * qa)]
        }
    };
    cuts.sort_by(f64::total_cmp);

    let mut bounds = vec![f64::NEG_INFINITY];
    bounds.extend(cuts);
    bounds.push(f64::INFINITY);
    let mut total = 0.0;
    for w in bounds.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let probe = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo + 1.0 + sd_a.max(sd_b),
            (false, true) => hi - 1.0 - sd_a.max(sd_b),
            (false, false) => 0.5 * (mean_a + mean_b),
        };
        let (mean, sd) = if log_pdf(probe, mean_a, sd_a) <= log_pdf(probe, mean_b, sd_b) {
            (mean_a, sd_a)
        } else {
            (mean_b, sd_b)
        };
        total += normal_cdf(hi, mean, sd) - normal_cdf(lo, mean, sd);
    }
    total.clamp(0.0, 1.0)
}
