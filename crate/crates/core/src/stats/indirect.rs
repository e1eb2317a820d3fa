//! Hypothesis tests on simulated quantities.
//!
//! Monte-Carlo draws can be made arbitrarily numerous, which would let any test
//! detect any difference. Instead both sources are frozen at their point
//! estimates, samples the size of the real data are drawn, the test is run, and
//! this is repeated. The rejection frequency `h` is the evidence.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_alpha, TestKind};
use crate::error::{invalid, Result};
use crate::rating::RatingDistribution;
use crate::seed::{tags, SeedStream, SimRng};

/// Anything that can produce independent draws of a scalar quantity.
pub trait DrawSource: Sync {
    fn draw(&self, rng: &mut SimRng) -> f64;
}

impl DrawSource for RatingDistribution {
    fn draw(&self, rng: &mut SimRng) -> f64 {
        self.sample(rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndirectTestOutcome {
    pub test: TestKind,
    pub sample_size: usize,
    pub repetitions: usize,
    /// Fraction of repetitions that rejected equality.
    pub h: f64,
    pub alpha: f64,
    /// `h > 1 - alpha`.
    pub effect_proven: bool,
}

/// Rejection frequency of `test` over `repetitions` pairs of `sample_size` draws.
pub fn indirect_mc_test<A: DrawSource, B: DrawSource>(
    a: &A,
    b: &B,
    sample_size: usize,
    repetitions: usize,
    test: TestKind,
    alpha: f64,
    seed: SeedStream,
) -> Result<IndirectTestOutcome> {
    let mut all = indirect_mc_battery(a, b, sample_size, repetitions, &[test], alpha, seed)?;
    Ok(all.remove(&test).expect("requested test present"))
}

/// Runs several tests on the same simulated sample pairs.
pub fn indirect_mc_battery<A: DrawSource, B: DrawSource>(
    a: &A,
    b: &B,
    sample_size: usize,
    repetitions: usize,
    tests: &[TestKind],
    alpha: f64,
    seed: SeedStream,
) -> Result<BTreeMap<TestKind, IndirectTestOutcome>> {
    check_alpha(alpha)?;
    if repetitions == 0 {
        return Err(invalid("indirect test needs at least one repetition"));
    }
    if sample_size < 2 {
        return Err(invalid(format!(
            "sample size must be at least 2, got {sample_size}"
        )));
    }
    let per_rep: Vec<Vec<bool>> = (0..repetitions)
        .into_par_iter()
        .map(|rep| {
            let mut rng = seed.derive2(tags::REPETITION, rep as u64).rng();
            let xa: Vec<f64> = (0..sample_size).map(|_| a.draw(&mut rng)).collect();
            let xb: Vec<f64> = (0..sample_size).map(|_| b.draw(&mut rng)).collect();
            tests
                .iter()
                .map(|t| t.run(&xa, &xb, alpha).map(|r| r.rejected))
                .collect::<Result<Vec<bool>>>()
        })
        .collect::<Result<_>>()?;

    Ok(tests
        .iter()
        .enumerate()
        .map(|(ti, &test)| {
            let rejected = per_rep.iter().filter(|r| r[ti]).count();
            let h = rejected as f64 / repetitions as f64;
            (
                test,
                IndirectTestOutcome {
                    test,
                    sample_size,
                    repetitions,
                    h,
                    alpha,
                    effect_proven: h > 1.0 - alpha,
                },
            )
        })
        .collect())
}

/// Allows closures over an rng as ad-hoc sources.
pub struct FnSource<F>(pub F);

impl<F: Fn(&mut SimRng) -> f64 + Sync> DrawSource for FnSource<F> {
    fn draw(&self, rng: &mut SimRng) -> f64 {
        (self.0)(rng)
    }
}
