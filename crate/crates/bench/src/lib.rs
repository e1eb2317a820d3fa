//! Shared fixtures for the benchmarks.

use std::collections::BTreeMap;

use humanrate_core::{
    fit_gaussian_mle, generate_rerating, predictor_family, CohortSpec, EstimationSettings, PairKey,
    Predictor, RatingDistribution, ReRatingSample,
};

pub struct Fixture {
    pub samples: Vec<ReRatingSample>,
    pub distributions: BTreeMap<PairKey, RatingDistribution>,
    pub optimal: Predictor,
}

/// The default 67 × 5 synthetic cohort, fitted.
pub fn default_fixture() -> Fixture {
    let samples = generate_rerating(&CohortSpec::default()).expect("default cohort");
    let settings = EstimationSettings::default();
    let distributions = samples
        .iter()
        .map(|s| {
            (
                s.key().clone(),
                fit_gaussian_mle(s, &settings).expect("fit").distribution,
            )
        })
        .collect();
    let optimal = predictor_family(&samples, 1).expect("k1");
    Fixture {
        samples,
        distributions,
        optimal,
    }
}
