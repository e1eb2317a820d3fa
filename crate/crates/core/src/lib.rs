//! Human rating uncertainty: latent rating distributions, Monte-Carlo
//! propagation into recommender metrics, and ranking-error analysis.

pub mod distinguish;
pub mod error;
pub mod estimation;
pub mod gaussian;
pub mod noise;
pub mod propagation;
pub mod rating;
pub mod seed;
pub mod stats;
pub mod synth;

pub use distinguish::{
    distort_predictor, error_probability_draws, error_probability_empirical,
    error_probability_gaussian, min_detectable_noise, optimal_predictor, ErrorMethod,
    MinDetectableNoise, NoiseCurvePoint, NoiseSearchSettings, RankingErrorReport,
};
pub use error::{Error, Result};
pub use estimation::{
    ci_length_delta, fit_gaussian_mle, mean_ci, sample_parameters, sigma_ci, EstimationSettings,
    FittedRating, ParameterEstimate,
};
pub use noise::{
    build_all_noise, build_noise, compare_noise, fit_noise_model, resample_noise,
    select_noise_model, NoiseComparison, NoiseDistribution, NoiseFamily, NoiseKind, NoiseModel,
    NoiseModelFit,
};
pub use propagation::{
    borderline_cases, convergence_analysis, overlap, predictor_family, rmse_mc, BorderlineCases,
    ConvergenceReport, ConvergenceSettings, HistogramGrid, MetricDistribution, Predictor,
    RmseModel,
};
pub use rating::{
    tau_transform, PairKey, PdfRating, RatingDistribution, RatingScale, ReRatingSample,
};
pub use seed::{SeedStream, SimRng};
pub use stats::{TestKind, TestResult};
pub use synth::{
    generate_pdfrating, generate_rerating, latent_cohort, CohortSpec, LatentPair, NoiseFamilySpec,
};
