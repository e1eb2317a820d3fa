//! Monte-Carlo propagation of rating uncertainty into the RMSE.

mod borderline;
mod convergence;
mod histogram;
mod metric;
mod predictor;

pub use borderline::{
    borderline_cases, mean_pairwise_overlap, BorderlineCases, DEFAULT_CANDIDATES,
};
pub use convergence::{
    convergence_analysis, ConvergenceReport, ConvergenceRow, ConvergenceSettings,
};
pub use histogram::{Histogram, HistogramGrid};
pub use metric::{
    overlap, rmse_mc, MetricDistribution, MetricSummary, RmseModel, SUMMARY_QUANTILES,
};
pub use predictor::{predictor_family, Predictor, PREDICTOR_FAMILY_SIZE};

/// Interactive default; acceptance runs use 10⁶.
pub const DEFAULT_MC_TRIALS: usize = 100_000;
