use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid rating scale {min}..={max}")]
    InvalidScale { min: u8, max: u8 },
    #[error("rating {value} outside scale {min}..={max}")]
    OutOfScale { value: u8, min: u8, max: u8 },
    #[error("confidence weight {weight} for category {category} outside 0..={max}")]
    InvalidWeight { category: u8, weight: u8, max: u8 },
    #[error("expected {expected} confidence weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("empty rating: every confidence weight is zero")]
    EmptyRating,
    #[error("empty sample")]
    EmptySample,
    #[error("sample too small: need at least {need} values, got {got}")]
    TooFewValues { need: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("confidence levels differ: {0} vs {1}")]
    LevelMismatch(f64, f64),
    #[error("no fitted ratings for {kind} anchor {anchor:?}")]
    NoMatchingFits { kind: &'static str, anchor: String },
    #[error("power-law fit undefined: every value equals the minimum")]
    DegeneratePowerLaw,
    #[error("no value for pair ({user}, {item})")]
    MissingPair { user: String, item: String },
    #[error("pair ({user}, {item}) has {have} trials but predictor k={k} needs {need}")]
    MissingTrial {
        user: String,
        item: String,
        k: usize,
        have: usize,
        need: usize,
    },
    #[error("histogram grids differ")]
    GridMismatch,
    #[error("draw lists differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
