//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row}: column '{column}': {message}")]
    MalformedRow {
        row: usize,
        column: String,
        message: String,
    },

    #[error("no records")]
    EmptyDataset,

    #[error("row {row}: score {value} outside [0, 1]")]
    ScoreOutOfRange { row: usize, value: f64 },

    #[error("class with {members} members cannot be split into {folds} stratified folds")]
    ClassTooSmall { members: usize, folds: usize },

    #[error("threshold {0} outside the open interval (0, 1)")]
    InvalidThreshold(f64),

    #[error("length mismatch: {left} labels vs {right} predictions")]
    LengthMismatch { left: usize, right: usize },

    #[error("{missing} missing labels exceed the scenario cap {cap}: enumeration cost 2^{missing} is exponential")]
    ScenarioCapExceeded { missing: usize, cap: usize },

    #[error("all {count} scenarios map to an undefined metric value")]
    AllUndefined { count: u64 },

    #[error("substitution bounds are not defined for rank metrics; use enumerate_distribution extremes")]
    BoundsNotApplicable,

    #[error("metric undefined under the {0} bound scenario")]
    BoundUndefined(&'static str),

    #[error("label-model domain does not match the dataset's missing indices")]
    ModelDomainMismatch,

    #[error("Bernoulli parameter {0} outside the open interval (0, 1)")]
    InvalidProbability(f64),

    #[error("calibration labels contain a single class")]
    SingleClassCalibration,

    #[error("{samples} calibration samples are fewer than {bins} bins")]
    TooFewSamples { samples: usize, bins: usize },

    #[error("beta-noise variance {variance} violates V[P_i] < v* = {v_star}")]
    NoiseVarianceTooLarge { variance: f64, v_star: f64 },

    #[error("replicate count B must be at least 1")]
    ZeroReplicates,

    #[error("empirical cdf has no samples")]
    EmptyCdf,

    #[error("denominator has zero mean: ratio distribution undefined")]
    ZeroDenominator,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("masking would leave no known labels")]
    NothingKnown,

    #[error("masking selects zero records")]
    NothingMasked,

    #[error("MNAR masking needs {needed} {class} records but only {available} are available")]
    MaskShortfall {
        class: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("experiment configuration: {0}")]
    Config(String),

    #[error("estimators must not consume the truth channel: {0}")]
    Leakage(String),

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
