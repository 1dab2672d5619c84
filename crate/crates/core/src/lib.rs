//! Predictive distributions for binary-classifier evaluation metrics when
//! some test labels are missing.
//!
//! Missing labels induce a distribution over every metric computed on the
//! evaluation set: each missing label is a Bernoulli draw, so the metric
//! value under the full assignment is a random variable. This crate builds
//! that predictive distribution two ways and validates both:
//!
//! - [`pemi`]: Monte-Carlo multiple imputation — sample label scenarios,
//!   evaluate the metric per replicate, return the empirical cdf.
//! - [`metric_gauss`]: a closed-form Gaussian from exact moments of the
//!   confusion-cell estimators (or of the rank-metric pair sums), with
//!   finite-sample KS bounds where the guarantees apply.
//!
//! Supporting pieces: exact scenario enumeration as a ground-truth oracle
//! ([`oracle`]), Bernoulli-parameter policies including a scaling-binning
//! calibrator ([`labels`]), substitution bounds ([`oracle::metric_bounds`]),
//! and a PIT-based experiment harness with masking generators and a
//! bootstrap baseline ([`harness`]).

pub mod dataset;
pub mod error;
pub mod gauss;
pub mod harness;
pub mod labels;
pub mod mc;
pub mod metrics;
pub mod normal;
pub mod oracle;
pub mod seed;

pub use dataset::{load_dataset, stratified_folds, CsvSchema, EvalRecord, MaskedDataset};
pub use error::{Error, Result};
pub use gauss::{
    cm_moments, ks_bound_bernoulli_sum, ks_bound_ratio, metric_gauss, metric_ks_bound,
    ratio_gauss_moments, roc_auc_moments, CmMoments, GaussianCdf, KsBound, MethodTag, MetricGauss,
    RatioMoments,
};
pub use harness::{run_experiment, ExperimentConfig, FidelityReport};
pub use labels::{
    assign_maxent_half, assign_maxent_prevalence, beta_noise, calibrate_labels,
    fit_scaling_binning, LabelModel, ScalingBinningCalibrator,
};
pub use mc::{cdf_eval, pemi, CdfSummary, EmpiricalCdf};
pub use metrics::{
    confusion_counts, induce_classifier, metric_value, ConfusionCounts, MetricKind,
};
pub use oracle::{
    enumerate_distribution, exact_moments, metric_bounds, ExactDistribution,
    DEFAULT_SCENARIO_CAP,
};
