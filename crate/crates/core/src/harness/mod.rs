//! Experimental machinery: masking generators, a synthetic data source,
//! PIT-based validation, the bootstrap baseline, and the experiment driver.

pub mod bootstrap;
pub mod experiment;
pub mod mask;
pub mod pit;
pub mod synth;

pub use bootstrap::{bootstrap_baseline, BOOTSTRAP_DEFAULT_B};
pub use experiment::{
    run_experiment, DataSource, ExperimentConfig, FidelityCell, FidelityReport, MaskingConfig,
    MechanismSpec, MethodSpec, PolicySpec,
};
pub use mask::{mask_mcar, mask_mnar, MaskingSpec, Mechanism};
pub use pit::{
    center_error, pit_uniformity, pit_value, CenterMeasure, PredictiveCdf, UniformityMeasure,
};
pub use synth::{synth_generate, SynthRecord};
