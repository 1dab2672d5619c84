//! Experiment driver: masking grids, label policies, estimation methods,
//! PIT collection, and the fidelity report.
//!
//! Two replication schemes share the same inner loop. A synthetic source
//! draws a fresh evaluation batch and calibration batch per replication. A
//! CSV source partitions the labeled records into stratified folds, splits
//! each test fold into two random sub-folds and masks one per replication
//! (two replications per fold), fitting the calibrator on a split of the
//! training side.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{load_dataset, stratified_folds, CsvSchema};
use crate::error::{Error, Result};
use crate::gauss::metric_gauss;
use crate::harness::bootstrap::bootstrap_baseline;
use crate::harness::mask::{mask_within, Mechanism};
use crate::harness::pit::{
    center_error, pit_uniformity, pit_value, CenterMeasure, PredictiveCdf, UniformityMeasure,
};
use crate::harness::synth::synth_generate;
use crate::labels::{
    assign_maxent_half, assign_maxent_prevalence, beta_noise, calibrate_labels,
    fit_scaling_binning, LabelModel, PROB_EPS,
};
use crate::mc::pemi;
use crate::metrics::{metric_value, MetricKind};
use crate::seed::derive_seed;

const TAG_SYNTH: u64 = 0x01;
const TAG_CAL: u64 = 0x02;
const TAG_MASK: u64 = 0x03;
const TAG_BOOT: u64 = 0x04;
const TAG_NOISE: u64 = 0x05;
const TAG_GAUSS: u64 = 0x06;
const TAG_FOLDS: u64 = 0x07;
const TAG_SUBFOLD: u64 = 0x08;
const TAG_CALSEL: u64 = 0x09;
const TAG_CI: u64 = 0x0a;
const TAG_PEMI: u64 = 0x0b;

fn sub_seed(base: u64, tag: u64, index: u64) -> u64 {
    derive_seed(derive_seed(base, tag), index)
}

/// Where the labeled records come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum DataSource {
    /// Fresh synthetic batch per replication.
    Synth {
        n: usize,
        coef: f64,
        intercept: f64,
        #[serde(default = "default_miscalibration")]
        miscalibration: f64,
    },
    /// Fully labeled CSV, run through the stratified fold protocol.
    Csv { path: String },
}

fn default_miscalibration() -> f64 {
    1.0
}

/// Mechanism plus its parameter grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum MechanismSpec {
    Mcar,
    /// One series per masked-positive fraction.
    Mnar { eta_grid: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaskingConfig {
    pub mechanism: MechanismSpec,
    pub p_m: f64,
}

/// How the Bernoulli parameters of missing labels are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum PolicySpec {
    Half,
    Prevalence,
    Calibrated,
    /// The generator's true conditional probabilities (synthetic source
    /// only), optionally perturbed by mean-preserving Beta noise.
    TrueModel {
        #[serde(default)]
        noise_variance: Option<f64>,
    },
}

impl PolicySpec {
    pub fn name(&self) -> String {
        match self {
            PolicySpec::Half => "half".into(),
            PolicySpec::Prevalence => "prevalence".into(),
            PolicySpec::Calibrated => "calibrated".into(),
            PolicySpec::TrueModel { noise_variance: None } => "true-model".into(),
            PolicySpec::TrueModel { noise_variance: Some(v) } => format!("true-model-noised-{v}"),
        }
    }
}

/// Which predictive distribution is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum MethodSpec {
    /// Resampling of the nonmissing records only; ignores the policy.
    Bootstrap,
    Pemi { b: u64 },
    PemiGauss,
}

impl MethodSpec {
    pub fn name(&self) -> String {
        match self {
            MethodSpec::Bootstrap => "bootstrap".into(),
            MethodSpec::Pemi { b } => format!("pemi-b{b}"),
            MethodSpec::PemiGauss => "pemi-gauss".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub masking: MaskingConfig,
    pub policies: Vec<PolicySpec>,
    pub methods: Vec<MethodSpec>,
    pub metrics: Vec<MetricKind>,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub seed: u64,
    /// Replication count for the synthetic source.
    #[serde(default = "default_replications")]
    pub replications: usize,
    /// Fold count for the CSV protocol (two replications per fold).
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_bins")]
    pub calibration_bins: usize,
    /// Fraction of the training side used to fit the calibrator (CSV).
    #[serde(default = "default_cal_fraction")]
    pub calibration_fraction: f64,
    #[serde(default = "default_bootstrap_b")]
    pub bootstrap_b: u64,
    /// Percentile-bootstrap resamples behind the confidence intervals;
    /// zero disables them.
    #[serde(default = "default_ci_resamples")]
    pub ci_resamples: usize,
    #[serde(default = "default_ci_alpha")]
    pub ci_alpha: f64,
}

fn default_tau() -> f64 {
    0.5
}
fn default_replications() -> usize {
    20
}
fn default_folds() -> usize {
    10
}
fn default_bins() -> usize {
    10
}
fn default_cal_fraction() -> f64 {
    0.1
}
fn default_bootstrap_b() -> u64 {
    super::bootstrap::BOOTSTRAP_DEFAULT_B
}
fn default_ci_resamples() -> usize {
    1000
}
fn default_ci_alpha() -> f64 {
    0.9
}

/// One aggregated table cell of the fidelity report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FidelityCell {
    pub method: String,
    pub policy: String,
    pub metric: MetricKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Replications that contributed a PIT value.
    pub replications: usize,
    /// Replications skipped because the estimator could not produce a
    /// distribution on that draw.
    pub skipped: usize,
    pub ks: f64,
    pub w1: f64,
    pub mae: f64,
    pub rmse: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_ci: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w1_ci: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mae_ci: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rmse_ci: Option<(f64, f64)>,
}

/// Aggregated fidelity measures for every (method, policy, metric[, eta]).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FidelityReport {
    pub cells: Vec<FidelityCell>,
}

impl FidelityReport {
    pub fn cell(&self, method: &str, policy: &str, metric: MetricKind) -> Option<&FidelityCell> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.policy == policy && c.metric == metric)
    }

    /// Long-format CSV: one row per (cell, measure).
    pub fn write_long_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(
            writer,
            "method,policy,metric,eta,measure,value,ci_lo,ci_hi,replications"
        )?;
        for cell in &self.cells {
            let eta = cell.eta.map(|e| e.to_string()).unwrap_or_default();
            let rows: [(&str, f64, Option<(f64, f64)>); 4] = [
                ("ks", cell.ks, cell.ks_ci),
                ("w1", cell.w1, cell.w1_ci),
                ("mae", cell.mae, cell.mae_ci),
                ("rmse", cell.rmse, cell.rmse_ci),
            ];
            for (measure, value, ci) in rows {
                let (lo, hi) = match ci {
                    Some((lo, hi)) => (lo.to_string(), hi.to_string()),
                    None => (String::new(), String::new()),
                };
                writeln!(
                    writer,
                    "{},{},{},{},{},{},{},{},{}",
                    cell.method,
                    cell.policy,
                    cell.metric,
                    eta,
                    measure,
                    value,
                    lo,
                    hi,
                    cell.replications
                )?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Compact text table per measure: rows are method/policy, columns the
    /// metrics.
    pub fn summary_text(&self, metrics: &[MetricKind]) -> String {
        let mut out = String::new();
        let etas: Vec<Option<f64>> = {
            let mut seen = Vec::new();
            for c in &self.cells {
                if !seen.contains(&c.eta) {
                    seen.push(c.eta);
                }
            }
            seen
        };
        for eta in etas {
            if let Some(e) = eta {
                out.push_str(&format!("eta = {e}\n"));
            }
            for (measure, pick) in [
                ("w1", 0usize),
                ("mae", 1usize),
            ] {
                out.push_str(&format!("  {measure} of PIT vs uniform\n"));
                let mut rows: Vec<(String, String)> = Vec::new();
                for c in self.cells.iter().filter(|c| c.eta == eta) {
                    let key = format!("{}/{}", c.method, c.policy);
                    if !rows.iter().any(|(k, _)| *k == key) {
                        rows.push((key, String::new()));
                    }
                }
                for (key, line) in rows.iter_mut() {
                    let mut cols = Vec::new();
                    for &metric in metrics {
                        let val = self
                            .cells
                            .iter()
                            .find(|c| {
                                c.eta == eta && format!("{}/{}", c.method, c.policy) == *key
                                    && c.metric == metric
                            })
                            .map(|c| if pick == 0 { c.w1 } else { c.mae });
                        cols.push(match val {
                            Some(v) => format!("{metric}={v:.4}"),
                            None => format!("{metric}=-"),
                        });
                    }
                    *line = cols.join(" ");
                }
                for (key, line) in rows {
                    out.push_str(&format!("    {key:<28} {line}\n"));
                }
            }
        }
        out
    }
}

/// One replication's unmasked frame plus its calibration material.
struct Replication {
    seed_r: u64,
    scores: Vec<f64>,
    labels: Vec<bool>,
    /// True conditional probabilities (synthetic source only).
    true_p: Option<Vec<f64>>,
    /// Indices eligible for masking (a sub-fold under the CSV protocol).
    maskable: Vec<usize>,
    cal_scores: Vec<f64>,
    cal_labels: Vec<bool>,
    train_pos: usize,
    train_total: usize,
}

fn validate(config: &ExperimentConfig) -> Result<()> {
    if config.metrics.is_empty() || config.methods.is_empty() {
        return Err(Error::Config("need at least one metric and method".into()));
    }
    let needs_policy = config
        .methods
        .iter()
        .any(|m| !matches!(m, MethodSpec::Bootstrap));
    if needs_policy && config.policies.is_empty() {
        return Err(Error::Config(
            "imputation methods need at least one label policy".into(),
        ));
    }
    if !(config.masking.p_m > 0.0 && config.masking.p_m < 1.0) {
        return Err(Error::Config(format!(
            "p_m {} outside (0, 1)",
            config.masking.p_m
        )));
    }
    if let MechanismSpec::Mnar { eta_grid } = &config.masking.mechanism {
        if eta_grid.is_empty() {
            return Err(Error::Config("MNAR needs a nonempty eta grid".into()));
        }
        for &eta in eta_grid {
            if !(eta > 0.0 && eta < 1.0) {
                return Err(Error::Config(format!("eta {eta} outside (0, 1)")));
            }
        }
    }
    let true_model = config
        .policies
        .iter()
        .any(|p| matches!(p, PolicySpec::TrueModel { .. }));
    if true_model && matches!(config.source, DataSource::Csv { .. }) {
        return Err(Error::Leakage(
            "the true-model policy would have to read the truth channel; it is only \
             available with the synthetic source"
                .into(),
        ));
    }
    if let Some(PolicySpec::TrueModel {
        noise_variance: Some(v),
    }) = config
        .policies
        .iter()
        .find(|p| matches!(p, PolicySpec::TrueModel { noise_variance: Some(_) }))
    {
        if !(*v > 0.0) {
            return Err(Error::Config("noise variance must be positive".into()));
        }
    }
    Ok(())
}

fn build_replications(config: &ExperimentConfig) -> Result<Vec<Replication>> {
    match &config.source {
        DataSource::Synth {
            n,
            coef,
            intercept,
            miscalibration,
        } => {
            if config.replications == 0 {
                return Err(Error::Config("replications must be >= 1".into()));
            }
            let cal_n = (*n / 10).max(10 * config.calibration_bins);
            (0..config.replications)
                .map(|r| {
                    let seed_r = config.seed.wrapping_add(r as u64);
                    let eval = synth_generate(
                        *n,
                        *coef,
                        *intercept,
                        *miscalibration,
                        derive_seed(seed_r, TAG_SYNTH),
                    )?;
                    let cal = synth_generate(
                        cal_n,
                        *coef,
                        *intercept,
                        *miscalibration,
                        derive_seed(seed_r, TAG_CAL),
                    )?;
                    let train_pos = cal.iter().filter(|r| r.label).count();
                    Ok(Replication {
                        seed_r,
                        scores: eval.iter().map(|r| r.score).collect(),
                        labels: eval.iter().map(|r| r.label).collect(),
                        true_p: Some(eval.iter().map(|r| r.true_p).collect()),
                        maskable: (0..*n).collect(),
                        cal_scores: cal.iter().map(|r| r.score).collect(),
                        cal_labels: cal.iter().map(|r| r.label).collect(),
                        train_pos,
                        train_total: cal.len(),
                    })
                })
                .collect()
        }
        DataSource::Csv { path } => {
            let data = load_dataset(path, &CsvSchema::default())?;
            if !data.missing_indices().is_empty() {
                return Err(Error::Config(
                    "experiment source must be fully labeled; masking is applied by the \
                     harness"
                        .into(),
                ));
            }
            let labels: Vec<bool> = (0..data.n())
                .map(|i| data.observed(i).expect("fully labeled"))
                .collect();
            let scores = data.scores();
            let folds = stratified_folds(
                &labels,
                config.folds,
                derive_seed(config.seed, TAG_FOLDS),
            )?;
            let mut reps = Vec::with_capacity(folds.len() * 2);
            for (u, fold) in folds.iter().enumerate() {
                let train_idx: Vec<usize> =
                    (0..data.n()).filter(|i| !fold.contains(i)).collect();
                let train_pos = train_idx.iter().filter(|&&i| labels[i]).count();
                // Calibration split inside the training side.
                let cal_n = ((config.calibration_fraction * train_idx.len() as f64).round()
                    as usize)
                    .max(config.calibration_bins)
                    .min(train_idx.len());
                let mut shuffled = train_idx.clone();
                let mut rng =
                    ChaCha8Rng::seed_from_u64(sub_seed(config.seed, TAG_CALSEL, u as u64));
                shuffled.shuffle(&mut rng);
                let cal_idx = &shuffled[..cal_n];
                let cal_scores: Vec<f64> = cal_idx.iter().map(|&i| scores[i]).collect();
                let cal_labels: Vec<bool> = cal_idx.iter().map(|&i| labels[i]).collect();

                // Two random, non-stratified sub-folds.
                let mut local: Vec<usize> = (0..fold.len()).collect();
                let mut rng =
                    ChaCha8Rng::seed_from_u64(sub_seed(config.seed, TAG_SUBFOLD, u as u64));
                local.shuffle(&mut rng);
                let half = fold.len() / 2;
                let fold_scores: Vec<f64> = fold.iter().map(|&i| scores[i]).collect();
                let fold_labels: Vec<bool> = fold.iter().map(|&i| labels[i]).collect();
                for (h, part) in [&local[..half], &local[half..]].into_iter().enumerate() {
                    reps.push(Replication {
                        seed_r: config.seed.wrapping_add((2 * u + h) as u64),
                        scores: fold_scores.clone(),
                        labels: fold_labels.clone(),
                        true_p: None,
                        maskable: part.to_vec(),
                        cal_scores: cal_scores.clone(),
                        cal_labels: cal_labels.clone(),
                        train_pos,
                        train_total: train_idx.len(),
                    });
                }
            }
            Ok(reps)
        }
    }
}

fn policy_model(
    policy: &PolicySpec,
    rep: &Replication,
    masked: &crate::dataset::MaskedDataset,
    config: &ExperimentConfig,
    eta_idx: usize,
) -> Result<LabelModel> {
    match policy {
        PolicySpec::Half => Ok(assign_maxent_half(masked)),
        PolicySpec::Prevalence => {
            assign_maxent_prevalence(masked, rep.train_pos, rep.train_total)
        }
        PolicySpec::Calibrated => {
            let cal = fit_scaling_binning(
                &rep.cal_scores,
                &rep.cal_labels,
                config.calibration_bins,
            )?;
            Ok(calibrate_labels(&cal, masked))
        }
        PolicySpec::TrueModel { noise_variance } => {
            let true_p = rep
                .true_p
                .as_ref()
                .ok_or_else(|| Error::Leakage("true-model policy without true_p".into()))?;
            let model = LabelModel::from_pairs(masked.missing_indices().iter().map(|&i| {
                (i, true_p[i].clamp(PROB_EPS, 1.0 - PROB_EPS))
            }))?;
            match noise_variance {
                None => Ok(model),
                Some(v) => beta_noise(
                    &model,
                    *v,
                    sub_seed(rep.seed_r, TAG_NOISE, eta_idx as u64),
                ),
            }
        }
    }
}

#[derive(Default)]
struct CellAccum {
    /// (pit, predicted center, realized truth) per contributing replication.
    units: Vec<(f64, f64, f64)>,
    skipped: usize,
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let idx = ((q * n as f64).ceil() as usize).max(1).min(n) - 1;
    sorted[idx]
}

fn measures(units: &[(f64, f64, f64)]) -> Result<(f64, f64, f64, f64)> {
    let pits: Vec<f64> = units.iter().map(|u| u.0).collect();
    let pairs: Vec<(f64, f64)> = units.iter().map(|u| (u.1, u.2)).collect();
    Ok((
        pit_uniformity(&pits, UniformityMeasure::Ks)?,
        pit_uniformity(&pits, UniformityMeasure::W1)?,
        center_error(&pairs, CenterMeasure::Mae)?,
        center_error(&pairs, CenterMeasure::Rmse)?,
    ))
}

/// Run the configured experiment and aggregate PIT fidelity per cell.
pub fn run_experiment(config: &ExperimentConfig) -> Result<FidelityReport> {
    validate(config)?;
    let replications = build_replications(config)?;

    let etas: Vec<Option<f64>> = match &config.masking.mechanism {
        MechanismSpec::Mcar => vec![None],
        MechanismSpec::Mnar { eta_grid } => eta_grid.iter().copied().map(Some).collect(),
    };

    // (eta_idx, method_idx, policy_idx, metric_idx) -> accumulator; the
    // bootstrap ignores policies and sits at policy index usize::MAX.
    let mut cells: BTreeMap<(usize, usize, usize, usize), CellAccum> = BTreeMap::new();

    for (eta_idx, eta) in etas.iter().enumerate() {
        let mechanism = match eta {
            None => Mechanism::Mcar,
            Some(e) => Mechanism::Mnar {
                positive_fraction: *e,
            },
        };
        for rep in &replications {
            let masked = match mask_within(
                &rep.scores,
                &rep.labels,
                &rep.maskable,
                config.masking.p_m,
                mechanism,
                sub_seed(rep.seed_r, TAG_MASK, eta_idx as u64),
            ) {
                Ok(m) => m,
                Err(Error::MaskShortfall { .. }) | Err(Error::NothingMasked) => continue,
                Err(e) => return Err(e),
            };

            // Ground truth on the fully labeled frame.
            let mut truths: Vec<Option<f64>> = Vec::with_capacity(config.metrics.len());
            for &kind in &config.metrics {
                truths.push(metric_value(kind, &rep.labels, &rep.scores, config.tau)?);
            }

            // Label models per policy; a failed fit skips the policy's
            // cells for this replication.
            let mut models: Vec<Option<LabelModel>> = Vec::new();
            for policy in &config.policies {
                models.push(policy_model(policy, rep, &masked, config, eta_idx).ok());
            }

            for (method_idx, method) in config.methods.iter().enumerate() {
                let policy_range: Vec<usize> = match method {
                    MethodSpec::Bootstrap => vec![usize::MAX],
                    _ => (0..config.policies.len()).collect(),
                };
                for policy_idx in policy_range {
                    for (metric_idx, &kind) in config.metrics.iter().enumerate() {
                        let key = (eta_idx, method_idx, policy_idx, metric_idx);
                        let accum = cells.entry(key).or_default();
                        let Some(truth) = truths[metric_idx] else {
                            continue;
                        };
                        let outcome: Option<(f64, f64)> = match method {
                            MethodSpec::Bootstrap => bootstrap_baseline(
                                &masked,
                                kind,
                                config.tau,
                                config.bootstrap_b,
                                sub_seed(rep.seed_r, TAG_BOOT, (eta_idx * 64 + metric_idx) as u64),
                            )
                            .ok()
                            .map(|cdf| (pit_value(&cdf, truth), cdf.center())),
                            MethodSpec::Pemi { b } => {
                                models[policy_idx].as_ref().and_then(|model| {
                                    pemi(
                                        kind,
                                        &masked,
                                        model,
                                        *b,
                                        config.tau,
                                        sub_seed(
                                            rep.seed_r,
                                            TAG_PEMI,
                                            (policy_idx * 4096 + eta_idx * 64 + metric_idx)
                                                as u64,
                                        ),
                                    )
                                    .ok()
                                    .map(|cdf| (pit_value(&cdf, truth), cdf.center()))
                                })
                            }
                            MethodSpec::PemiGauss => {
                                models[policy_idx].as_ref().and_then(|model| {
                                    metric_gauss(
                                        kind,
                                        &masked,
                                        model,
                                        config.tau,
                                        sub_seed(
                                            rep.seed_r,
                                            TAG_GAUSS,
                                            (policy_idx * 4096 + eta_idx * 64 + metric_idx)
                                                as u64,
                                        ),
                                    )
                                    .ok()
                                    .map(|g| (pit_value(&g.cdf, truth), g.cdf.center()))
                                })
                            }
                        };
                        match outcome {
                            Some((pit, center)) => accum.units.push((pit, center, truth)),
                            None => accum.skipped += 1,
                        }
                    }
                }
            }
        }
    }

    let mut report = FidelityReport { cells: Vec::new() };
    for ((eta_idx, method_idx, policy_idx, metric_idx), accum) in cells {
        if accum.units.is_empty() {
            continue;
        }
        let (ks, w1, mae, rmse) = measures(&accum.units)?;
        let mut cell = FidelityCell {
            method: config.methods[method_idx].name(),
            policy: if policy_idx == usize::MAX {
                "none".into()
            } else {
                config.policies[policy_idx].name()
            },
            metric: config.metrics[metric_idx],
            eta: etas[eta_idx],
            replications: accum.units.len(),
            skipped: accum.skipped,
            ks,
            w1,
            mae,
            rmse,
            ks_ci: None,
            w1_ci: None,
            mae_ci: None,
            rmse_ci: None,
        };
        if config.ci_resamples > 0 && accum.units.len() >= 2 {
            let n = accum.units.len();
            let cell_tag = (eta_idx * 1_048_576 + method_idx * 16_384
                + (policy_idx % 128) * 128
                + metric_idx) as u64;
            let mut rng =
                ChaCha8Rng::seed_from_u64(sub_seed(config.seed, TAG_CI, cell_tag));
            let mut kss = Vec::with_capacity(config.ci_resamples);
            let mut w1s = Vec::with_capacity(config.ci_resamples);
            let mut maes = Vec::with_capacity(config.ci_resamples);
            let mut rmses = Vec::with_capacity(config.ci_resamples);
            let mut resample = Vec::with_capacity(n);
            for _ in 0..config.ci_resamples {
                resample.clear();
                for _ in 0..n {
                    resample.push(accum.units[rand::Rng::random_range(&mut rng, 0..n)]);
                }
                let (k, w, m, r) = measures(&resample)?;
                kss.push(k);
                w1s.push(w);
                maes.push(m);
                rmses.push(r);
            }
            let lo_q = (1.0 - config.ci_alpha) / 2.0;
            let hi_q = 1.0 - lo_q;
            for (values, slot) in [
                (&mut kss, &mut cell.ks_ci),
                (&mut w1s, &mut cell.w1_ci),
                (&mut maes, &mut cell.mae_ci),
                (&mut rmses, &mut cell.rmse_ci),
            ] {
                values.sort_by(f64::total_cmp);
                *slot = Some((percentile(values, lo_q), percentile(values, hi_q)));
            }
        }
        report.cells.push(cell);
    }
    Ok(report)
}
