//! Monte-Carlo multiple imputation: sample label scenarios from the
//! Bernoulli model, evaluate the metric per replicate, and collect the
//! empirical cdf.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::MaskedDataset;
use crate::error::{Error, Result};
use crate::labels::LabelModel;
use crate::metrics::{cm_metric, confusion_counts, induce_classifier, ConfusionCounts, MetricKind, ScoreOrder};
use crate::seed::derive_seed;

/// Empirical cdf over metric replicates. Undefined replicates are counted
/// but excluded from the samples, so evaluation conditions on definedness.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    samples: Vec<f64>,
    undefined_count: u64,
    total: u64,
}

/// Fixed quantile summary emitted with reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CdfSummary {
    pub count: u64,
    pub undefined_count: u64,
    pub mean: f64,
    pub p01: f64,
    pub p05: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
    pub p99: f64,
}

impl EmpiricalCdf {
    pub fn from_samples(mut samples: Vec<f64>, undefined_count: u64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::AllUndefined {
                count: undefined_count,
            });
        }
        samples.sort_by(f64::total_cmp);
        let total = samples.len() as u64 + undefined_count;
        Ok(EmpiricalCdf {
            samples,
            undefined_count,
            total,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn undefined_count(&self) -> u64 {
        self.undefined_count
    }

    /// Total replicates, including undefined ones.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Right-continuous step evaluation: (# samples <= t) / #samples.
    pub fn eval(&self, t: f64) -> f64 {
        let le = self.samples.partition_point(|&x| x <= t);
        le as f64 / self.samples.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let n = self.samples.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.mean();
        self.samples
            .iter()
            .map(|&x| (x - mean) * (x - mean))
            .sum::<f64>()
            / (n - 1) as f64
    }

    /// Order-statistic quantile for q in (0, 1].
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.samples.len();
        let idx = ((q * n as f64).ceil() as usize).max(1).min(n) - 1;
        self.samples[idx]
    }

    pub fn summary(&self) -> CdfSummary {
        CdfSummary {
            count: self.samples.len() as u64,
            undefined_count: self.undefined_count,
            mean: self.mean(),
            p01: self.quantile(0.01),
            p05: self.quantile(0.05),
            p25: self.quantile(0.25),
            p50: self.quantile(0.50),
            p75: self.quantile(0.75),
            p95: self.quantile(0.95),
            p99: self.quantile(0.99),
        }
    }

    /// One sample per row under a `value` header.
    pub fn write_values_csv<W: std::io::Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "value")?;
        for v in &self.samples {
            writeln!(writer, "{v}")?;
        }
        Ok(())
    }
}

/// Right-continuous step evaluation of an empirical cdf at `t`.
pub fn cdf_eval(cdf: &EmpiricalCdf, t: f64) -> f64 {
    cdf.eval(t)
}

/// Per-scenario metric evaluator with the known-label work hoisted out of
/// the replicate loop: confusion metrics cost O(missing) per replicate and
/// the rank metric one O(n) walk over a precomputed score order.
pub(crate) enum ScenarioEvaluator {
    Cm {
        kind: MetricKind,
        base: ConfusionCounts,
        psi_missing: Vec<bool>,
    },
    Auc {
        order: ScoreOrder,
        template: Vec<bool>,
        missing: Vec<usize>,
    },
}

impl ScenarioEvaluator {
    pub(crate) fn new(data: &MaskedDataset, kind: MetricKind, tau: f64) -> Result<Self> {
        let scores = data.scores();
        match kind {
            MetricKind::RocAuc => {
                let mut template = vec![false; data.n()];
                for &i in data.known_indices() {
                    template[i] = data.observed(i).expect("known");
                }
                Ok(ScenarioEvaluator::Auc {
                    order: ScoreOrder::new(&scores),
                    template,
                    missing: data.missing_indices().to_vec(),
                })
            }
            _ => {
                let preds = induce_classifier(&scores, tau)?;
                let known_labels: Vec<bool> = data
                    .known_indices()
                    .iter()
                    .map(|&i| data.observed(i).expect("known"))
                    .collect();
                let known_preds: Vec<bool> =
                    data.known_indices().iter().map(|&i| preds[i]).collect();
                let base = confusion_counts(&known_labels, &known_preds)?;
                let psi_missing = data.missing_indices().iter().map(|&i| preds[i]).collect();
                Ok(ScenarioEvaluator::Cm {
                    kind,
                    base,
                    psi_missing,
                })
            }
        }
    }

    pub(crate) fn scratch(&self) -> Vec<bool> {
        match self {
            ScenarioEvaluator::Cm { .. } => Vec::new(),
            ScenarioEvaluator::Auc { template, .. } => template.clone(),
        }
    }

    /// Evaluate one scenario; `assignment` holds the sampled labels in
    /// missing-index order and `scratch` is per-worker state from
    /// [`Self::scratch`].
    pub(crate) fn eval(&self, assignment: &[bool], scratch: &mut [bool]) -> Option<f64> {
        match self {
            ScenarioEvaluator::Cm {
                kind,
                base,
                psi_missing,
            } => {
                let mut counts = *base;
                for (&label, &pred) in assignment.iter().zip(psi_missing) {
                    counts.add(label, pred);
                }
                cm_metric(*kind, &counts)
            }
            ScenarioEvaluator::Auc { order, missing, .. } => {
                for (&i, &s) in missing.iter().zip(assignment) {
                    scratch[i] = s;
                }
                order.auc(scratch)
            }
        }
    }
}

/// Monte-Carlo multiple imputation: draw `b` label scenarios, evaluate the
/// metric on each, and return the empirical cdf of the defined values.
///
/// Replicate `r` uses an rng seeded with `derive_seed(seed, r)`, so the
/// returned sample multiset is identical for any worker count.
pub fn pemi(
    kind: MetricKind,
    data: &MaskedDataset,
    model: &LabelModel,
    b: u64,
    tau: f64,
    seed: u64,
) -> Result<EmpiricalCdf> {
    if b == 0 {
        return Err(Error::ZeroReplicates);
    }
    if !model.matches(data) {
        return Err(Error::ModelDomainMismatch);
    }
    let evaluator = ScenarioEvaluator::new(data, kind, tau)?;
    let ps: Vec<f64> = model.iter().map(|(_, p)| p).collect();

    let replicates: Vec<Option<f64>> = (0..b)
        .into_par_iter()
        .map_init(
            || (evaluator.scratch(), vec![false; ps.len()]),
            |(scratch, assignment), r| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r));
                for (slot, &p) in assignment.iter_mut().zip(&ps) {
                    *slot = rng.random::<f64>() < p;
                }
                evaluator.eval(assignment, scratch)
            },
        )
        .collect();

    let mut samples = Vec::with_capacity(replicates.len());
    let mut undefined = 0u64;
    for value in replicates {
        match value {
            Some(v) => samples.push(v),
            None => undefined += 1,
        }
    }
    EmpiricalCdf::from_samples(samples, undefined)
}
