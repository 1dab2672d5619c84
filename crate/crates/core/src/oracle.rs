//! Exact brute force over the 2^m scenario set: full metric distribution,
//! its moments, and the substitution bounds. This is the ground-truth oracle
//! the approximation modules are tested against.

use crate::dataset::MaskedDataset;
use crate::error::{Error, Result};
use crate::labels::LabelModel;
use crate::metrics::{metric_value, MetricKind, ScoreOrder};

/// Default limit on missing labels for enumeration (about 10^6 scenarios).
pub const DEFAULT_SCENARIO_CAP: usize = 20;

/// Values two scenario outcomes may differ by and still be merged into one
/// support point.
const VALUE_MERGE_TOL: f64 = 1e-12;

/// Exact distribution of a metric over all scenarios.
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    /// (value, mass) sorted by strictly increasing value.
    pub support: Vec<(f64, f64)>,
    /// Probability of scenarios where the metric is undefined.
    pub undefined_mass: f64,
}

impl ExactDistribution {
    pub fn defined_mass(&self) -> f64 {
        self.support.iter().map(|&(_, m)| m).sum()
    }

    /// Right-continuous cdf over the defined values, renormalized to the
    /// defined mass (matching how sampling excludes undefined replicates).
    pub fn cdf(&self, t: f64) -> f64 {
        let defined = self.defined_mass();
        let mut acc = 0.0;
        for &(v, m) in &self.support {
            if v <= t {
                acc += m;
            } else {
                break;
            }
        }
        acc / defined
    }

    pub fn min_value(&self) -> Option<f64> {
        self.support.first().map(|&(v, _)| v)
    }

    pub fn max_value(&self) -> Option<f64> {
        self.support.last().map(|&(v, _)| v)
    }
}

/// Compose a full label vector: observed labels on the known set, the given
/// assignment (in missing-index order) elsewhere.
pub fn scenario_labels(data: &MaskedDataset, assignment: &[bool]) -> Vec<bool> {
    debug_assert_eq!(assignment.len(), data.missing_indices().len());
    let mut labels = vec![false; data.n()];
    for &i in data.known_indices() {
        labels[i] = data.observed(i).expect("known index has a label");
    }
    for (&i, &s) in data.missing_indices().iter().zip(assignment) {
        labels[i] = s;
    }
    labels
}

/// Enumerate every scenario under the default cap.
pub fn enumerate_distribution(
    data: &MaskedDataset,
    model: &LabelModel,
    kind: MetricKind,
    tau: f64,
) -> Result<ExactDistribution> {
    enumerate_distribution_capped(data, model, kind, tau, DEFAULT_SCENARIO_CAP)
}

/// Enumerate every scenario; the scenario mass is the product of the
/// per-record Bernoulli masses.
pub fn enumerate_distribution_capped(
    data: &MaskedDataset,
    model: &LabelModel,
    kind: MetricKind,
    tau: f64,
    cap: usize,
) -> Result<ExactDistribution> {
    if !model.matches(data) {
        return Err(Error::ModelDomainMismatch);
    }
    let missing = data.missing_indices();
    let m = missing.len();
    if m > cap {
        return Err(Error::ScenarioCapExceeded { missing: m, cap });
    }
    let ps: Vec<f64> = missing
        .iter()
        .map(|&i| model.get(i).expect("domain checked"))
        .collect();
    let scores = data.scores();
    let order = match kind {
        MetricKind::RocAuc => Some(ScoreOrder::new(&scores)),
        _ => None,
    };

    let mut outcomes: Vec<(f64, f64)> = Vec::new();
    let mut undefined_mass = 0.0;
    let mut assignment = vec![false; m];
    let mut labels = scenario_labels(data, &assignment);

    for code in 0u64..(1u64 << m) {
        let mut mass = 1.0;
        for (bit, (&idx, &p)) in missing.iter().zip(&ps).enumerate() {
            let s = (code >> bit) & 1 == 1;
            assignment[bit] = s;
            labels[idx] = s;
            mass *= if s { p } else { 1.0 - p };
        }
        let value = match &order {
            Some(order) => order.auc(&labels),
            None => metric_value(kind, &labels, &scores, tau)?,
        };
        match value {
            Some(v) => outcomes.push((v, mass)),
            None => undefined_mass += mass,
        }
    }

    outcomes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut support: Vec<(f64, f64)> = Vec::new();
    for (v, mass) in outcomes {
        match support.last_mut() {
            Some((last_v, last_m)) if (v - *last_v).abs() <= VALUE_MERGE_TOL => *last_m += mass,
            _ => support.push((v, mass)),
        }
    }
    Ok(ExactDistribution {
        support,
        undefined_mass,
    })
}

/// Mean and variance of the defined part of the distribution, renormalized.
/// Centered two-pass sums keep the variance free of cancellation error.
pub fn exact_moments(dist: &ExactDistribution) -> Result<(f64, f64)> {
    let defined = dist.defined_mass();
    if dist.support.is_empty() || defined <= 0.0 {
        let total = dist.undefined_mass;
        return Err(Error::AllUndefined {
            count: total.round() as u64,
        });
    }
    let mean: f64 = dist.support.iter().map(|&(v, m)| v * m).sum::<f64>() / defined;
    let var: f64 = dist
        .support
        .iter()
        .map(|&(v, m)| m * (v - mean) * (v - mean))
        .sum::<f64>()
        / defined;
    Ok((mean, var))
}

/// Substitution bounds for confusion-matrix metrics: the optimistic scenario
/// sets every missing label to the classifier output, the pessimistic one to
/// its complement.
pub fn metric_bounds(data: &MaskedDataset, kind: MetricKind, tau: f64) -> Result<(f64, f64)> {
    if !kind.is_cm_based() {
        return Err(Error::BoundsNotApplicable);
    }
    let scores = data.scores();
    let preds: Vec<bool> = scores.iter().map(|&s| s >= tau).collect();
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidThreshold(tau));
    }

    let optimistic_assign: Vec<bool> = data.missing_indices().iter().map(|&i| preds[i]).collect();
    let pessimistic_assign: Vec<bool> =
        data.missing_indices().iter().map(|&i| !preds[i]).collect();

    let optimistic = metric_value(kind, &scenario_labels(data, &optimistic_assign), &scores, tau)?
        .ok_or(Error::BoundUndefined("optimistic"))?;
    let pessimistic = metric_value(
        kind,
        &scenario_labels(data, &pessimistic_assign),
        &scores,
        tau,
    )?
    .ok_or(Error::BoundUndefined("pessimistic"))?;
    Ok((pessimistic, optimistic))
}
