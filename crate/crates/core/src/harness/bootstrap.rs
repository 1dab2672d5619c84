//! Bootstrap baseline: the metric's resampling distribution on the
//! nonmissing records only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::MaskedDataset;
use crate::error::{Error, Result};
use crate::mc::EmpiricalCdf;
use crate::metrics::{cm_metric, induce_classifier, ConfusionCounts, MetricKind, ScoreOrder};
use crate::seed::derive_seed;

/// Replicate count recommended for bootstrap baselines.
pub const BOOTSTRAP_DEFAULT_B: u64 = 10_000;

/// Resample the k known records with replacement `b` times and evaluate the
/// metric per resample. Multiplicity counting keeps each replicate O(k)
/// after one global sort. Undefined resamples are counted and excluded.
pub fn bootstrap_baseline(
    data: &MaskedDataset,
    kind: MetricKind,
    tau: f64,
    b: u64,
    seed: u64,
) -> Result<EmpiricalCdf> {
    if b == 0 {
        return Err(Error::ZeroReplicates);
    }
    let known = data.known_indices();
    let k = known.len();
    if k < 2 {
        return Err(Error::invalid(format!(
            "bootstrap needs at least 2 known records, have {k}"
        )));
    }
    let scores: Vec<f64> = known.iter().map(|&i| data.score(i)).collect();
    let labels: Vec<bool> = known
        .iter()
        .map(|&i| data.observed(i).expect("known"))
        .collect();
    let preds = induce_classifier(&scores, tau)?;
    let order = match kind {
        MetricKind::RocAuc => Some(ScoreOrder::new(&scores)),
        _ => None,
    };

    let replicates: Vec<Option<f64>> = (0..b)
        .into_par_iter()
        .map_init(
            || vec![0u64; k],
            |counts, r| {
                counts.fill(0);
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r));
                for _ in 0..k {
                    counts[rng.random_range(0..k)] += 1;
                }
                match &order {
                    Some(order) => order.auc_weighted(&labels, Some(counts)),
                    None => {
                        let mut cm = ConfusionCounts::default();
                        for i in 0..k {
                            let c = counts[i];
                            if c == 0 {
                                continue;
                            }
                            match (labels[i], preds[i]) {
                                (true, true) => cm.tp += c,
                                (true, false) => cm.fn_ += c,
                                (false, true) => cm.fp += c,
                                (false, false) => cm.tn += c,
                            }
                        }
                        cm_metric(kind, &cm)
                    }
                }
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
