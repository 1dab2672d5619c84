//! Masking generators: hide labels from a fully labeled record list, either
//! completely at random or with a controlled class composition, keeping the
//! hidden labels in the truth channel.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::MaskedDataset;
use crate::error::{Error, Result};

/// Missingness mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Mechanism {
    Mcar,
    /// Not-at-random: the masked set carries this fraction of positives.
    Mnar { positive_fraction: f64 },
}

/// A masking request: mechanism, missing fraction, seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskingSpec {
    pub mechanism: Mechanism,
    pub p_m: f64,
    pub seed: u64,
}

impl MaskingSpec {
    pub fn apply(&self, scores: &[f64], labels: &[bool]) -> Result<MaskedDataset> {
        match self.mechanism {
            Mechanism::Mcar => mask_mcar(scores, labels, self.p_m, self.seed),
            Mechanism::Mnar { positive_fraction } => {
                mask_mnar(scores, labels, self.p_m, positive_fraction, self.seed)
            }
        }
    }
}

fn build_masked(
    scores: &[f64],
    labels: &[bool],
    masked: &[usize],
) -> Result<MaskedDataset> {
    let mut observed: Vec<Option<bool>> = labels.iter().copied().map(Some).collect();
    for &i in masked {
        observed[i] = None;
    }
    let truths: Vec<Option<bool>> = labels.iter().copied().map(Some).collect();
    MaskedDataset::from_parts(scores.to_vec(), observed, truths)
}

/// Choose the indices to mask inside `subset` (experiment sub-folds mask a
/// subset while the estimators see the whole frame).
pub(crate) fn masked_indices_within(
    subset: &[usize],
    labels: &[bool],
    p_m: f64,
    mechanism: Mechanism,
    seed: u64,
) -> Result<Vec<usize>> {
    if !(p_m > 0.0 && p_m < 1.0) {
        return Err(Error::invalid(format!("p_m {p_m} outside (0, 1)")));
    }
    let count = (p_m * subset.len() as f64).round() as usize;
    if count == 0 {
        return Err(Error::NothingMasked);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match mechanism {
        Mechanism::Mcar => {
            let mut idx = subset.to_vec();
            idx.shuffle(&mut rng);
            idx.truncate(count);
            Ok(idx)
        }
        Mechanism::Mnar { positive_fraction } => {
            if !(positive_fraction > 0.0 && positive_fraction < 1.0) {
                return Err(Error::invalid(format!(
                    "positive fraction {positive_fraction} outside (0, 1)"
                )));
            }
            let pos_needed = (positive_fraction * count as f64).ceil() as usize;
            let neg_needed = count - pos_needed;
            let mut pos: Vec<usize> = subset.iter().copied().filter(|&i| labels[i]).collect();
            let mut neg: Vec<usize> = subset.iter().copied().filter(|&i| !labels[i]).collect();
            if pos_needed > pos.len() {
                return Err(Error::MaskShortfall {
                    class: "positive",
                    needed: pos_needed,
                    available: pos.len(),
                });
            }
            if neg_needed > neg.len() {
                return Err(Error::MaskShortfall {
                    class: "negative",
                    needed: neg_needed,
                    available: neg.len(),
                });
            }
            pos.shuffle(&mut rng);
            neg.shuffle(&mut rng);
            let mut masked: Vec<usize> = pos[..pos_needed].to_vec();
            masked.extend_from_slice(&neg[..neg_needed]);
            Ok(masked)
        }
    }
}

/// Mask within a subset and assemble the dataset over the whole frame.
pub(crate) fn mask_within(
    scores: &[f64],
    labels: &[bool],
    subset: &[usize],
    p_m: f64,
    mechanism: Mechanism,
    seed: u64,
) -> Result<MaskedDataset> {
    let masked = masked_indices_within(subset, labels, p_m, mechanism, seed)?;
    if masked.len() >= scores.len() {
        return Err(Error::NothingKnown);
    }
    build_masked(scores, labels, &masked)
}

fn mask_count(p_m: f64, n: usize) -> Result<usize> {
    if !(p_m > 0.0 && p_m < 1.0) {
        return Err(Error::invalid(format!("p_m {p_m} outside (0, 1)")));
    }
    let count = (p_m * n as f64).round() as usize;
    if count == 0 {
        return Err(Error::NothingMasked);
    }
    if count >= n {
        return Err(Error::NothingKnown);
    }
    Ok(count)
}

/// Hide round(p_m * n) labels chosen uniformly without replacement.
pub fn mask_mcar(scores: &[f64], labels: &[bool], p_m: f64, seed: u64) -> Result<MaskedDataset> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    let n = scores.len();
    let count = mask_count(p_m, n)?;
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    build_masked(scores, labels, &idx[..count])
}

/// Hide round(p_m * n) labels with exactly ceil(positive_fraction * count)
/// positives, sampled uniformly within each class.
pub fn mask_mnar(
    scores: &[f64],
    labels: &[bool],
    p_m: f64,
    positive_fraction: f64,
    seed: u64,
) -> Result<MaskedDataset> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if !(positive_fraction > 0.0 && positive_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "positive fraction {positive_fraction} outside (0, 1)"
        )));
    }
    let n = scores.len();
    let count = mask_count(p_m, n)?;
    let pos_needed = (positive_fraction * count as f64).ceil() as usize;
    let neg_needed = count - pos_needed;

    let mut pos: Vec<usize> = (0..n).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..n).filter(|&i| !labels[i]).collect();
    if pos_needed > pos.len() {
        return Err(Error::MaskShortfall {
            class: "positive",
            needed: pos_needed,
            available: pos.len(),
        });
    }
    if neg_needed > neg.len() {
        return Err(Error::MaskShortfall {
            class: "negative",
            needed: neg_needed,
            available: neg.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut masked: Vec<usize> = pos[..pos_needed].to_vec();
    masked.extend_from_slice(&neg[..neg_needed]);
    build_masked(scores, labels, &masked)
}
