//! Deterministic metric evaluation on a fully resolved label assignment:
//! threshold classifier, confusion counts, and the five supported metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The supported evaluation metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Precision,
    Recall,
    Accuracy,
    F1,
    RocAuc,
}

impl MetricKind {
    pub const ALL: [MetricKind; 5] = [
        MetricKind::Precision,
        MetricKind::Recall,
        MetricKind::Accuracy,
        MetricKind::F1,
        MetricKind::RocAuc,
    ];

    /// Confusion-matrix metrics, i.e. everything except the rank-based AUC.
    pub fn is_cm_based(self) -> bool {
        !matches!(self, MetricKind::RocAuc)
    }

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Precision => "precision",
            MetricKind::Recall => "recall",
            MetricKind::Accuracy => "accuracy",
            MetricKind::F1 => "f1",
            MetricKind::RocAuc => "roc-auc",
        }
    }
}

impl std::str::FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "precision" => Ok(MetricKind::Precision),
            "recall" => Ok(MetricKind::Recall),
            "accuracy" => Ok(MetricKind::Accuracy),
            "f1" => Ok(MetricKind::F1),
            "roc-auc" | "rocauc" | "auc" => Ok(MetricKind::RocAuc),
            other => Err(Error::invalid(format!("unknown metric '{other}'"))),
        }
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Confusion counts for one label assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn add(&mut self, label: bool, pred: bool) {
        match (label, pred) {
            (true, true) => self.tp += 1,
            (true, false) => self.fn_ += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
        }
    }
}

/// Threshold the scores into hard predictions: 1 iff score >= tau.
pub fn induce_classifier(scores: &[f64], tau: f64) -> Result<Vec<bool>> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidThreshold(tau));
    }
    Ok(scores.iter().map(|&s| s >= tau).collect())
}

/// Count confusion cells for resolved labels against hard predictions.
pub fn confusion_counts(labels: &[bool], preds: &[bool]) -> Result<ConfusionCounts> {
    if labels.len() != preds.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: preds.len(),
        });
    }
    let mut counts = ConfusionCounts::default();
    for (&label, &pred) in labels.iter().zip(preds) {
        counts.add(label, pred);
    }
    Ok(counts)
}

/// Metric value from confusion counts; `None` when the denominator is zero.
pub fn cm_metric(kind: MetricKind, counts: &ConfusionCounts) -> Option<f64> {
    let (tp, fn_, fp, tn) = (
        counts.tp as f64,
        counts.fn_ as f64,
        counts.fp as f64,
        counts.tn as f64,
    );
    let ratio = |num: f64, den: f64| if den > 0.0 { Some(num / den) } else { None };
    match kind {
        MetricKind::Precision => ratio(tp, tp + fp),
        MetricKind::Recall => ratio(tp, tp + fn_),
        MetricKind::Accuracy => ratio(tp + tn, tp + fn_ + fp + tn),
        MetricKind::F1 => ratio(2.0 * tp, 2.0 * tp + fp + fn_),
        MetricKind::RocAuc => None,
    }
}

/// Score order with tie groups, precomputed once so that rank-based metrics
/// cost O(n) per label assignment.
#[derive(Debug, Clone)]
pub struct ScoreOrder {
    /// Indices sorted by ascending score.
    sorted: Vec<usize>,
    /// Start offsets of equal-score groups in `sorted`, terminated by n.
    group_starts: Vec<usize>,
}

impl ScoreOrder {
    pub fn new(scores: &[f64]) -> Self {
        let mut sorted: Vec<usize> = (0..scores.len()).collect();
        sorted.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
        let mut group_starts = Vec::new();
        let mut i = 0;
        while i < sorted.len() {
            group_starts.push(i);
            let v = scores[sorted[i]];
            while i < sorted.len() && scores[sorted[i]] == v {
                i += 1;
            }
        }
        group_starts.push(sorted.len());
        ScoreOrder {
            sorted,
            group_starts,
        }
    }

    /// AUC with ties counted as concordant: the pair indicator is a plain
    /// score_i >= score_j, so positives tied with negatives score full
    /// weight rather than the Mann-Whitney half.
    ///
    /// Walking ascending tie groups, each positive in a group is concordant
    /// with every negative at or below the group.
    pub fn auc(&self, labels: &[bool]) -> Option<f64> {
        self.auc_weighted(labels, None)
    }

    /// As [`Self::auc`], with optional per-record multiplicities (used by
    /// bootstrap resampling; `None` means all weights are one).
    pub fn auc_weighted(&self, labels: &[bool], weights: Option<&[u64]>) -> Option<f64> {
        let weight = |i: usize| weights.map_or(1, |w| w[i]);
        let mut num: u128 = 0;
        let mut negs_below: u128 = 0;
        let mut total_pos: u128 = 0;
        let mut total_neg: u128 = 0;
        for g in 0..self.group_starts.len() - 1 {
            let group = &self.sorted[self.group_starts[g]..self.group_starts[g + 1]];
            let mut group_pos: u128 = 0;
            let mut group_neg: u128 = 0;
            for &i in group {
                if labels[i] {
                    group_pos += weight(i) as u128;
                } else {
                    group_neg += weight(i) as u128;
                }
            }
            num += group_pos * (negs_below + group_neg);
            negs_below += group_neg;
            total_pos += group_pos;
            total_neg += group_neg;
        }
        let den = total_pos * total_neg;
        if den == 0 {
            None
        } else {
            Some(num as f64 / den as f64)
        }
    }
}

/// Evaluate a metric on fully resolved labels. Returns `None` when the
/// metric's denominator is zero; that is a value, not an error.
pub fn metric_value(
    kind: MetricKind,
    labels: &[bool],
    scores: &[f64],
    tau: f64,
) -> Result<Option<f64>> {
    if labels.len() != scores.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: scores.len(),
        });
    }
    match kind {
        MetricKind::RocAuc => Ok(ScoreOrder::new(scores).auc(labels)),
        _ => {
            let preds = induce_classifier(scores, tau)?;
            let counts = confusion_counts(labels, &preds)?;
            Ok(cm_metric(kind, &counts))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Literal double sum over ordered pairs; the reference the fast walk
    /// must match.
    fn auc_pair_sum(labels: &[bool], scores: &[f64]) -> Option<f64> {
        let n = labels.len();
        let mut num = 0u64;
        let mut den = 0u64;
        for i in 0..n {
            for j in 0..n {
                if labels[i] && !labels[j] {
                    den += 1;
                    if scores[i] >= scores[j] {
                        num += 1;
                    }
                }
            }
        }
        if den == 0 {
            None
        } else {
            Some(num as f64 / den as f64)
        }
    }

    #[test]
    fn classifier_boundary_uses_geq() {
        let preds = induce_classifier(&[0.9, 0.5, 0.1], 0.5).unwrap();
        assert_eq!(preds, vec![true, true, false]);
    }

    #[test]
    fn classifier_all_zero_scores() {
        let preds = induce_classifier(&[0.0, 0.0], 0.5).unwrap();
        assert_eq!(preds, vec![false, false]);
    }

    #[test]
    fn classifier_rejects_closed_interval_endpoints() {
        assert!(induce_classifier(&[0.5], 0.0).is_err());
        assert!(induce_classifier(&[0.5], 1.0).is_err());
    }

    #[test]
    fn confusion_direct_count() {
        let c = confusion_counts(&[true, true, false, false], &[true, false, true, false])
            .unwrap();
        assert_eq!(
            c,
            ConfusionCounts {
                tp: 1,
                fn_: 1,
                fp: 1,
                tn: 1
            }
        );

        let c = confusion_counts(&[true, true], &[true, true]).unwrap();
        assert_eq!(
            c,
            ConfusionCounts {
                tp: 2,
                fn_: 0,
                fp: 0,
                tn: 0
            }
        );

        let c = confusion_counts(&[true, false, true], &[false, true, false]).unwrap();
        assert_eq!(
            c,
            ConfusionCounts {
                tp: 0,
                fn_: 2,
                fp: 1,
                tn: 0
            }
        );
    }

    #[test]
    fn confusion_rejects_length_mismatch() {
        assert!(confusion_counts(&[true], &[true, false]).is_err());
    }

    #[test]
    fn table_formulas_on_a_small_case() {
        // labels (1,1,0), scores (0.9,0.4,0.8), tau=0.5 -> preds (1,0,1).
        let labels = [true, true, false];
        let scores = [0.9, 0.4, 0.8];
        let get = |kind| metric_value(kind, &labels, &scores, 0.5).unwrap().unwrap();
        assert!((get(MetricKind::Precision) - 0.5).abs() < 1e-15);
        assert!((get(MetricKind::Recall) - 0.5).abs() < 1e-15);
        assert!((get(MetricKind::Accuracy) - 1.0 / 3.0).abs() < 1e-15);
        assert!((get(MetricKind::F1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn auc_perfect_separation() {
        let v = metric_value(MetricKind::RocAuc, &[true, false], &[0.9, 0.1], 0.5)
            .unwrap()
            .unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn auc_tie_counts_as_concordant() {
        let v = metric_value(MetricKind::RocAuc, &[true, false], &[0.5, 0.5], 0.5)
            .unwrap()
            .unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn auc_inverted_ranking_is_zero() {
        let v = metric_value(MetricKind::RocAuc, &[false, true], &[0.9, 0.1], 0.5)
            .unwrap()
            .unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn undefined_when_denominator_vanishes() {
        let labels = [false, false];
        let scores = [0.9, 0.1];
        assert!(metric_value(MetricKind::Recall, &labels, &scores, 0.5)
            .unwrap()
            .is_none());
        assert!(metric_value(MetricKind::RocAuc, &labels, &scores, 0.5)
            .unwrap()
            .is_none());
        // No predicted positives -> precision undefined.
        assert!(metric_value(MetricKind::Precision, &labels, &[0.1, 0.2], 0.9)
            .unwrap()
            .is_none());
    }

    #[test]
    fn f1_is_harmonic_mean_of_precision_and_recall() {
        let labels = [true, false, true, true, false, false, true];
        let scores = [0.8, 0.7, 0.6, 0.2, 0.9, 0.1, 0.55];
        let p = metric_value(MetricKind::Precision, &labels, &scores, 0.5)
            .unwrap()
            .unwrap();
        let r = metric_value(MetricKind::Recall, &labels, &scores, 0.5)
            .unwrap()
            .unwrap();
        let f1 = metric_value(MetricKind::F1, &labels, &scores, 0.5)
            .unwrap()
            .unwrap();
        assert!((f1 - 2.0 * p * r / (p + r)).abs() < 1e-12);
    }

    #[test]
    fn fast_auc_matches_pair_sum_with_ties() {
        let mut state = 0x1234_5678_u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            state
        };
        for _ in 0..200 {
            let n = 2 + (next() % 12) as usize;
            // Coarse score grid to force plenty of ties.
            let scores: Vec<f64> = (0..n).map(|_| (next() % 5) as f64 / 4.0).collect();
            let labels: Vec<bool> = (0..n).map(|_| next() % 2 == 0).collect();
            let fast = ScoreOrder::new(&scores).auc(&labels);
            let slow = auc_pair_sum(&labels, &scores);
            match (fast, slow) {
                (None, None) => {}
                (Some(a), Some(b)) => assert!((a - b).abs() < 1e-12, "{a} vs {b}"),
                other => panic!("disagreement: {other:?}"),
            }
        }
    }
}
