//! Bernoulli-parameter assignment for missing labels: the two MaxEnt
//! policies, a scaling-binning calibrator, and the Beta noise injector used
//! by the robustness checks.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::dataset::MaskedDataset;
use crate::error::{Error, Result};

/// Clamp width keeping every Bernoulli parameter strictly inside (0, 1).
pub const PROB_EPS: f64 = 1e-6;

/// Bernoulli parameter p_i for every missing index of a dataset.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelModel {
    p: BTreeMap<usize, f64>,
}

impl LabelModel {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut p = BTreeMap::new();
        for (i, v) in pairs {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidProbability(v));
            }
            p.insert(i, v);
        }
        Ok(LabelModel { p })
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.p.get(&i).copied()
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Iterate (index, p) in ascending index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.p.iter().map(|(&i, &v)| (i, v))
    }

    /// True when the domain is exactly the dataset's missing index set.
    pub fn matches(&self, data: &MaskedDataset) -> bool {
        self.p.len() == data.missing_indices().len()
            && data.missing_indices().iter().all(|i| self.p.contains_key(i))
    }

    /// v* = min_i p_i (1 - p_i); `None` for an empty model.
    pub fn v_star(&self) -> Option<f64> {
        self.p
            .values()
            .map(|&p| p * (1.0 - p))
            .min_by(f64::total_cmp)
    }

    /// Write as CSV with columns (index, p).
    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "index,p")?;
        for (i, p) in self.iter() {
            writeln!(writer, "{i},{p}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut pairs = Vec::new();
        for (row, line) in reader.lines().enumerate() {
            let line = line?;
            if row == 0 || line.trim().is_empty() {
                continue;
            }
            let mut parts = line.splitn(2, ',');
            let idx: usize = parts
                .next()
                .unwrap_or_default()
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad index on row {}", row + 1)))?;
            let p: f64 = parts
                .next()
                .unwrap_or_default()
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad probability on row {}", row + 1)))?;
            pairs.push((idx, p));
        }
        LabelModel::from_pairs(pairs)
    }
}

/// p_i = 1/2 for every missing label (maximum entropy, no constraints).
pub fn assign_maxent_half(data: &MaskedDataset) -> LabelModel {
    let p = data.missing_indices().iter().map(|&i| (i, 0.5)).collect();
    LabelModel { p }
}

/// p_i = n_pos / n_total for every missing label (maximum entropy with the
/// training-set mean imposed).
pub fn assign_maxent_prevalence(
    data: &MaskedDataset,
    n_pos: usize,
    n_total: usize,
) -> Result<LabelModel> {
    if n_pos == 0 || n_pos >= n_total {
        return Err(Error::InvalidProbability(if n_total == 0 {
            f64::NAN
        } else {
            n_pos as f64 / n_total as f64
        }));
    }
    let rate = n_pos as f64 / n_total as f64;
    Ok(LabelModel {
        p: data.missing_indices().iter().map(|&i| (i, rate)).collect(),
    })
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    (p / (1.0 - p)).ln()
}

/// Scaling-binning calibrator: a monotone logistic-in-logit scaler followed
/// by equal-mass binning, with each bin replaced by the mean scaled score it
/// contains.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingBinningCalibrator {
    /// Slope of the logistic recalibration (constrained nonnegative so the
    /// scaler stays monotone).
    pub slope: f64,
    /// Intercept of the logistic recalibration.
    pub intercept: f64,
    /// bins + 1 nondecreasing edges spanning [0, 1].
    pub bin_edges: Vec<f64>,
    /// Mean scaled score per bin.
    pub bin_values: Vec<f64>,
}

impl ScalingBinningCalibrator {
    pub fn bins(&self) -> usize {
        self.bin_values.len()
    }

    /// The monotone scaling step alone.
    pub fn scale(&self, score: f64) -> f64 {
        sigmoid(self.slope * logit(score) + self.intercept)
    }

    fn bin_of(&self, scaled: f64) -> usize {
        // Number of interior edges <= scaled; duplicate edges (empty bins)
        // resolve to the last bin of the tie, which is the one holding mass.
        let interior = &self.bin_edges[1..self.bin_edges.len() - 1];
        interior.partition_point(|&e| e <= scaled)
    }

    /// Calibrated probability estimate for a raw score.
    pub fn apply(&self, score: f64) -> f64 {
        self.bin_values[self.bin_of(self.scale(score))]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Fit a two-parameter logistic recalibration by maximum likelihood with the
/// usual smoothed targets, via damped Newton iterations.
fn fit_logistic_scaler(feats: &[f64], labels: &[bool]) -> (f64, f64) {
    let n_pos = labels.iter().filter(|&&y| y).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    let t_pos = (n_pos + 1.0) / (n_pos + 2.0);
    let t_neg = 1.0 / (n_neg + 2.0);
    let targets: Vec<f64> = labels.iter().map(|&y| if y { t_pos } else { t_neg }).collect();

    let nll = |a: f64, b: f64| -> f64 {
        feats.iter().zip(&targets).fold(0.0, |acc, (&x, &t)| {
            let z = a * x + b;
            // log(1+e^z) - t z, stable for both signs of z
            let log1pe = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
            acc + log1pe - t * z
        })
    };

    let (mut a, mut b) = (1.0, 0.0);
    let mut f = nll(a, b);
    for _ in 0..200 {
        let (mut g0, mut g1) = (0.0, 0.0);
        let (mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0);
        for (&x, &t) in feats.iter().zip(&targets) {
            let s = sigmoid(a * x + b);
            let d = s - t;
            let w = (s * (1.0 - s)).max(1e-12);
            g0 += d * x;
            g1 += d;
            h00 += w * x * x;
            h01 += w * x;
            h11 += w;
        }
        h00 += 1e-9;
        h11 += 1e-9;
        let det = h00 * h11 - h01 * h01;
        if det.abs() < 1e-300 {
            break;
        }
        let da = (h11 * g0 - h01 * g1) / det;
        let db = (h00 * g1 - h01 * g0) / det;
        let mut step = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let cand = nll(a - step * da, b - step * db);
            if cand <= f {
                a -= step * da;
                b -= step * db;
                f = cand;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved || (da.abs() + db.abs()) * step < 1e-12 {
            break;
        }
    }

    if a < 0.0 {
        // Keep the scaler monotone; fall back to the intercept-only fit.
        let mean_t = targets.iter().sum::<f64>() / targets.len() as f64;
        (0.0, logit(mean_t))
    } else {
        (a, b)
    }
}

/// Fit a scaling-binning calibrator on a labeled calibration split.
pub fn fit_scaling_binning(
    scores: &[f64],
    labels: &[bool],
    bins: usize,
) -> Result<ScalingBinningCalibrator> {
    if bins == 0 {
        return Err(Error::invalid("bins must be >= 1"));
    }
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if scores.len() < bins {
        return Err(Error::TooFewSamples {
            samples: scores.len(),
            bins,
        });
    }
    let n_pos = labels.iter().filter(|&&y| y).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(Error::SingleClassCalibration);
    }

    let feats: Vec<f64> = scores.iter().map(|&s| logit(s)).collect();
    let (slope, intercept) = fit_logistic_scaler(&feats, labels);

    let mut scaled: Vec<f64> = scores
        .iter()
        .map(|&s| sigmoid(slope * logit(s) + intercept))
        .collect();
    scaled.sort_by(f64::total_cmp);
    let m = scaled.len();
    let mut bin_edges = Vec::with_capacity(bins + 1);
    bin_edges.push(0.0);
    for j in 1..bins {
        bin_edges.push(scaled[j * m / bins]);
    }
    bin_edges.push(1.0);

    let mut cal = ScalingBinningCalibrator {
        slope,
        intercept,
        bin_edges,
        bin_values: vec![f64::NAN; bins],
    };
    let mut sums = vec![0.0; bins];
    let mut counts = vec![0usize; bins];
    for &g in &scaled {
        let b = cal.bin_of(g);
        sums[b] += g;
        counts[b] += 1;
    }
    for b in 0..bins {
        if counts[b] > 0 {
            cal.bin_values[b] = sums[b] / counts[b] as f64;
        }
    }
    // Empty bins (duplicate quantile edges) inherit the nearest filled value.
    let mut last = None;
    for b in 0..bins {
        if cal.bin_values[b].is_nan() {
            if let Some(v) = last {
                cal.bin_values[b] = v;
            }
        } else {
            last = Some(cal.bin_values[b]);
        }
    }
    let mut next = None;
    for b in (0..bins).rev() {
        if cal.bin_values[b].is_nan() {
            if let Some(v) = next {
                cal.bin_values[b] = v;
            }
        } else {
            next = Some(cal.bin_values[b]);
        }
    }
    Ok(cal)
}

/// p_i = clamp(calibrator(score_i)) for every missing index.
pub fn calibrate_labels(cal: &ScalingBinningCalibrator, data: &MaskedDataset) -> LabelModel {
    let p = data
        .missing_indices()
        .iter()
        .map(|&i| {
            let v = cal.apply(data.score(i)).clamp(PROB_EPS, 1.0 - PROB_EPS);
            (i, v)
        })
        .collect();
    LabelModel { p }
}

/// Beta parameters matching a target mean `p` and variance `v`.
pub fn beta_params(p: f64, variance: f64) -> (f64, f64) {
    let k = p * (1.0 - p) / variance - 1.0;
    (k * p, k * (1.0 - p))
}

/// Replace each p_i by a draw from Beta(alpha_i, beta_i) with mean p_i and
/// the given variance. Requires variance < v* = min_i p_i (1 - p_i), the
/// condition under which every Beta is well formed.
pub fn beta_noise(model: &LabelModel, variance: f64, seed: u64) -> Result<LabelModel> {
    if model.is_empty() {
        return Ok(model.clone());
    }
    if !(variance > 0.0) {
        return Err(Error::invalid("noise variance must be positive"));
    }
    let v_star = model.v_star().expect("nonempty model");
    if variance >= v_star {
        return Err(Error::NoiseVarianceTooLarge { variance, v_star });
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut noised = BTreeMap::new();
    for (i, p) in model.iter() {
        let (alpha, beta) = beta_params(p, variance);
        let dist = Beta::new(alpha, beta)
            .map_err(|e| Error::invalid(format!("beta parameters for p={p}: {e}")))?;
        let draw: f64 = dist.sample(&mut rng);
        noised.insert(i, draw.clamp(PROB_EPS, 1.0 - PROB_EPS));
    }
    Ok(LabelModel { p: noised })
}

/// Expected calibration error over equal-width bins: the bin-mass-weighted
/// absolute gap between mean score and empirical positive rate.
pub fn binned_ece(scores: &[f64], labels: &[bool], bins: usize) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if scores.is_empty() || bins == 0 {
        return Err(Error::invalid("ece needs samples and at least one bin"));
    }
    let mut sum_score = vec![0.0; bins];
    let mut sum_label = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    for (&s, &y) in scores.iter().zip(labels) {
        let b = ((s * bins as f64) as usize).min(bins - 1);
        sum_score[b] += s;
        sum_label[b] += if y { 1.0 } else { 0.0 };
        count[b] += 1;
    }
    let n = scores.len() as f64;
    let mut ece = 0.0;
    for b in 0..bins {
        if count[b] > 0 {
            let c = count[b] as f64;
            ece += (c / n) * ((sum_score[b] - sum_label[b]) / c).abs();
        }
    }
    Ok(ece)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::MaskedDataset;
    use rand::Rng;

    fn toy(missing: &[usize], n: usize) -> MaskedDataset {
        let scores: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let observed: Vec<Option<bool>> = (0..n)
            .map(|i| {
                if missing.contains(&i) {
                    None
                } else {
                    Some(i % 2 == 0)
                }
            })
            .collect();
        let truths = vec![None; n];
        MaskedDataset::from_parts(scores, observed, truths).unwrap()
    }

    #[test]
    fn maxent_half_covers_missing_indices() {
        let data = toy(&[3, 7], 9);
        let model = assign_maxent_half(&data);
        assert_eq!(model.len(), 2);
        assert_eq!(model.get(3), Some(0.5));
        assert_eq!(model.get(7), Some(0.5));
        assert!(model.matches(&data));
    }

    #[test]
    fn maxent_half_empty_is_a_noop() {
        let data = toy(&[], 4);
        let model = assign_maxent_half(&data);
        assert!(model.is_empty());
        assert!(model.matches(&data));
    }

    #[test]
    fn prevalence_rate_and_guards() {
        let data = toy(&[1], 5);
        let model = assign_maxent_prevalence(&data, 40, 100).unwrap();
        assert_eq!(model.get(1), Some(0.4));
        assert!(assign_maxent_prevalence(&data, 0, 100).is_err());
        assert!(assign_maxent_prevalence(&data, 100, 100).is_err());
        let third = assign_maxent_prevalence(&data, 1, 3).unwrap();
        assert!((third.get(1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn calibrate_clamps_into_open_interval() {
        let cal = ScalingBinningCalibrator {
            slope: 1.0,
            intercept: 0.0,
            bin_edges: vec![0.0, 0.5, 1.0],
            bin_values: vec![0.0, 1.0],
        };
        let data = toy(&[0, 3], 4);
        let model = calibrate_labels(&cal, &data);
        assert_eq!(model.get(0), Some(PROB_EPS));
        assert_eq!(model.get(3), Some(1.0 - PROB_EPS));
    }

    #[test]
    fn calibrator_output_has_at_most_bins_values() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let scores: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
        let labels: Vec<bool> = scores.iter().map(|&s| rng.random::<f64>() < s).collect();
        let cal = fit_scaling_binning(&scores, &labels, 10).unwrap();
        let mut outputs: Vec<f64> = (0..1000)
            .map(|i| cal.apply(i as f64 / 999.0))
            .collect();
        outputs.sort_by(f64::total_cmp);
        outputs.dedup();
        assert!(outputs.len() <= 10, "{} distinct outputs", outputs.len());
        // Monotone in the input.
        let mut prev = f64::NEG_INFINITY;
        for i in 0..1000 {
            let v = cal.apply(i as f64 / 999.0);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn constant_scores_collapse_to_one_value() {
        let scores = vec![0.5; 40];
        let labels: Vec<bool> = (0..40).map(|i| i % 2 == 0).collect();
        let cal = fit_scaling_binning(&scores, &labels, 10).unwrap();
        let a = cal.apply(0.1);
        let b = cal.apply(0.5);
        let c = cal.apply(0.9);
        assert_eq!(a, b);
        assert!((b - c).abs() < 1e-12);
    }

    #[test]
    fn calibrator_guards() {
        let scores = vec![0.5; 5];
        assert!(matches!(
            fit_scaling_binning(&scores, &[true; 5], 3),
            Err(Error::SingleClassCalibration)
        ));
        assert!(matches!(
            fit_scaling_binning(&scores, &[true, false, true, false, true], 10),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn calibration_beats_squared_scores_on_holdout() {
        // Logistic data with a miscalibrated score channel s' = q^2.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut gen = |n: usize| {
            let mut scores = Vec::with_capacity(n);
            let mut labels = Vec::with_capacity(n);
            for _ in 0..n {
                let u: f64 = rng.random();
                let q = sigmoid(4.0 * u - 2.0);
                labels.push(rng.random::<f64>() < q);
                scores.push(q * q);
            }
            (scores, labels)
        };
        let (fit_scores, fit_labels) = gen(4000);
        let (test_scores, test_labels) = gen(4000);
        let cal = fit_scaling_binning(&fit_scores, &fit_labels, 10).unwrap();
        let calibrated: Vec<f64> = test_scores.iter().map(|&s| cal.apply(s)).collect();
        let raw_ece = binned_ece(&test_scores, &test_labels, 10).unwrap();
        let cal_ece = binned_ece(&calibrated, &test_labels, 10).unwrap();
        assert!(
            cal_ece < raw_ece,
            "calibrated ece {cal_ece} not below raw {raw_ece}"
        );
    }

    #[test]
    fn beta_parameter_formula() {
        let (alpha, beta) = beta_params(0.5, 0.0009);
        assert!((alpha - 138.3889).abs() < 5e-5, "{alpha}");
        assert!((beta - 138.3889).abs() < 5e-5, "{beta}");
    }

    #[test]
    fn beta_noise_variance_gate() {
        // v* = 0.001 * 0.999 = 0.000999.
        let model = LabelModel::from_pairs([(0, 0.001), (1, 0.999), (2, 0.4)]).unwrap();
        assert!((model.v_star().unwrap() - 0.000999).abs() < 1e-15);
        assert!(beta_noise(&model, 0.0009, 1).is_ok());
        match beta_noise(&model, 0.001, 1) {
            Err(Error::NoiseVarianceTooLarge { v_star, .. }) => {
                assert!((v_star - 0.000999).abs() < 1e-15)
            }
            other => panic!("expected NoiseVarianceTooLarge, got {other:?}"),
        }
    }

    #[test]
    fn beta_noise_concentrates_as_variance_vanishes() {
        let model =
            LabelModel::from_pairs((0..50).map(|i| (i, 0.2 + 0.6 * (i as f64) / 49.0))).unwrap();
        let noised = beta_noise(&model, 1e-8, 5).unwrap();
        for (i, p) in model.iter() {
            let q = noised.get(i).unwrap();
            assert!((q - p).abs() < 0.01, "index {i}: {q} vs {p}");
        }
    }

    #[test]
    fn beta_noise_preserves_the_mean() {
        // Sample mean over many draws stays within 4 * sqrt(v / reps) of p.
        let p = 0.3;
        let variance = 0.01;
        let reps = 100_000usize;
        let model = LabelModel::from_pairs((0..1).map(|i| (i, p))).unwrap();
        let mut sum = 0.0;
        for r in 0..reps {
            let noised = beta_noise(&model, variance, r as u64).unwrap();
            sum += noised.get(0).unwrap();
        }
        let mean = sum / reps as f64;
        let tol = 4.0 * (variance / reps as f64).sqrt();
        assert!((mean - p).abs() < tol, "mean {mean}, tol {tol}");
    }

    #[test]
    fn beta_noise_deterministic_per_seed() {
        let model = LabelModel::from_pairs([(2, 0.4), (5, 0.7)]).unwrap();
        let a = beta_noise(&model, 0.001, 9).unwrap();
        let b = beta_noise(&model, 0.001, 9).unwrap();
        let c = beta_noise(&model, 0.001, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn label_model_csv_round_trip() {
        let model = LabelModel::from_pairs([(1, 0.25), (4, 0.75)]).unwrap();
        let mut buf = Vec::new();
        model.write_csv(&mut buf).unwrap();
        let back = LabelModel::read_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn calibrator_json_round_trip() {
        let scores: Vec<f64> = (0..30).map(|i| i as f64 / 29.0).collect();
        let labels: Vec<bool> = (0..30).map(|i| i % 3 != 0).collect();
        let cal = fit_scaling_binning(&scores, &labels, 5).unwrap();
        let back = ScalingBinningCalibrator::from_json(&cal.to_json().unwrap()).unwrap();
        for i in 0..50 {
            let s = i as f64 / 49.0;
            assert_eq!(cal.apply(s), back.apply(s));
        }
    }
}
