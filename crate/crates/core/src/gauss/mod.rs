//! Closed-form Gaussian predictive distributions from exact first and
//! second moments, plus the KS-distance bound calculators.

mod roc;

pub use roc::{roc_auc_pair_moments, RocAucPairMoments};

use serde::{Deserialize, Serialize};

use crate::dataset::MaskedDataset;
use crate::error::{Error, Result};
use crate::labels::LabelModel;
use crate::mc::pemi;
use crate::metrics::{induce_classifier, MetricKind};
use crate::normal::phi;

/// Berry-Esseen universal constant.
pub const C0: f64 = 0.5600;

/// Default replicate count for the sampling fallback of the rank metric.
pub const ROC_FALLBACK_B: u64 = 10_000;

/// Largest n for which the exact quadruple-sum moments are computed; above
/// it the sampling fallback estimates them.
pub const ROC_EXACT_N_THRESHOLD: usize = 120;

/// Mean vector and covariance of the confusion-cell estimators, ordered
/// (TP, FN, FP, TN).
#[derive(Debug, Clone, Copy)]
pub struct CmMoments {
    pub mean: [f64; 4],
    pub cov: [[f64; 4]; 4],
}

/// Gaussian cdf in (mu, sigma^2) form; sigma^2 = 0 degenerates to a unit
/// step at mu.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianCdf {
    pub mu: f64,
    pub sigma2: f64,
}

impl GaussianCdf {
    pub fn is_degenerate(&self) -> bool {
        self.sigma2 == 0.0
    }

    pub fn eval(&self, t: f64) -> f64 {
        if self.is_degenerate() {
            if t >= self.mu {
                1.0
            } else {
                0.0
            }
        } else {
            phi((t - self.mu) / self.sigma2.sqrt())
        }
    }

    pub fn mean(&self) -> f64 {
        self.mu
    }
}

/// Input and derived moments for a ratio of two correlated Gaussians.
#[derive(Debug, Clone, Copy)]
pub struct RatioMoments {
    pub mu_z: f64,
    pub sigma_z2: f64,
    pub mu_w: f64,
    pub sigma_w2: f64,
    pub rho: f64,
    /// Derived ratio mean mu_z / mu_w.
    pub mu: f64,
    /// Derived ratio variance.
    pub sigma2: f64,
}

impl RatioMoments {
    pub fn new(mu_z: f64, sigma_z2: f64, mu_w: f64, sigma_w2: f64, rho: f64) -> Result<Self> {
        let (mu, sigma2) = ratio_gauss_moments(mu_z, sigma_z2, mu_w, sigma_w2, rho)?;
        Ok(RatioMoments {
            mu_z,
            sigma_z2,
            mu_w,
            sigma_w2,
            rho,
            mu,
            sigma2,
        })
    }
}

/// Mean and variance of Z/W for jointly Gaussian (Z, W) with the given
/// moments and correlation: mu = mu_z / mu_w and
/// sigma^2 = (mu_z^2 sigma_w^2 + mu_w^2 sigma_z^2
///            - 2 rho sigma_z sigma_w mu_z mu_w) / mu_w^4.
pub fn ratio_gauss_moments(
    mu_z: f64,
    sigma_z2: f64,
    mu_w: f64,
    sigma_w2: f64,
    rho: f64,
) -> Result<(f64, f64)> {
    if !(mu_w > 0.0) {
        return Err(Error::ZeroDenominator);
    }
    if sigma_z2 < 0.0 || sigma_w2 < 0.0 {
        return Err(Error::invalid("variances must be nonnegative"));
    }
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::invalid(format!("rho {rho} outside [-1, 1]")));
    }
    let mu = mu_z / mu_w;
    let sigma_z = sigma_z2.sqrt();
    let sigma_w = sigma_w2.sqrt();
    let numer = mu_z * mu_z * sigma_w2 + mu_w * mu_w * sigma_z2
        - 2.0 * rho * sigma_z * sigma_w * mu_z * mu_w;
    // Cauchy-Schwarz keeps this nonnegative for any valid covariance; clamp
    // the floating-point residue.
    Ok((mu, (numer / mu_w.powi(4)).max(0.0)))
}

/// Confusion-cell moments: means add the known contribution to the
/// Bernoulli one, variances come only from missing records, and the only
/// nonzero covariances are the structural Cov(TP, FP) and Cov(FN, TN).
pub fn cm_moments(data: &MaskedDataset, model: &LabelModel, tau: f64) -> Result<CmMoments> {
    if !model.matches(data) {
        return Err(Error::ModelDomainMismatch);
    }
    let preds = induce_classifier(&data.scores(), tau)?;
    let mut mean = [0.0f64; 4];
    for &i in data.known_indices() {
        let y = if data.observed(i).expect("known") { 1.0 } else { 0.0 };
        let psi = if preds[i] { 1.0 } else { 0.0 };
        mean[0] += y * psi;
        mean[1] += y * (1.0 - psi);
        mean[2] += (1.0 - y) * psi;
        mean[3] += (1.0 - y) * (1.0 - psi);
    }
    let mut var_pos = 0.0; // sum p(1-p) over missing with psi = 1
    let mut var_neg = 0.0; // same with psi = 0
    for &i in data.missing_indices() {
        let p = model.get(i).expect("domain checked");
        let pq = p * (1.0 - p);
        if preds[i] {
            mean[0] += p;
            mean[2] += 1.0 - p;
            var_pos += pq;
        } else {
            mean[1] += p;
            mean[3] += 1.0 - p;
            var_neg += pq;
        }
    }
    let cov = [
        [var_pos, 0.0, -var_pos, 0.0],
        [0.0, var_neg, 0.0, -var_neg],
        [-var_pos, 0.0, var_pos, 0.0],
        [0.0, -var_neg, 0.0, var_neg],
    ];
    Ok(CmMoments { mean, cov })
}

/// Numerator and denominator of a ratio metric written as affine sums over
/// the missing-label Bernoullis: Z = alpha + sum a_i Y_i and
/// W = beta + sum b_i Y_i, coefficients aligned with the missing-index
/// order.
#[derive(Debug, Clone)]
pub struct AffineSumPair {
    pub alpha: f64,
    pub beta: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub p: Vec<f64>,
}

impl AffineSumPair {
    /// Moment block: mu_z, sigma_z^2, mu_w, sigma_w^2, the correlation from
    /// the shared Bernoullis, and the derived ratio moments.
    pub fn moments(&self) -> Result<RatioMoments> {
        let mut mu_z = self.alpha;
        let mut mu_w = self.beta;
        let mut sigma_z2 = 0.0;
        let mut sigma_w2 = 0.0;
        let mut cov = 0.0;
        for ((&a, &b), &p) in self.a.iter().zip(&self.b).zip(&self.p) {
            let pq = p * (1.0 - p);
            mu_z += a * p;
            mu_w += b * p;
            sigma_z2 += a * a * pq;
            sigma_w2 += b * b * pq;
            cov += a * b * pq;
        }
        let denom = (sigma_z2 * sigma_w2).sqrt();
        let rho = if denom > 0.0 { (cov / denom).clamp(-1.0, 1.0) } else { 0.0 };
        RatioMoments::new(mu_z, sigma_z2, mu_w, sigma_w2, rho)
    }

    /// Number of strictly positive numerator coefficients.
    pub fn n_a(&self) -> usize {
        self.a.iter().filter(|&&a| a > 0.0).count()
    }

    /// Smallest nonzero |a_i|.
    pub fn a_star(&self) -> Option<f64> {
        self.a
            .iter()
            .filter(|&&a| a > 0.0)
            .copied()
            .min_by(f64::total_cmp)
    }

    /// Largest |b_i|.
    pub fn b_sup(&self) -> Option<f64> {
        self.b.iter().map(|b| b.abs()).max_by(f64::total_cmp)
    }

    /// min p_i (1 - p_i) over all summands.
    pub fn v_star(&self) -> Option<f64> {
        self.p.iter().map(|&p| p * (1.0 - p)).min_by(f64::total_cmp)
    }

    /// All structural preconditions of the ratio guarantee: 0 < alpha <=
    /// beta, a_i >= 0, b_i > 0, b_i >= a_i, and nondegenerate p_i.
    pub fn guarantee_preconditions_hold(&self) -> bool {
        self.alpha > 0.0
            && self.alpha <= self.beta
            && !self.a.is_empty()
            && self
                .a
                .iter()
                .zip(&self.b)
                .all(|(&a, &b)| a >= 0.0 && b > 0.0 && b >= a)
            && self.p.iter().all(|&p| p > 0.0 && p < 1.0)
    }
}

/// Express a ratio metric's numerator and denominator as affine Bernoulli
/// sums, reading the coefficients off the confusion-cell estimators.
pub fn ratio_decomposition(
    kind: MetricKind,
    data: &MaskedDataset,
    model: &LabelModel,
    tau: f64,
) -> Result<AffineSumPair> {
    if !model.matches(data) {
        return Err(Error::ModelDomainMismatch);
    }
    let preds = induce_classifier(&data.scores(), tau)?;
    let mut known_tp = 0.0;
    let mut known_pos = 0.0;
    let mut known_y_plus_psi = 0.0;
    let mut pred_pos_total = 0.0;
    for i in 0..data.n() {
        if preds[i] {
            pred_pos_total += 1.0;
        }
    }
    for &i in data.known_indices() {
        let y = if data.observed(i).expect("known") { 1.0 } else { 0.0 };
        let psi = if preds[i] { 1.0 } else { 0.0 };
        known_tp += y * psi;
        known_pos += y;
        known_y_plus_psi += y + psi;
    }

    let missing = data.missing_indices();
    let p: Vec<f64> = missing.iter().map(|&i| model.get(i).expect("domain")).collect();
    let psi_m: Vec<f64> = missing
        .iter()
        .map(|&i| if preds[i] { 1.0 } else { 0.0 })
        .collect();

    let pair = match kind {
        // TP / (TP + FP): the denominator is the fixed predicted-positive
        // count, so b_i = 0.
        MetricKind::Precision => AffineSumPair {
            alpha: known_tp,
            beta: pred_pos_total,
            a: psi_m.clone(),
            b: vec![0.0; missing.len()],
            p,
        },
        // TP / (TP + FN): the denominator counts actual positives, so every
        // missing record contributes b_i = 1.
        MetricKind::Recall => AffineSumPair {
            alpha: known_tp,
            beta: known_pos,
            a: psi_m.clone(),
            b: vec![1.0; missing.len()],
            p,
        },
        // 2 TP / (2 TP + FP + FN): per missing record the denominator is
        // Y_i + psi_i, so b_i = 1 with the psi_i rolled into beta.
        MetricKind::F1 => AffineSumPair {
            alpha: 2.0 * known_tp,
            beta: known_y_plus_psi + psi_m.iter().sum::<f64>(),
            a: psi_m.iter().map(|&v| 2.0 * v).collect(),
            b: vec![1.0; missing.len()],
            p,
        },
        other => {
            return Err(Error::invalid(format!(
                "{other} is not a ratio of confusion cells"
            )))
        }
    };
    Ok(pair)
}

/// Which computation produced a Gaussian approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodTag {
    /// Closed-form confusion-cell moments.
    CmExact,
    /// Exact rank-metric tensors.
    RocExact,
    /// Sampling fallback for the rank metric above the size threshold.
    PemiFallback,
}

impl std::fmt::Display for MethodTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MethodTag::CmExact => "cm-exact",
            MethodTag::RocExact => "roc-exact",
            MethodTag::PemiFallback => "pemi-fallback",
        })
    }
}

/// Gaussian approximation plus provenance and the guarantee flag.
#[derive(Debug, Clone)]
pub struct MetricGauss {
    pub cdf: GaussianCdf,
    pub method: MethodTag,
    /// Set when a ratio metric has no known-label mass in its numerator
    /// (alpha = 0): the value is still computed but carries no guarantee.
    pub alpha_zero_warning: bool,
}

/// Mean, variance and provenance for the rank metric: exact tensors up to
/// `n_threshold`, sampling with `fallback_b` replicates beyond it.
pub fn roc_auc_moments(
    data: &MaskedDataset,
    model: &LabelModel,
    fallback_b: u64,
    n_threshold: usize,
    seed: u64,
) -> Result<(f64, f64, MethodTag)> {
    if !model.matches(data) {
        return Err(Error::ModelDomainMismatch);
    }
    if data.missing_indices().is_empty() {
        let value = roc::deterministic_auc(data).ok_or(Error::ZeroDenominator)?;
        return Ok((value, 0.0, MethodTag::RocExact));
    }
    if data.n() <= n_threshold {
        let m = roc_auc_pair_moments(data, model)?;
        if !(m.mean_den > 0.0) {
            return Err(Error::ZeroDenominator);
        }
        let denom = (m.var_num * m.var_den).sqrt();
        let rho = if denom > 0.0 { (m.cov / denom).clamp(-1.0, 1.0) } else { 0.0 };
        let (mu, sigma2) = ratio_gauss_moments(m.mean_num, m.var_num, m.mean_den, m.var_den, rho)?;
        Ok((mu, sigma2, MethodTag::RocExact))
    } else {
        let cdf = pemi(MetricKind::RocAuc, data, model, fallback_b, 0.5, seed)?;
        Ok((cdf.mean(), cdf.variance(), MethodTag::PemiFallback))
    }
}

/// Gaussian predictive distribution for a metric under the label model.
pub fn metric_gauss(
    kind: MetricKind,
    data: &MaskedDataset,
    model: &LabelModel,
    tau: f64,
    seed: u64,
) -> Result<MetricGauss> {
    match kind {
        MetricKind::Accuracy => {
            let m = cm_moments(data, model, tau)?;
            let n = data.n() as f64;
            let mu = (m.mean[0] + m.mean[3]) / n;
            // Cov(TP, TN) = 0, so the variances add.
            let sigma2 = (m.cov[0][0] + m.cov[3][3]) / (n * n);
            Ok(MetricGauss {
                cdf: GaussianCdf { mu, sigma2 },
                method: MethodTag::CmExact,
                alpha_zero_warning: false,
            })
        }
        MetricKind::Precision | MetricKind::Recall | MetricKind::F1 => {
            let pair = ratio_decomposition(kind, data, model, tau)?;
            let rm = pair.moments()?;
            Ok(MetricGauss {
                cdf: GaussianCdf {
                    mu: rm.mu,
                    sigma2: rm.sigma2,
                },
                method: MethodTag::CmExact,
                alpha_zero_warning: pair.alpha == 0.0,
            })
        }
        MetricKind::RocAuc => {
            let (mu, sigma2, method) =
                roc_auc_moments(data, model, ROC_FALLBACK_B, ROC_EXACT_N_THRESHOLD, seed)?;
            Ok(MetricGauss {
                cdf: GaussianCdf { mu, sigma2 },
                method,
                alpha_zero_warning: false,
            })
        }
    }
}

/// A KS-distance bound value; anything above 1 is vacuous since KS distance
/// never exceeds 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsBound {
    pub value: f64,
    pub vacuous: bool,
}

impl KsBound {
    fn from_value(value: f64) -> Self {
        KsBound {
            value,
            vacuous: !(value <= 1.0),
        }
    }
}

/// KS bound for a weighted Bernoulli sum against its Gaussian:
/// C0 / sqrt(n v*) * (1 + a_sup) / (2 a_star).
pub fn ks_bound_bernoulli_sum(n: usize, v_star: f64, a_star: f64, a_sup: f64) -> Result<KsBound> {
    if n == 0 {
        return Err(Error::invalid("n must be >= 1"));
    }
    if !(v_star > 0.0 && v_star <= 0.25) {
        return Err(Error::invalid(format!("v* {v_star} outside (0, 0.25]")));
    }
    if !(a_star > 0.0 && a_star <= a_sup) {
        return Err(Error::invalid(format!(
            "coefficient bounds need 0 < a* <= a^*, got {a_star}, {a_sup}"
        )));
    }
    let value = C0 / (n as f64 * v_star).sqrt() * (1.0 + a_sup) / (2.0 * a_star);
    Ok(KsBound::from_value(value))
}

/// KS bound for a ratio of affine Bernoulli sums against its Gaussian:
/// C0 / sqrt(n_a v*) * (1 + b_sup) / a_star
///   + sqrt(2/pi) * (sigma_w^2 (|mu_z| + sigma_z^2) + mu_w^2)
///     / (sigma mu_w^3).
pub fn ks_bound_ratio(
    moments: &RatioMoments,
    n_a: usize,
    v_star: f64,
    a_star: f64,
    b_sup: f64,
) -> Result<KsBound> {
    if n_a == 0 {
        return Err(Error::invalid("n_a must be >= 1"));
    }
    if !(moments.mu_w > 0.0) {
        return Err(Error::ZeroDenominator);
    }
    if !(v_star > 0.0) {
        return Err(Error::invalid("v* must be positive"));
    }
    if !(a_star > 0.0) {
        return Err(Error::invalid("a* must be positive"));
    }
    let sigma = moments.sigma2.sqrt();
    if !(sigma > 0.0) {
        return Err(Error::invalid(
            "ratio bound undefined for a degenerate ratio (sigma = 0)",
        ));
    }
    let first = C0 / (n_a as f64 * v_star).sqrt() * (1.0 + b_sup) / a_star;
    let second = (2.0 / std::f64::consts::PI).sqrt()
        * (moments.sigma_w2 * (moments.mu_z.abs() + moments.sigma_z2)
            + moments.mu_w * moments.mu_w)
        / (sigma * moments.mu_w.powi(3));
    Ok(KsBound::from_value(first + second))
}

/// The applicable Gaussian-approximation KS bound for a metric, when the
/// relevant guarantee's preconditions hold; `None` otherwise.
///
/// Accuracy and Precision reduce to a constant plus a Bernoulli sum so the
/// sum bound applies (KS distance is invariant under the affine rescale).
/// Recall satisfies the ratio guarantee whenever alpha > 0. F1's numerator
/// coefficients (2 per predicted positive) exceed its denominator ones, so
/// the ratio guarantee never covers it. The rank metric has no bound.
pub fn metric_ks_bound(
    kind: MetricKind,
    data: &MaskedDataset,
    model: &LabelModel,
    tau: f64,
) -> Result<Option<KsBound>> {
    if !model.matches(data) {
        return Err(Error::ModelDomainMismatch);
    }
    let missing = data.missing_indices();
    if missing.is_empty() {
        return Ok(None);
    }
    match kind {
        MetricKind::Accuracy => {
            // Coefficients 2 psi_i - 1 are all of magnitude 1.
            let v_star = model.v_star().expect("nonempty model");
            Ok(Some(ks_bound_bernoulli_sum(missing.len(), v_star, 1.0, 1.0)?))
        }
        MetricKind::Precision => {
            let preds = induce_classifier(&data.scores(), tau)?;
            let contributing: Vec<f64> = missing
                .iter()
                .filter(|&&i| preds[i])
                .map(|&i| model.get(i).expect("domain"))
                .collect();
            if contributing.is_empty() {
                return Ok(None);
            }
            let v_star = contributing
                .iter()
                .map(|&p| p * (1.0 - p))
                .min_by(f64::total_cmp)
                .expect("nonempty");
            Ok(Some(ks_bound_bernoulli_sum(contributing.len(), v_star, 1.0, 1.0)?))
        }
        MetricKind::Recall | MetricKind::F1 => {
            let pair = ratio_decomposition(kind, data, model, tau)?;
            if !pair.guarantee_preconditions_hold() {
                return Ok(None);
            }
            let (Some(a_star), Some(b_sup), Some(v_star)) =
                (pair.a_star(), pair.b_sup(), pair.v_star())
            else {
                return Ok(None);
            };
            if pair.n_a() == 0 {
                return Ok(None);
            }
            let rm = pair.moments()?;
            if rm.sigma2 == 0.0 {
                return Ok(None);
            }
            Ok(Some(ks_bound_ratio(&rm, pair.n_a(), v_star, a_star, b_sup)?))
        }
        MetricKind::RocAuc => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::assign_maxent_half;
    use crate::oracle::{enumerate_distribution, exact_moments, scenario_labels};

    #[test]
    fn cm_moments_single_missing_record() {
        // Known (y=1, psi=1); missing (p=0.3, psi=1).
        let data = MaskedDataset::from_parts(
            vec![0.9, 0.8],
            vec![Some(true), None],
            vec![None, None],
        )
        .unwrap();
        let model = LabelModel::from_pairs([(1, 0.3)]).unwrap();
        let m = cm_moments(&data, &model, 0.5).unwrap();
        assert!((m.mean[0] - 1.3).abs() < 1e-15);
        assert!((m.mean[2] - 0.7).abs() < 1e-15);
        assert!((m.cov[0][0] - 0.21).abs() < 1e-15);
        assert!((m.cov[0][2] + 0.21).abs() < 1e-15);
    }

    #[test]
    fn cm_moments_no_missing_is_deterministic() {
        let data =
            MaskedDataset::fully_labeled(vec![0.9, 0.1, 0.7], vec![true, false, false]).unwrap();
        let m = cm_moments(&data, &LabelModel::default(), 0.5).unwrap();
        assert_eq!(m.mean, [1.0, 0.0, 1.0, 1.0]);
        for row in m.cov {
            for v in row {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn cm_structural_zero_pattern_is_exact() {
        let data = MaskedDataset::from_parts(
            vec![0.9, 0.2, 0.8, 0.1, 0.6],
            vec![Some(true), Some(false), None, None, None],
            vec![None; 5],
        )
        .unwrap();
        let model = LabelModel::from_pairs([(2, 0.3), (3, 0.6), (4, 0.9)]).unwrap();
        let m = cm_moments(&data, &model, 0.5).unwrap();
        for (i, j) in [(0, 1), (0, 3), (1, 2), (2, 3)] {
            assert_eq!(m.cov[i][j], 0.0);
            assert_eq!(m.cov[j][i], 0.0);
        }
        assert_eq!(m.cov[0][2], -m.cov[0][0]);
        assert_eq!(m.cov[1][3], -m.cov[1][1]);
    }

    /// Brute-force confusion-cell moments by scenario enumeration.
    fn enumerated_cm_moments(
        data: &MaskedDataset,
        model: &LabelModel,
        tau: f64,
    ) -> ([f64; 4], [[f64; 4]; 4]) {
        let preds = induce_classifier(&data.scores(), tau).unwrap();
        let missing = data.missing_indices();
        let m = missing.len();
        let mut cells: Vec<([f64; 4], f64)> = Vec::new();
        for code in 0u64..(1 << m) {
            let assignment: Vec<bool> = (0..m).map(|b| (code >> b) & 1 == 1).collect();
            let labels = scenario_labels(data, &assignment);
            let mut mass = 1.0;
            for (bit, &idx) in missing.iter().enumerate() {
                let p = model.get(idx).unwrap();
                mass *= if assignment[bit] { p } else { 1.0 - p };
            }
            let mut cell = [0.0f64; 4];
            for i in 0..data.n() {
                match (labels[i], preds[i]) {
                    (true, true) => cell[0] += 1.0,
                    (true, false) => cell[1] += 1.0,
                    (false, true) => cell[2] += 1.0,
                    (false, false) => cell[3] += 1.0,
                }
            }
            cells.push((cell, mass));
        }
        let mut mean = [0.0f64; 4];
        for (cell, mass) in &cells {
            for c in 0..4 {
                mean[c] += cell[c] * mass;
            }
        }
        let mut cov = [[0.0f64; 4]; 4];
        for (cell, mass) in &cells {
            for r in 0..4 {
                for c in 0..4 {
                    cov[r][c] += mass * (cell[r] - mean[r]) * (cell[c] - mean[c]);
                }
            }
        }
        (mean, cov)
    }

    #[test]
    fn cm_moments_match_enumeration() {
        let data = MaskedDataset::from_parts(
            vec![0.9, 0.2, 0.8, 0.1, 0.6, 0.4, 0.55, 0.65, 0.35, 0.85, 0.15, 0.7],
            vec![
                Some(true),
                Some(false),
                None,
                None,
                None,
                None,
                None,
                None,
                None,
                None,
                None,
                None,
            ],
            vec![None; 12],
        )
        .unwrap();
        let model = LabelModel::from_pairs(
            data.missing_indices()
                .iter()
                .enumerate()
                .map(|(k, &i)| (i, 0.08 + 0.08 * k as f64)),
        )
        .unwrap();
        let exact = cm_moments(&data, &model, 0.5).unwrap();
        let (mean, cov) = enumerated_cm_moments(&data, &model, 0.5);
        for c in 0..4 {
            assert!((exact.mean[c] - mean[c]).abs() <= 1e-10 * mean[c].abs().max(1.0));
        }
        for r in 0..4 {
            for c in 0..4 {
                assert!(
                    (exact.cov[r][c] - cov[r][c]).abs() <= 1e-10 * cov[r][c].abs().max(1.0),
                    "cov[{r}][{c}]: {} vs {}",
                    exact.cov[r][c],
                    cov[r][c]
                );
            }
        }
    }

    #[test]
    fn ratio_moment_formula_examples() {
        let (mu, s2) = ratio_gauss_moments(1.0, 0.01, 2.0, 0.04, 0.0).unwrap();
        assert!((mu - 0.5).abs() < 1e-15);
        assert!((s2 - 0.005).abs() < 1e-15);

        let (mu, s2) = ratio_gauss_moments(3.0, 0.0, 2.0, 0.0, 0.0).unwrap();
        assert!((mu - 1.5).abs() < 1e-15);
        assert_eq!(s2, 0.0);

        // Perfectly correlated, proportional noise: variance cancels.
        // sigma_z / mu_z = sigma_w / mu_w with rho = 1.
        let (_, s2) = ratio_gauss_moments(1.0, 0.01, 2.0, 0.04, 1.0).unwrap();
        assert!(s2.abs() < 1e-15);

        assert!(ratio_gauss_moments(1.0, 0.1, 0.0, 0.1, 0.0).is_err());
        assert!(ratio_gauss_moments(1.0, 0.1, 1.0, 0.1, 1.5).is_err());
    }

    #[test]
    fn precision_with_constant_denominator_matches_enumeration() {
        // Known (y=1, psi=1), (y=0, psi=1); missing (p=0.5, psi=1).
        // Z = 1 + Y, W = 3 fixed: mu = 0.5, sigma^2 = 0.25 / 9.
        let data = MaskedDataset::from_parts(
            vec![0.9, 0.8, 0.7],
            vec![Some(true), Some(false), None],
            vec![None; 3],
        )
        .unwrap();
        let model = assign_maxent_half(&data);
        let g = metric_gauss(MetricKind::Precision, &data, &model, 0.5, 0).unwrap();
        assert!((g.cdf.mu - 0.5).abs() < 1e-15);
        assert!((g.cdf.sigma2 - 0.25 / 9.0).abs() < 1e-15);
        assert_eq!(g.method, MethodTag::CmExact);
        // Constant denominator makes the Gaussian moments exact.
        let dist = enumerate_distribution(&data, &model, MetricKind::Precision, 0.5).unwrap();
        let (mean, var) = exact_moments(&dist).unwrap();
        assert!((g.cdf.mu - mean).abs() < 1e-12);
        assert!((g.cdf.sigma2 - var).abs() < 1e-12);
    }

    #[test]
    fn accuracy_gauss_mean_is_exact() {
        let data = MaskedDataset::from_parts(
            vec![0.9, 0.2, 0.8, 0.3, 0.6],
            vec![Some(true), Some(false), None, None, None],
            vec![None; 5],
        )
        .unwrap();
        let model = LabelModel::from_pairs([(2, 0.7), (3, 0.2), (4, 0.45)]).unwrap();
        let g = metric_gauss(MetricKind::Accuracy, &data, &model, 0.5, 0).unwrap();
        let dist = enumerate_distribution(&data, &model, MetricKind::Accuracy, 0.5).unwrap();
        let (mean, var) = exact_moments(&dist).unwrap();
        assert!((g.cdf.mu - mean).abs() < 1e-12);
        assert!((g.cdf.sigma2 - var).abs() < 1e-12);
    }

    #[test]
    fn degenerate_without_missing_labels() {
        let data = MaskedDataset::fully_labeled(vec![0.9, 0.1], vec![true, false]).unwrap();
        for kind in MetricKind::ALL {
            let g = metric_gauss(kind, &data, &LabelModel::default(), 0.5, 0).unwrap();
            assert!(g.cdf.is_degenerate(), "{kind}");
            assert_eq!(g.cdf.eval(g.cdf.mu), 1.0);
            assert_eq!(g.cdf.eval(g.cdf.mu - 1e-9), 0.0);
        }
    }

    #[test]
    fn recall_alpha_zero_sets_warning() {
        // No known true positives: alpha = 0.
        let data = MaskedDataset::from_parts(
            vec![0.2, 0.9],
            vec![Some(false), None],
            vec![None, None],
        )
        .unwrap();
        let model = assign_maxent_half(&data);
        let g = metric_gauss(MetricKind::Recall, &data, &model, 0.5, 0).unwrap();
        assert!(g.alpha_zero_warning);
        assert!(metric_ks_bound(MetricKind::Recall, &data, &model, 0.5)
            .unwrap()
            .is_none());
    }

    #[test]
    fn recall_denominator_zero_errors() {
        // No known positives and no missing labels.
        let data = MaskedDataset::fully_labeled(vec![0.9, 0.2], vec![false, false]).unwrap();
        assert!(matches!(
            metric_gauss(MetricKind::Recall, &data, &LabelModel::default(), 0.5, 0),
            Err(Error::ZeroDenominator)
        ));
    }

    #[test]
    fn roc_moments_hand_worked_instance() {
        let data = MaskedDataset::from_parts(
            vec![0.9, 0.2, 0.1],
            vec![Some(true), Some(false), None],
            vec![None; 3],
        )
        .unwrap();
        let model = assign_maxent_half(&data);
        let (mu, sigma2, tag) = roc_auc_moments(&data, &model, 100, 120, 0).unwrap();
        assert_eq!(tag, MethodTag::RocExact);
        // Exact distribution is {1/2, 1} with equal mass; the constant
        // denominator makes the ratio moments exact.
        assert!((mu - 0.75).abs() < 1e-12);
        assert!((sigma2 - 0.0625).abs() < 1e-12);
    }

    #[test]
    fn roc_moments_fallback_above_threshold() {
        let n = 150;
        let scores: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let observed: Vec<Option<bool>> = (0..n)
            .map(|i| if i % 5 == 0 { None } else { Some(i % 2 == 0) })
            .collect();
        let data = MaskedDataset::from_parts(scores, observed, vec![None; n]).unwrap();
        let model = assign_maxent_half(&data);
        let (mu, sigma2, tag) = roc_auc_moments(&data, &model, 10_000, 120, 3).unwrap();
        assert_eq!(tag, MethodTag::PemiFallback);
        assert!(mu > 0.0 && mu < 1.0);
        assert!(sigma2 > 0.0);
    }

    #[test]
    fn bernoulli_sum_bound_reference_point() {
        let b = ks_bound_bernoulli_sum(100, 0.25, 1.0, 1.0).unwrap();
        assert!((b.value - 0.112).abs() < 1e-12);
        assert!(!b.vacuous);
        // Quadrupling n halves the bound exactly.
        let b4 = ks_bound_bernoulli_sum(400, 0.25, 1.0, 1.0).unwrap();
        assert!((b.value / b4.value - 2.0).abs() < 1e-12);
        // Tiny v* drives the bound vacuous.
        let v = ks_bound_bernoulli_sum(100, 1e-8, 1.0, 1.0).unwrap();
        assert!(v.vacuous);
        assert!(ks_bound_bernoulli_sum(0, 0.25, 1.0, 1.0).is_err());
        assert!(ks_bound_bernoulli_sum(10, 0.3, 1.0, 1.0).is_err());
        assert!(ks_bound_bernoulli_sum(10, 0.25, 2.0, 1.0).is_err());
    }

    /// The homogeneous family used by the scaling checks: b_i = 1
    /// everywhere, a_i = 1 on half the records, alpha = beta = 1, p = 1/2.
    fn homogeneous_pair(n: usize) -> AffineSumPair {
        AffineSumPair {
            alpha: 1.0,
            beta: 1.0,
            a: (0..n).map(|i| if i < n / 2 { 1.0 } else { 0.0 }).collect(),
            b: vec![1.0; n],
            p: vec![0.5; n],
        }
    }

    #[test]
    fn ratio_bound_shrinks_with_n() {
        let bound_at = |n: usize| {
            let pair = homogeneous_pair(n);
            let rm = pair.moments().unwrap();
            ks_bound_ratio(
                &rm,
                pair.n_a(),
                pair.v_star().unwrap(),
                pair.a_star().unwrap(),
                pair.b_sup().unwrap(),
            )
            .unwrap()
            .value
        };
        let b400 = bound_at(400);
        let b1600 = bound_at(1600);
        assert!(b1600 < b400);
        let ratio = b400 / b1600;
        assert!(ratio > 1.4 && ratio < 2.6, "ratio {ratio}");
    }

    #[test]
    fn ratio_bound_second_term_vanishes_for_huge_denominator() {
        // mu_w^3 * sigma = 1e18 while the numerator stays at 1e12.
        let rm = RatioMoments::new(0.0, 1e12, 1e6, 0.0, 0.0).unwrap();
        assert!((rm.sigma2 - 1.0).abs() < 1e-12);
        let second = (2.0 / std::f64::consts::PI).sqrt()
            * (rm.sigma_w2 * (rm.mu_z.abs() + rm.sigma_z2) + rm.mu_w * rm.mu_w)
            / (rm.sigma2.sqrt() * rm.mu_w.powi(3));
        assert!(second < 1e-6, "{second}");
    }

    #[test]
    fn ratio_bound_guards() {
        let pair = homogeneous_pair(100);
        let rm = pair.moments().unwrap();
        // Tiny v* makes the bound vacuous.
        let b = ks_bound_ratio(&rm, pair.n_a(), 1e-9, 1.0, 1.0).unwrap();
        assert!(b.vacuous);
        // Degenerate ratio (sigma = 0) is an error.
        let degenerate = RatioMoments::new(1.0, 0.0, 2.0, 0.0, 0.0).unwrap();
        assert!(ks_bound_ratio(&degenerate, 10, 0.25, 1.0, 1.0).is_err());
    }

    #[test]
    fn f1_never_claims_the_ratio_guarantee() {
        let data = MaskedDataset::from_parts(
            vec![0.9, 0.2, 0.8, 0.3],
            vec![Some(true), Some(false), None, None],
            vec![None; 4],
        )
        .unwrap();
        let model = assign_maxent_half(&data);
        let pair = ratio_decomposition(MetricKind::F1, &data, &model, 0.5).unwrap();
        assert!(!pair.guarantee_preconditions_hold());
        assert!(metric_ks_bound(MetricKind::F1, &data, &model, 0.5)
            .unwrap()
            .is_none());
        // Recall on the same data does carry a bound.
        assert!(metric_ks_bound(MetricKind::Recall, &data, &model, 0.5)
            .unwrap()
            .is_some());
    }

    #[test]
    fn gaussian_cdf_quantile_reference() {
        let g = GaussianCdf { mu: 0.0, sigma2: 1.0 };
        assert!((g.eval(1.6449) - 0.95).abs() < 1e-4);
        assert!((g.eval(0.0) - 0.5).abs() < 1e-15);
    }
}
