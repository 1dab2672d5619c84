//! Probability integral transform and the distances that score its
//! uniformity, plus center-error summaries.

use crate::error::{Error, Result};
use crate::gauss::GaussianCdf;
use crate::mc::EmpiricalCdf;

/// A predictive distribution that can be evaluated as a cdf and summarized
/// by its center.
pub trait PredictiveCdf {
    fn eval(&self, t: f64) -> f64;
    fn center(&self) -> f64;
}

impl PredictiveCdf for EmpiricalCdf {
    fn eval(&self, t: f64) -> f64 {
        EmpiricalCdf::eval(self, t)
    }

    fn center(&self) -> f64 {
        self.mean()
    }
}

impl PredictiveCdf for GaussianCdf {
    fn eval(&self, t: f64) -> f64 {
        GaussianCdf::eval(self, t)
    }

    fn center(&self) -> f64 {
        self.mean()
    }
}

/// PIT value: the predictive cdf evaluated at the realized ground truth.
pub fn pit_value<C: PredictiveCdf + ?Sized>(cdf: &C, ground_truth: f64) -> f64 {
    cdf.eval(ground_truth)
}

/// Distances of a PIT sample from the uniform distribution on [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UniformityMeasure {
    Ks,
    W1,
}

fn check_pits(pits: &[f64]) -> Result<Vec<f64>> {
    if pits.is_empty() {
        return Err(Error::invalid("need at least one PIT value"));
    }
    for &u in pits {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::invalid(format!("PIT value {u} outside [0, 1]")));
        }
    }
    let mut sorted = pits.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted)
}

/// Exact integral of |c - t| over [a, b].
fn abs_dev_integral(a: f64, b: f64, c: f64) -> f64 {
    if c <= a {
        ((b - c) * (b - c) - (a - c) * (a - c)) / 2.0
    } else if c >= b {
        ((c - a) * (c - a) - (c - b) * (c - b)) / 2.0
    } else {
        ((c - a) * (c - a) + (b - c) * (b - c)) / 2.0
    }
}

/// Distance of the PIT empirical cdf from U[0, 1]: the one-sample KS
/// statistic, or the Wasserstein-1 distance computed in closed form on the
/// step-function decomposition.
pub fn pit_uniformity(pits: &[f64], measure: UniformityMeasure) -> Result<f64> {
    let sorted = check_pits(pits)?;
    let m = sorted.len() as f64;
    match measure {
        UniformityMeasure::Ks => {
            // sup over the sorted sample of max(i/m - u_(i), u_(i) - (i-1)/m).
            let mut ks: f64 = 0.0;
            for (i, &u) in sorted.iter().enumerate() {
                let above = (i as f64 + 1.0) / m - u;
                let below = u - i as f64 / m;
                ks = ks.max(above).max(below);
            }
            Ok(ks)
        }
        UniformityMeasure::W1 => {
            let mut w1 = 0.0;
            let mut prev = 0.0;
            for (i, &u) in sorted.iter().enumerate() {
                w1 += abs_dev_integral(prev, u, i as f64 / m);
                prev = u;
            }
            w1 += abs_dev_integral(prev, 1.0, 1.0);
            Ok(w1)
        }
    }
}

/// Center-error summaries across (predicted center, realized truth) pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenterMeasure {
    Mae,
    Rmse,
}

/// MAE or RMSE of predictive-distribution centers against the truths. The
/// center of an empirical cdf is its sample mean; of a Gaussian, its mu
/// (see [`PredictiveCdf::center`]).
pub fn center_error(pairs: &[(f64, f64)], measure: CenterMeasure) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::invalid("need at least one (center, truth) pair"));
    }
    let n = pairs.len() as f64;
    match measure {
        CenterMeasure::Mae => Ok(pairs.iter().map(|(c, t)| (c - t).abs()).sum::<f64>() / n),
        CenterMeasure::Rmse => {
            Ok((pairs.iter().map(|(c, t)| (c - t) * (c - t)).sum::<f64>() / n).sqrt())
        }
    }
}
