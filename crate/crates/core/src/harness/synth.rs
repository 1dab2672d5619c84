//! Synthetic labeled data with a controllable miscalibration knob, standing
//! in for externally produced model scores at desk scale.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::labels::sigmoid;

/// One synthetic record: the reported (possibly miscalibrated) score, the
/// true conditional probability the label was drawn from, and the label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthRecord {
    pub score: f64,
    pub true_p: f64,
    pub label: bool,
}

/// Draw `n` records: latent u ~ U[0,1], true probability
/// q = logistic(coef * u + intercept), label ~ Bernoulli(q), reported score
/// q^miscalibration. miscalibration = 1 reports perfectly calibrated scores.
pub fn synth_generate(
    n: usize,
    coef: f64,
    intercept: f64,
    miscalibration: f64,
    seed: u64,
) -> Result<Vec<SynthRecord>> {
    if n < 10 {
        return Err(Error::invalid(format!("synth size {n} below minimum 10")));
    }
    if !(miscalibration > 0.0) {
        return Err(Error::invalid("miscalibration exponent must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        let q = sigmoid(coef * u + intercept);
        let label = rng.random::<f64>() < q;
        out.push(SynthRecord {
            score: q.powf(miscalibration),
            true_p: q,
            label,
        });
    }
    Ok(out)
}

pub fn scores(records: &[SynthRecord]) -> Vec<f64> {
    records.iter().map(|r| r.score).collect()
}

pub fn labels(records: &[SynthRecord]) -> Vec<bool> {
    records.iter().map(|r| r.label).collect()
}
