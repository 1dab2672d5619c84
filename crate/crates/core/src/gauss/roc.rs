//! Exact mean and covariance of the rank-metric numerator and denominator.
//!
//! Both are sums of pair products Y_i (1 - Y_j). The expectation reduces to
//! a pair table, the covariance to a quadruple sum over per-case moment
//! expressions; terms whose index pairs do not intersect vanish by
//! independence, so the scan anchors one index of (k, l) inside {i, j}.

use rayon::prelude::*;

use crate::dataset::MaskedDataset;
use crate::error::{Error, Result};
use crate::labels::LabelModel;
use crate::metrics::ScoreOrder;

/// First and second moments of the pair sums behind the rank metric.
#[derive(Debug, Clone, Copy)]
pub struct RocAucPairMoments {
    pub mean_num: f64,
    pub mean_den: f64,
    pub var_num: f64,
    pub var_den: f64,
    pub cov: f64,
}

struct Tensors {
    /// Bernoulli mean: p_i for missing labels, the observed 0/1 otherwise.
    q: Vec<f64>,
    missing: Vec<bool>,
    /// Concordance indicator score_i >= score_j, row-major.
    geq: Vec<bool>,
    n: usize,
}

impl Tensors {
    fn new(data: &MaskedDataset, model: &LabelModel) -> Result<Self> {
        if !model.matches(data) {
            return Err(Error::ModelDomainMismatch);
        }
        let n = data.n();
        let mut q = vec![0.0; n];
        let mut missing = vec![false; n];
        for &i in data.known_indices() {
            q[i] = if data.observed(i).expect("known") { 1.0 } else { 0.0 };
        }
        for &i in data.missing_indices() {
            q[i] = model.get(i).expect("domain checked");
            missing[i] = true;
        }
        let scores = data.scores();
        let mut geq = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                geq[i * n + j] = scores[i] >= scores[j];
            }
        }
        Ok(Tensors { q, missing, geq, n })
    }

    #[inline]
    fn xi(&self, i: usize, j: usize) -> bool {
        self.geq[i * self.n + j]
    }

    /// E[Y_i (1 - Y_j)]: zero on the diagonal, product of the marginal
    /// means otherwise.
    #[inline]
    fn omega(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.q[i] * (1.0 - self.q[j])
        }
    }

    /// Cov[Y_i, Y_k].
    #[inline]
    fn nu(&self, i: usize, k: usize) -> f64 {
        if i == k && self.missing[i] {
            self.q[i] * (1.0 - self.q[i])
        } else {
            0.0
        }
    }

    /// E[Y_a Y_b Y_c] - E[Y_a Y_b] E[Y_c].
    fn gamma(&self, a: usize, b: usize, c: usize) -> f64 {
        if !self.missing[c] {
            return 0.0;
        }
        let p = &self.q;
        match (self.missing[a], self.missing[b]) {
            (true, true) => {
                if a == b && b == c {
                    p[a] * (1.0 - p[a])
                } else if a == c && a != b {
                    p[a] * p[b] * (1.0 - p[a])
                } else if b == c && a != b {
                    p[a] * p[b] * (1.0 - p[b])
                } else {
                    0.0
                }
            }
            (false, true) => {
                if b == c {
                    p[a] * p[c] * (1.0 - p[c])
                } else {
                    0.0
                }
            }
            (true, false) => {
                if a == c {
                    p[b] * p[c] * (1.0 - p[c])
                } else {
                    0.0
                }
            }
            (false, false) => 0.0,
        }
    }

    /// E[Y_i Y_j Y_k Y_l] - E[Y_i Y_j] E[Y_k Y_l]. Known indices peel off as
    /// constants, delegating to the triple case table.
    fn eta(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        if !self.missing[i] {
            return self.q[i] * self.gamma(k, l, j);
        }
        if !self.missing[j] {
            return self.q[j] * self.gamma(k, l, i);
        }
        if !self.missing[k] {
            return self.q[k] * self.gamma(i, j, l);
        }
        if !self.missing[l] {
            return self.q[l] * self.gamma(i, j, k);
        }
        let p = &self.q;
        if i == j && j == k && k == l {
            p[i] * (1.0 - p[i])
        } else if i == j && j == k && k != l {
            p[i] * p[l] * (1.0 - p[i])
        } else if i == j && j == l && j != k {
            p[i] * p[k] * (1.0 - p[i])
        } else if i == k && k == l && i != j {
            p[i] * p[j] * (1.0 - p[i])
        } else if j == k && k == l && j != i {
            p[i] * p[j] * (1.0 - p[j])
        } else if i == k && j == l && i != j {
            p[i] * p[j] * (1.0 - p[i] * p[j])
        } else if i == l && j == k && i != j {
            p[i] * p[j] * (1.0 - p[i] * p[j])
        } else if i == k && j != l && j != i && l != i {
            p[i] * p[j] * p[l] * (1.0 - p[i])
        } else if j == l && i != k && i != j && k != j {
            p[i] * p[j] * p[k] * (1.0 - p[j])
        } else if i == l && j != k && k != i && j != i {
            p[i] * p[j] * p[k] * (1.0 - p[i])
        } else if j == k && i != l && l != j && i != j {
            p[i] * p[j] * p[l] * (1.0 - p[j])
        } else {
            0.0
        }
    }

    /// Covariance kernel for pairs (i, j) and (k, l).
    #[inline]
    fn cov_term(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.nu(i, k) - self.gamma(i, j, k) - self.gamma(k, l, i) + self.eta(i, j, k, l)
    }
}

/// Exact moments of the rank-metric numerator and denominator sums.
pub fn roc_auc_pair_moments(data: &MaskedDataset, model: &LabelModel) -> Result<RocAucPairMoments> {
    let t = Tensors::new(data, model)?;
    let n = t.n;

    let mut mean_num = 0.0;
    let mut mean_den = 0.0;
    for i in 0..n {
        for j in 0..n {
            let w = t.omega(i, j);
            mean_den += w;
            if t.xi(i, j) {
                mean_num += w;
            }
        }
    }

    // Sum the covariance kernel over pairs of pairs sharing an index. For a
    // fixed (i, j) the intersecting (k, l) are: k in {i, j} with l free, and
    // l in {i, j} with k outside {i, j}. Per-i partial sums are reduced in
    // index order so the result is independent of worker count.
    let partials: Vec<(f64, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut var_num = 0.0;
            let mut cov = 0.0;
            let mut var_den = 0.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let xi_ij = t.xi(i, j);
                let mut accumulate = |k: usize, l: usize| {
                    if k == l {
                        return;
                    }
                    let term = t.cov_term(i, j, k, l);
                    if term != 0.0 {
                        var_den += term;
                        if xi_ij {
                            cov += term;
                            if t.xi(k, l) {
                                var_num += term;
                            }
                        }
                    }
                };
                for l in 0..n {
                    accumulate(i, l);
                    accumulate(j, l);
                }
                for k in 0..n {
                    if k != i && k != j {
                        accumulate(k, i);
                        accumulate(k, j);
                    }
                }
            }
            (var_num, cov, var_den)
        })
        .collect();

    let mut var_num = 0.0;
    let mut cov = 0.0;
    let mut var_den = 0.0;
    for (vn, cv, vd) in partials {
        var_num += vn;
        cov += cv;
        var_den += vd;
    }

    Ok(RocAucPairMoments {
        mean_num,
        mean_den,
        var_num: var_num.max(0.0),
        var_den: var_den.max(0.0),
        cov,
    })
}

/// Deterministic rank-metric value on fully known labels.
pub(crate) fn deterministic_auc(data: &MaskedDataset) -> Option<f64> {
    let labels: Vec<bool> = (0..data.n()).map(|i| data.observed(i).unwrap_or(false)).collect();
    ScoreOrder::new(&data.scores()).auc(&labels)
}
