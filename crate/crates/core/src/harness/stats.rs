use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Running mean/variance of one scalar observable over disorder samples,
/// keyed by `(observable, n, beta)`.
///
/// Accumulation is Welford's update; merging uses the pairwise
/// (Chan–Golub–LeVeque) combination, so any split of the data merges back to
/// the whole-set moments up to rounding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub observable: String,
    pub n: usize,
    #[serde(default)]
    pub beta: Option<f64>,
    pub count: u64,
    pub mean: f64,
    /// Sum of squared deviations from the mean.
    pub m2: f64,
    /// Sample standard deviation over √count; zero below two samples.
    pub stderr: f64,
    pub min: f64,
    pub max: f64,
}

impl EnsembleStats {
    pub fn new(observable: impl Into<String>, n: usize, beta: Option<f64>) -> Self {
        EnsembleStats {
            observable: observable.into(),
            n,
            beta,
            count: 0,
            mean: 0.0,
            m2: 0.0,
            stderr: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }

    pub fn from_values<I: IntoIterator<Item = f64>>(
        observable: impl Into<String>,
        n: usize,
        beta: Option<f64>,
        values: I,
    ) -> Self {
        let mut s = EnsembleStats::new(observable, n, beta);
        for v in values {
            s.push(v);
        }
        s
    }

    pub fn same_key(&self, other: &EnsembleStats) -> bool {
        self.observable == other.observable
            && self.n == other.n
            && self.beta.map(f64::to_bits) == other.beta.map(f64::to_bits)
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
        self.refresh();
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    fn refresh(&mut self) {
        self.stderr = if self.count < 2 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        };
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

/// Combines two partial accumulations of the same key.
pub fn merge_stats(a: &EnsembleStats, b: &EnsembleStats) -> Result<EnsembleStats> {
    if !a.same_key(b) {
        return Err(Error::KeyMismatch(format!(
            "({}, n={}, beta={:?}) vs ({}, n={}, beta={:?})",
            a.observable, a.n, a.beta, b.observable, b.n, b.beta
        )));
    }
    if a.count == 0 {
        return Ok(b.clone());
    }
    if b.count == 0 {
        return Ok(a.clone());
    }
    let na = a.count as f64;
    let nb = b.count as f64;
    let total = na + nb;
    let delta = b.mean - a.mean;
    let mut out = a.clone();
    out.count = a.count + b.count;
    out.mean = a.mean + delta * (nb / total);
    out.m2 = a.m2 + b.m2 + delta * delta * na * nb / total;
    out.min = a.min.min(b.min);
    out.max = a.max.max(b.max);
    out.refresh();
    Ok(out)
}

/// Reduces per-sample statistics with a fixed balanced binary tree over the
/// given order, so the result depends only on the order of `parts`.
pub fn merge_tree(parts: &[EnsembleStats]) -> Result<Option<EnsembleStats>> {
    match parts.len() {
        0 => Ok(None),
        1 => Ok(Some(parts[0].clone())),
        len => {
            let (l, r) = parts.split_at(len / 2);
            let l = merge_tree(l)?.unwrap();
            let r = merge_tree(r)?.unwrap();
            merge_stats(&l, &r).map(Some)
        }
    }
}
