//! Exact finite-n thermodynamics by full enumeration.
//!
//! One Gray-code sweep feeds any number of inverse temperatures. Each β keeps
//! a streaming log-sum-exp accumulator (running maximum plus rescaled sums),
//! so `log Z` never overflows even where `β·|H|` is tens of nats.

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::Constants;
use crate::enumerate::{gray_sweep, DEFAULT_ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::harness::stats::{merge_tree, EnsembleStats};
use crate::model::{sample_disorder, Disorder};

/// Strictly increasing inverse temperatures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BetaGrid {
    values: Vec<f64>,
}

impl BetaGrid {
    /// Positive, finite, strictly increasing values.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::validate(&values, false)?;
        Ok(BetaGrid { values })
    }

    /// Like [`BetaGrid::new`] but admits β = 0, for sanity checks only.
    pub fn diagnostic(values: Vec<f64>) -> Result<Self> {
        Self::validate(&values, true)?;
        Ok(BetaGrid { values })
    }

    fn validate(values: &[f64], allow_zero: bool) -> Result<()> {
        if values.is_empty() {
            return Err(Error::Config("empty beta grid".into()));
        }
        for &b in values {
            let ok = b.is_finite() && (b > 0.0 || (allow_zero && b == 0.0));
            if !ok {
                return Err(Error::Config(format!("invalid inverse temperature {b}")));
            }
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("beta grid must be strictly increasing".into()));
        }
        Ok(())
    }

    /// Geometric ladder of `rungs` values from `low` to `high`.
    pub fn geometric(low: f64, high: f64, rungs: usize) -> Result<Self> {
        if rungs < 2 || !(low > 0.0 && high > low) {
            return Err(Error::Config(format!(
                "geometric ladder needs 0 < low < high and at least 2 rungs (got {low}, {high}, {rungs})"
            )));
        }
        let ratio = (high / low).powf(1.0 / (rungs - 1) as f64);
        let mut values: Vec<f64> = (0..rungs).map(|i| low * ratio.powi(i as i32)).collect();
        values[rungs - 1] = high;
        BetaGrid::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl TryFrom<Vec<f64>> for BetaGrid {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        BetaGrid::diagnostic(v)
    }
}

impl From<BetaGrid> for Vec<f64> {
    fn from(g: BetaGrid) -> Self {
        g.values
    }
}

/// Per-disorder, per-β observables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermoResult {
    pub n: usize,
    pub beta: f64,
    /// `log Z_n(β, J)`.
    pub log_z: f64,
    /// Gibbs average of `H`.
    pub mean_energy: f64,
    /// `log Z + β⟨H⟩`.
    pub entropy: f64,
    /// `max_σ(−βH(σ)) − log Z`, always ≤ 0.
    pub max_log_weight: f64,
}

impl ThermoResult {
    pub fn free_energy_density(&self) -> f64 {
        self.log_z / self.n as f64
    }

    pub fn entropy_density(&self) -> f64 {
        self.entropy / self.n as f64
    }
}

/// Streaming `log Σ exp(x)` together with `Σ e^x·E`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LogSumExp {
    max: f64,
    sum: f64,
    weighted: f64,
}

impl LogSumExp {
    pub(crate) fn new() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            sum: 0.0,
            weighted: 0.0,
        }
    }

    #[inline(always)]
    pub(crate) fn add(&mut self, x: f64, value: f64) {
        if x > self.max {
            let r = (self.max - x).exp();
            self.sum = self.sum * r + 1.0;
            self.weighted = self.weighted * r + value;
            self.max = x;
        } else {
            let w = (x - self.max).exp();
            self.sum += w;
            self.weighted += w * value;
        }
    }

    /// `log Σ e^x + log_multiplicity`.
    pub(crate) fn log_total(&self, log_multiplicity: f64) -> f64 {
        self.max + self.sum.ln() + log_multiplicity
    }

    pub(crate) fn max(&self) -> f64 {
        self.max
    }

    pub(crate) fn weighted_mean(&self) -> f64 {
        self.weighted / self.sum
    }
}

/// Outcome of one enumeration sweep: thermodynamics at every requested β
/// plus the exact minimum energy.
#[derive(Clone, Debug, PartialEq)]
pub struct Enumeration {
    pub n: usize,
    pub thermo: Vec<ThermoResult>,
    pub min_energy: f64,
    /// Argmin in the half-space with the last spin up; first found on ties.
    pub argmin_code: u64,
    pub configurations: u64,
}

/// Single sweep over all `2^n` configurations computing thermodynamics at
/// every entry of `betas` (any order) and the minimum energy.
pub fn enumerate(j: &Disorder, betas: &[f64], cap: usize) -> Result<Enumeration> {
    let n = j.n();
    let mut acc = vec![LogSumExp::new(); betas.len()];
    let mut min_energy = f64::INFINITY;
    let mut argmin_code = 0;
    let mut visited = 0u64;
    gray_sweep(j, cap, |code, e| {
        visited += 1;
        if e < min_energy {
            min_energy = e;
            argmin_code = code;
        }
        for (a, &b) in acc.iter_mut().zip(betas) {
            a.add(-b * e, e);
        }
    })?;
    let thermo = acc
        .iter()
        .zip(betas)
        .map(|(a, &beta)| {
            let log_z = a.log_total(LN_2);
            let mean_energy = a.weighted_mean();
            ThermoResult {
                n,
                beta,
                log_z,
                mean_energy,
                entropy: log_z + beta * mean_energy,
                max_log_weight: a.max() - log_z,
            }
        })
        .collect::<Vec<_>>();
    if thermo
        .iter()
        .any(|t| !(t.log_z.is_finite() && t.mean_energy.is_finite()))
    {
        return Err(Error::Consistency("non-finite thermodynamic result".into()));
    }
    Ok(Enumeration {
        n,
        thermo,
        min_energy,
        argmin_code,
        configurations: 2 * visited,
    })
}

pub fn enumerate_thermo(j: &Disorder, betas: &BetaGrid) -> Result<Vec<ThermoResult>> {
    enumerate_thermo_with_cap(j, betas, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_thermo_with_cap(
    j: &Disorder,
    betas: &BetaGrid,
    cap: usize,
) -> Result<Vec<ThermoResult>> {
    Ok(enumerate(j, betas.values(), cap)?.thermo)
}

/// Gibbs entropy `−Σ μ log μ` by a second sweep, given `log Z` from the first.
/// Independent of the `log Z + β⟨H⟩` route used in [`ThermoResult`].
pub fn gibbs_entropy_direct(j: &Disorder, beta: f64, log_z: f64, cap: usize) -> Result<f64> {
    let mut total = 0.0;
    gray_sweep(j, cap, |_, e| {
        let log_p = -beta * e - log_z;
        total += -log_p * log_p.exp();
    })?;
    Ok(2.0 * total)
}

/// `(1/n) log E_J Z_n = log 2 + β²(n−1)/(4n)`.
pub fn annealed_free_energy(n: usize, beta: f64) -> f64 {
    let n = n as f64;
    LN_2 + beta * beta * (n - 1.0) / (4.0 * n)
}

/// `n → ∞` limit `log 2 + β²/4`.
pub fn annealed_free_energy_limit(beta: f64) -> f64 {
    LN_2 + beta * beta / 4.0
}

/// Monte-Carlo check of `E_J Z_n(β) = 2^n e^{β²(n−1)/4}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealedMomentReport {
    pub n: usize,
    pub beta: f64,
    pub samples: u64,
    pub mc_estimate: f64,
    pub closed_form: f64,
    pub stderr: f64,
    pub z_score: f64,
    /// False when any sampled `Z` or the variance estimate is non-finite.
    pub reliable: bool,
}

impl AnnealedMomentReport {
    pub fn within(&self, sigmas: f64) -> bool {
        self.reliable && self.z_score.abs() <= sigmas
    }
}

pub fn verify_annealed_moment(
    n: usize,
    beta: f64,
    samples: u64,
    seed: u64,
) -> Result<AnnealedMomentReport> {
    if n == 0 || !(beta >= 0.0 && beta.is_finite()) || samples < 2 {
        return Err(Error::Config(format!(
            "annealed moment needs n >= 1, finite beta >= 0, samples >= 2 (got {n}, {beta}, {samples})"
        )));
    }
    let grid = [beta];
    let zs = (0..samples)
        .into_par_iter()
        .map(|i| {
            let d = sample_disorder(n, seed, i)?;
            let e = enumerate(&d, &grid, DEFAULT_ENUMERATION_CAP)?;
            Ok(EnsembleStats::from_values("partition", n, Some(beta), [e.thermo[0].log_z.exp()]))
        })
        .collect::<Result<Vec<_>>>()?;
    let stats = merge_tree(&zs)?.expect("at least two samples");
    let closed_form = (n as f64 * LN_2 + beta * beta * (n as f64 - 1.0) / 4.0).exp();
    let reliable = stats.mean.is_finite() && stats.stderr.is_finite() && stats.max.is_finite();
    let diff = stats.mean - closed_form;
    let z_score = if stats.stderr > 0.0 {
        diff / stats.stderr
    } else if diff.abs() <= 1e-12 * closed_form {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(AnnealedMomentReport {
        n,
        beta,
        samples,
        mc_estimate: stats.mean,
        closed_form,
        stderr: stats.stderr,
        z_score,
        reliable,
    })
}

/// What to do with a disorder sample whose evaluation fails.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailurePolicy {
    #[default]
    Abort,
    Skip,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuenchedReport {
    pub stats: EnsembleStats,
    pub failed: Vec<u64>,
}

/// Disorder average of `(1/n) log Z_n(β, J)` over samples `0..samples`.
pub fn quenched_free_energy(n: usize, beta: f64, samples: u64, seed: u64) -> Result<EnsembleStats> {
    Ok(quenched_free_energy_with(n, beta, samples, seed, FailurePolicy::Abort, DEFAULT_ENUMERATION_CAP)?.stats)
}

pub fn quenched_free_energy_with(
    n: usize,
    beta: f64,
    samples: u64,
    seed: u64,
    policy: FailurePolicy,
    cap: usize,
) -> Result<QuenchedReport> {
    if samples < 2 {
        return Err(Error::Config("quenched average needs at least 2 samples".into()));
    }
    let grid = [beta];
    let per_sample: Vec<(u64, Result<f64>)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let r = sample_disorder(n, seed, i)
                .and_then(|d| enumerate(&d, &grid, cap))
                .map(|e| e.thermo[0].free_energy_density());
            (i, r)
        })
        .collect();
    let mut parts = Vec::with_capacity(per_sample.len());
    let mut failed = Vec::new();
    for (i, r) in per_sample {
        match r {
            Ok(f) => parts.push(EnsembleStats::from_values("free_energy", n, Some(beta), [f])),
            Err(e) => match policy {
                FailurePolicy::Abort => return Err(e),
                FailurePolicy::Skip => failed.push(i),
            },
        }
    }
    let stats = merge_tree(&parts)?.unwrap_or_else(|| EnsembleStats::new("free_energy", n, Some(beta)));
    Ok(QuenchedReport { stats, failed })
}

/// Disorder averages of free-energy and entropy densities on a β grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermoEnsemble {
    pub free_energy: Vec<EnsembleStats>,
    pub entropy: Vec<EnsembleStats>,
}

pub fn thermo_ensemble(n: usize, betas: &BetaGrid, samples: u64, seed: u64) -> Result<ThermoEnsemble> {
    let per_sample = (0..samples)
        .into_par_iter()
        .map(|i| {
            let d = sample_disorder(n, seed, i)?;
            enumerate_thermo(&d, betas)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut free_energy = Vec::new();
    let mut entropy = Vec::new();
    for (b, &beta) in betas.values().iter().enumerate() {
        let f: Vec<_> = per_sample
            .iter()
            .map(|r| EnsembleStats::from_values("free_energy", n, Some(beta), [r[b].free_energy_density()]))
            .collect();
        let s: Vec<_> = per_sample
            .iter()
            .map(|r| EnsembleStats::from_values("entropy_density", n, Some(beta), [r[b].entropy_density()]))
            .collect();
        free_energy.push(merge_tree(&f)?.unwrap_or_else(|| EnsembleStats::new("free_energy", n, Some(beta))));
        entropy.push(merge_tree(&s)?.unwrap_or_else(|| EnsembleStats::new("entropy_density", n, Some(beta))));
    }
    Ok(ThermoEnsemble { free_energy, entropy })
}

/// Log-space residual of
/// `μ_{β*}(σ) = μ_1(σ)^{β*} · Z(1)^{β*} / Z(β*)`, maximized over σ.
pub fn functional_equation_residual(j: &Disorder, beta_star: f64) -> Result<f64> {
    functional_equation_residual_with_cap(j, beta_star, DEFAULT_ENUMERATION_CAP)
}

pub fn functional_equation_residual_with_cap(j: &Disorder, beta_star: f64, cap: usize) -> Result<f64> {
    let e = enumerate(j, &[1.0, beta_star], cap)?;
    let log_z_one = e.thermo[0].log_z;
    let log_z_star = e.thermo[1].log_z;
    let mut worst = 0.0f64;
    gray_sweep(j, cap, |_, h| {
        let lhs = -beta_star * h - log_z_star;
        let log_mu_one = -h - log_z_one;
        let rhs = beta_star * log_mu_one + beta_star * log_z_one - log_z_star;
        worst = worst.max((lhs - rhs).abs());
    })?;
    Ok(worst)
}

/// `α̂ = β*·f(1) − f(β*)` for one instance, together with the same quantity
/// by the second route `−(1/n) log Σ_σ μ_1(σ)^{β*}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaSample {
    pub alpha: f64,
    pub via_measure_power: f64,
}

pub fn alpha_for_instance(j: &Disorder, cap: usize) -> Result<AlphaSample> {
    let beta_star = Constants::get().beta_star;
    let n = j.n() as f64;
    let e = enumerate(j, &[1.0, beta_star], cap)?;
    let log_z_one = e.thermo[0].log_z;
    let alpha = beta_star * (log_z_one / n) - e.thermo[1].log_z / n;
    let mut acc = LogSumExp::new();
    gray_sweep(j, cap, |_, h| {
        acc.add(beta_star * (-h - log_z_one), 0.0);
    })?;
    Ok(AlphaSample {
        alpha,
        via_measure_power: -acc.log_total(LN_2) / n,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlphaReport {
    pub stats: EnsembleStats,
    /// Largest per-sample `|α̂ − (−(1/n) log Σ μ_1^{β*})|`.
    pub max_identity_gap: f64,
}

pub fn alpha_estimate(n: usize, samples: u64, seed: u64) -> Result<AlphaReport> {
    let per_sample = (0..samples)
        .into_par_iter()
        .map(|i| alpha_for_instance(&sample_disorder(n, seed, i)?, DEFAULT_ENUMERATION_CAP))
        .collect::<Result<Vec<_>>>()?;
    let parts: Vec<_> = per_sample
        .iter()
        .map(|a| EnsembleStats::from_values("alpha", n, None, [a.alpha]))
        .collect();
    let max_identity_gap = per_sample
        .iter()
        .map(|a| (a.alpha - a.via_measure_power).abs())
        .fold(0.0, f64::max);
    Ok(AlphaReport {
        stats: merge_tree(&parts)?.unwrap_or_else(|| EnsembleStats::new("alpha", n, None)),
        max_identity_gap,
    })
}
