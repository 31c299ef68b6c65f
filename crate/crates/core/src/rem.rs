//! Random Energy Model companion.
//!
//! Levels are i.i.d. Gaussians with variance `n/2`, chosen so the REM annealed
//! free energy `log 2 + β²/4` coincides with the SK one. With this
//! normalization the entropy per site `log 2 − β²/4` vanishes at
//! `β_c = 2√(log 2)`, and `β_c² = 4 log 2 = β*`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::Constants;
use crate::error::{Error, Result};
use crate::harness::stats::{merge_tree, EnsembleStats};
use crate::rng::Stream;
use crate::thermo::{thermo_ensemble, BetaGrid, LogSumExp, ThermoResult};

pub const DEFAULT_REM_CAP: usize = 26;

const REM_TAG: &str = "skglass/rem/v1";

#[derive(Clone, Debug, PartialEq)]
pub struct RemInstance {
    n: usize,
    energies: Vec<f64>,
    seed: u64,
    sample_index: u64,
}

impl RemInstance {
    pub fn sample(n: usize, seed: u64, sample_index: u64) -> Result<Self> {
        Self::sample_with_cap(n, seed, sample_index, DEFAULT_REM_CAP)
    }

    pub fn sample_with_cap(n: usize, seed: u64, sample_index: u64, cap: usize) -> Result<Self> {
        if n > cap {
            return Err(Error::Capacity { n, cap });
        }
        let sd = (n as f64 / 2.0).sqrt();
        let mut stream = Stream::new(REM_TAG, &[seed, n as u64], sample_index);
        let energies = (0..1u64 << n).map(|_| sd * stream.normal()).collect();
        Ok(RemInstance {
            n,
            energies,
            seed,
            sample_index,
        })
    }

    /// Explicit levels; the count must be a power of two.
    pub fn from_energies(energies: Vec<f64>) -> Result<Self> {
        let len = energies.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::InvalidInstance(format!(
                "REM level count must be a power of two, got {len}"
            )));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidInstance("REM levels must be finite".into()));
        }
        Ok(RemInstance {
            n: len.trailing_zeros() as usize,
            energies,
            seed: 0,
            sample_index: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sample_index(&self) -> u64 {
        self.sample_index
    }
}

/// Log-sum-exp over the levels at every β, entropy by `log Z + β⟨E⟩`.
pub fn rem_thermo(inst: &RemInstance, betas: &BetaGrid) -> Result<Vec<ThermoResult>> {
    let mut acc = vec![LogSumExp::new(); betas.len()];
    for &e in &inst.energies {
        for (a, &b) in acc.iter_mut().zip(betas.values()) {
            a.add(-b * e, e);
        }
    }
    let out: Vec<ThermoResult> = acc
        .iter()
        .zip(betas.values())
        .map(|(a, &beta)| {
            let log_z = a.log_total(0.0);
            let mean_energy = a.weighted_mean();
            ThermoResult {
                n: inst.n,
                beta,
                log_z,
                mean_energy,
                entropy: log_z + beta * mean_energy,
                max_log_weight: a.max() - log_z,
            }
        })
        .collect();
    if out.iter().any(|t| !t.log_z.is_finite()) {
        return Err(Error::Consistency("non-finite REM partition function".into()));
    }
    Ok(out)
}

/// Disorder-averaged REM entropy per site on a β grid.
pub fn rem_entropy_scan(n: usize, samples: u64, betas: &BetaGrid, seed: u64) -> Result<Vec<EnsembleStats>> {
    let per_sample = (0..samples)
        .into_par_iter()
        .map(|i| rem_thermo(&RemInstance::sample(n, seed, i)?, betas))
        .collect::<Result<Vec<_>>>()?;
    betas
        .values()
        .iter()
        .enumerate()
        .map(|(b, &beta)| {
            let parts: Vec<_> = per_sample
                .iter()
                .map(|r| EnsembleStats::from_values("rem_entropy_density", n, Some(beta), [r[b].entropy_density()]))
                .collect();
            Ok(merge_tree(&parts)?.unwrap_or_else(|| EnsembleStats::new("rem_entropy_density", n, Some(beta))))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub beta: f64,
    pub sk: EnsembleStats,
    pub rem: EnsembleStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkRemComparison {
    pub n: usize,
    pub samples: u64,
    pub rows: Vec<ComparisonRow>,
    /// `|β* − β_c²|`.
    pub beta_relation_gap: f64,
    /// SK entropy exceeds REM entropy at β_c by more than three combined
    /// standard errors. Only meaningful (and only asserted) for `n ≥ 16`.
    pub sk_above_rem_at_beta_c: bool,
    pub asserted: bool,
}

/// Entropy per site of SK and REM side by side at β = 0, β_c and β*.
/// Only the β_c ordering is a check; the β* values are reported.
pub fn compare_sk_rem(n: usize, samples: u64, seed: u64) -> Result<SkRemComparison> {
    let c = Constants::get();
    let grid = BetaGrid::diagnostic(vec![0.0, c.beta_c_rem, c.beta_star])?;
    let sk = thermo_ensemble(n, &grid, samples, seed)?.entropy;
    let rem = rem_entropy_scan(n, samples, &grid, seed)?;
    let labels = ["beta_zero", "beta_c", "beta_star"];
    let rows: Vec<ComparisonRow> = labels
        .iter()
        .zip(sk.into_iter().zip(rem))
        .zip(grid.values())
        .map(|((label, (sk, rem)), &beta)| ComparisonRow {
            label: label.to_string(),
            beta,
            sk,
            rem,
        })
        .collect();
    let at_c = &rows[1];
    let spread = (at_c.sk.stderr.powi(2) + at_c.rem.stderr.powi(2)).sqrt();
    Ok(SkRemComparison {
        n,
        samples,
        beta_relation_gap: c.rem_square_gap(),
        sk_above_rem_at_beta_c: at_c.sk.mean - at_c.rem.mean > 3.0 * spread,
        asserted: n >= 16,
        rows,
    })
}
