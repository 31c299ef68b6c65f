use serde::{Deserialize, Serialize};

use super::anneal::{metropolis_sweep, Best};
use super::{quench, GroundStateResult, Method};
use crate::error::{Error, Result};
use crate::model::{Disorder, SpinConfig};
use crate::rng::Stream;
use crate::thermo::BetaGrid;

/// Geometric ladder and sweep budget for parallel tempering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemperingConfig {
    pub beta_low: f64,
    pub beta_high: f64,
    pub rungs: usize,
    pub sweeps: u64,
}

impl Default for TemperingConfig {
    fn default() -> Self {
        TemperingConfig {
            beta_low: 0.3,
            beta_high: 3.0,
            rungs: 16,
            sweeps: 2000,
        }
    }
}

impl TemperingConfig {
    pub fn ladder(&self) -> Result<BetaGrid> {
        BetaGrid::geometric(self.beta_low, self.beta_high, self.rungs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rungs < 2 {
            return Err(Error::Config("parallel tempering needs at least two rungs".into()));
        }
        if self.sweeps == 0 {
            return Err(Error::Config("parallel tempering needs at least one sweep".into()));
        }
        self.ladder().map(|_| ())
    }
}

/// Replica-exchange diagnostics alongside the result.
#[derive(Clone, Debug, PartialEq)]
pub struct TemperingRun {
    pub result: GroundStateResult,
    /// Acceptance fraction of swaps between rung `i` and `i + 1`.
    pub swap_acceptance: Vec<f64>,
}

/// Parallel tempering: one Metropolis sweep per replica, then
/// replica-exchange attempts between neighbouring rungs (even pairs on even
/// sweeps, odd pairs on odd sweeps). Swaps are accepted with probability
/// `min(1, exp((β_i − β_{i+1})(E_i − E_{i+1})))`, which keeps the product of
/// Boltzmann distributions invariant. Returns the best configuration seen by
/// any replica, polished by a zero-temperature descent.
pub fn tempering_ground_state(
    j: &Disorder,
    ladder: &BetaGrid,
    sweeps: u64,
    seed: u64,
) -> Result<GroundStateResult> {
    Ok(tempering_run(j, ladder, sweeps, seed)?.result)
}

pub fn tempering_run(j: &Disorder, ladder: &BetaGrid, sweeps: u64, seed: u64) -> Result<TemperingRun> {
    let rungs = ladder.len();
    if rungs < 2 {
        return Err(Error::Config("parallel tempering needs at least two rungs".into()));
    }
    if sweeps == 0 {
        return Err(Error::Config("parallel tempering needs at least one sweep".into()));
    }
    let betas = ladder.values();
    let n = j.n();
    let mut stream = Stream::new("skglass/tempering", &[seed, n as u64], 0);
    let mut replicas = (0..rungs)
        .map(|_| SpinConfig::random(n, &mut stream).with_fields(j))
        .collect::<Result<Vec<_>>>()?;
    // slot[r] = replica currently at rung r
    let mut slot: Vec<usize> = (0..rungs).collect();
    let mut best = Best::from_walker(&replicas[0]);
    for r in &replicas {
        best.offer(r);
    }
    let mut attempts = vec![0u64; rungs - 1];
    let mut accepts = vec![0u64; rungs - 1];

    for t in 0..sweeps {
        for (r, &beta) in betas.iter().enumerate() {
            metropolis_sweep(&mut replicas[slot[r]], j, beta, &mut stream, &mut best)?;
        }
        let mut r = (t % 2) as usize;
        while r + 1 < rungs {
            let e_lo = replicas[slot[r]].cached_energy().unwrap();
            let e_hi = replicas[slot[r + 1]].cached_energy().unwrap();
            let log_ratio = (betas[r] - betas[r + 1]) * (e_lo - e_hi);
            attempts[r] += 1;
            if log_ratio >= 0.0 || stream.uniform() < log_ratio.exp() {
                slot.swap(r, r + 1);
                accepts[r] += 1;
            }
            r += 2;
        }
    }

    let mut polished = best.config.with_fields(j)?;
    quench(&mut polished, j)?;
    let result = GroundStateResult::from_config(
        &polished,
        j,
        Method::Tempering,
        1,
        sweeps * rungs as u64 * n as u64,
    )?;
    let swap_acceptance = attempts
        .iter()
        .zip(&accepts)
        .map(|(&a, &s)| if a == 0 { 0.0 } else { s as f64 / a as f64 })
        .collect();
    Ok(TemperingRun {
        result,
        swap_acceptance,
    })
}
