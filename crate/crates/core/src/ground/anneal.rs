use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{quench, GroundStateResult, Method};
use crate::error::{Error, Result};
use crate::model::{Disorder, SpinConfig};
use crate::rng::Stream;

/// Geometric inverse-temperature schedule for simulated annealing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub beta_start: f64,
    pub beta_end: f64,
    pub sweeps: u64,
    pub restarts: u64,
    pub seed: u64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule {
            beta_start: 0.5,
            beta_end: 5.0,
            sweeps: 2000,
            restarts: 32,
            seed: 0,
        }
    }
}

impl AnnealSchedule {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta_start > 0.0 && self.beta_start < self.beta_end && self.beta_end.is_finite()) {
            return Err(Error::Config(format!(
                "annealing needs 0 < beta_start < beta_end (got {} and {})",
                self.beta_start, self.beta_end
            )));
        }
        if self.sweeps == 0 || self.restarts == 0 {
            return Err(Error::Config("annealing needs at least one sweep and one restart".into()));
        }
        Ok(())
    }

    /// β used on sweep `t` of `0..sweeps`.
    pub fn beta_at(&self, t: u64) -> f64 {
        if self.sweeps == 1 {
            return self.beta_end;
        }
        let frac = t as f64 / (self.sweeps - 1) as f64;
        self.beta_start * (self.beta_end / self.beta_start).powf(frac)
    }
}

/// Lowest configuration seen by a walker.
pub(crate) struct Best {
    pub energy: f64,
    pub config: SpinConfig,
}

impl Best {
    pub fn from_walker(sigma: &SpinConfig) -> Self {
        Best {
            energy: sigma.cached_energy().expect("walker carries fields"),
            config: SpinConfig::from_words(sigma.n(), sigma.words()),
        }
    }

    #[inline]
    pub fn offer(&mut self, sigma: &SpinConfig) {
        let e = sigma.cached_energy().expect("walker carries fields");
        if e < self.energy {
            self.energy = e;
            self.config = SpinConfig::from_words(sigma.n(), sigma.words());
        }
    }
}

/// One sequential single-spin-flip Metropolis sweep at inverse temperature
/// `beta`. Returns the number of accepted flips.
pub(crate) fn metropolis_sweep(
    sigma: &mut SpinConfig,
    j: &Disorder,
    beta: f64,
    stream: &mut Stream,
    best: &mut Best,
) -> Result<u64> {
    let mut accepted = 0;
    for k in 0..j.n() {
        let delta = sigma.flip_delta(j, k)?;
        if delta <= 0.0 || stream.uniform() < (-beta * delta).exp() {
            sigma.apply_flip(j, k)?;
            accepted += 1;
            if delta < 0.0 {
                best.offer(sigma);
            }
        }
    }
    Ok(accepted)
}

fn anneal_once(j: &Disorder, schedule: &AnnealSchedule, restart: u64) -> Result<(SpinConfig, u64)> {
    let mut stream = Stream::new("skglass/anneal", &[schedule.seed, j.n() as u64], restart);
    let mut sigma = SpinConfig::random(j.n(), &mut stream).with_fields(j)?;
    let mut best = Best::from_walker(&sigma);
    for t in 0..schedule.sweeps {
        metropolis_sweep(&mut sigma, j, schedule.beta_at(t), &mut stream, &mut best)?;
    }
    let mut polished = best.config.with_fields(j)?;
    quench(&mut polished, j)?;
    Ok((polished, schedule.sweeps * j.n() as u64))
}

/// Best configuration over `schedule.restarts` independent annealing runs.
/// Restarts run in parallel; the reduction keeps the lowest energy and, on
/// ties, the lowest restart index.
pub fn anneal_ground_state(j: &Disorder, schedule: &AnnealSchedule) -> Result<GroundStateResult> {
    schedule.validate()?;
    let runs = (0..schedule.restarts)
        .into_par_iter()
        .map(|r| {
            let (config, flips) = anneal_once(j, schedule, r)?;
            GroundStateResult::from_config(&config, j, Method::Annealing, 1, flips)
        })
        .collect::<Result<Vec<_>>>()?;
    let flips: u64 = runs.iter().map(|r| r.flips_used).sum();
    let mut best = runs
        .into_iter()
        .reduce(|a, b| if b.energy < a.energy { b } else { a })
        .expect("at least one restart");
    best.restarts_used = schedule.restarts;
    best.flips_used = flips;
    Ok(best)
}
