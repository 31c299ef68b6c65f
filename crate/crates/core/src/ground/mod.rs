//! Ground-state energies: exact enumeration for small `n`, annealing and
//! parallel tempering beyond it, disorder ensembles and the `n → ∞` fit.

mod anneal;
mod ensemble;
mod extrapolate;
mod tempering;

pub use anneal::{anneal_ground_state, AnnealSchedule};
pub use ensemble::{density_ensemble, DensityEnsemble, GroundRecord, SolverConfig};
pub use extrapolate::{
    check_paper_bound, extrapolate_density, BoundReport, DensityPoint, ExtrapolationFit,
    DEFAULT_OMEGA,
};
pub use tempering::{tempering_ground_state, TemperingConfig};

use serde::{Deserialize, Serialize};

use crate::enumerate::DEFAULT_ENUMERATION_CAP;
use crate::error::Result;
use crate::model::{hamiltonian, Disorder, SpinConfig};
use crate::thermo::enumerate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Annealing,
    Tempering,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Annealing => "annealing",
            Method::Tempering => "tempering",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundStateResult {
    pub n: usize,
    /// `min_σ H` (exact) or the best energy found (heuristic).
    pub energy: f64,
    /// `energy / n`.
    pub density: f64,
    pub argmin_bits: Vec<u64>,
    pub method: Method,
    pub restarts_used: u64,
    /// Single-spin proposals (heuristics) or configurations visited (exact).
    pub flips_used: u64,
}

impl GroundStateResult {
    fn from_config(config: &SpinConfig, j: &Disorder, method: Method, restarts: u64, flips: u64) -> Result<Self> {
        let energy = hamiltonian(config, j)?;
        Ok(GroundStateResult {
            n: j.n(),
            energy,
            density: energy / j.n() as f64,
            argmin_bits: config.words().to_vec(),
            method,
            restarts_used: restarts,
            flips_used: flips,
        })
    }

    pub fn argmin(&self) -> SpinConfig {
        SpinConfig::from_words(self.n, &self.argmin_bits)
    }
}

/// Global minimum by the shared Gray-code sweep (half the space, by the
/// global-flip symmetry). The energy is re-evaluated from scratch at the
/// argmin.
pub fn exact_ground_state(j: &Disorder) -> Result<GroundStateResult> {
    exact_ground_state_with_cap(j, DEFAULT_ENUMERATION_CAP)
}

pub fn exact_ground_state_with_cap(j: &Disorder, cap: usize) -> Result<GroundStateResult> {
    let e = enumerate(j, &[], cap)?;
    let config = SpinConfig::from_code(j.n(), e.argmin_code);
    GroundStateResult::from_config(&config, j, Method::Exact, 1, e.configurations)
}

/// Zero-temperature descent: flips any spin that lowers the energy until
/// none does. `sigma` must carry fields.
pub(crate) fn quench(sigma: &mut SpinConfig, j: &Disorder) -> Result<u64> {
    let mut flips = 0;
    loop {
        let mut improved = false;
        for k in 0..j.n() {
            if sigma.flip_delta(j, k)? < -1e-12 {
                sigma.apply_flip(j, k)?;
                flips += 1;
                improved = true;
            }
        }
        if !improved {
            return Ok(flips);
        }
    }
}
