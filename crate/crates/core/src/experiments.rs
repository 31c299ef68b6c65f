//! Persisted ensemble experiments built on [`crate::harness`].
//!
//! Disorder depends only on `(master_seed, n, sample_index)`, never on the
//! experiment, so runs sharing a master seed see the same instances: the
//! exact and heuristic ground-state runs at one `n` are directly comparable.
//! The per-unit seed drives solver randomness only.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::enumerate::DEFAULT_ENUMERATION_CAP;
use crate::error::Result;
use crate::ground::{GroundRecord, SolverConfig};
use crate::harness::{run_ensemble, Observation, RunManifest, RunOptions, RunOutcome};
use crate::model::sample_disorder;
use crate::rem::{rem_thermo, RemInstance};
use crate::rng::digest_key;
use crate::thermo::{enumerate_thermo_with_cap, BetaGrid, ThermoResult};

/// `<kind>-n<n>-<digest>`: runs differing in any parameter (β grid, solver
/// knobs) land in different directories and draw different unit seeds.
pub fn experiment_id(kind: &str, n: usize, parameters: &serde_json::Value) -> String {
    let digest: String = digest_key(&format!("skglass/experiment\0{parameters}"), &[])[..4]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    format!("{kind}-n{n}-{digest}")
}

/// One CSV row of a thermodynamics run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermoRecord {
    pub model: String,
    pub n: usize,
    pub beta: f64,
    pub sample_index: u64,
    pub log_z: f64,
    pub mean_energy: f64,
    pub entropy: f64,
}

impl ThermoRecord {
    fn new(model: &str, sample_index: u64, t: &ThermoResult) -> Self {
        ThermoRecord {
            model: model.to_string(),
            n: t.n,
            beta: t.beta,
            sample_index,
            log_z: t.log_z,
            mean_energy: t.mean_energy,
            entropy: t.entropy,
        }
    }

    fn observations(&self) -> Vec<Observation> {
        let n = self.n as f64;
        let (f, s) = if self.model == "rem" {
            ("rem_free_energy", "rem_entropy_density")
        } else {
            ("free_energy", "entropy_density")
        };
        vec![
            Observation::new(f, self.n, Some(self.beta), self.log_z / n),
            Observation::new(s, self.n, Some(self.beta), self.entropy / n),
        ]
    }
}

/// SK free energy and entropy densities by exact enumeration.
pub fn free_energy_run(
    n: usize,
    betas: &BetaGrid,
    samples: u64,
    master_seed: u64,
    out_dir: &Path,
    options: &RunOptions,
) -> Result<RunOutcome<ThermoRecord>> {
    let parameters = serde_json::json!({ "n": n, "betas": betas.values(), "cap": DEFAULT_ENUMERATION_CAP });
    let manifest = RunManifest::new(experiment_id("free-energy", n, &parameters), master_seed, parameters, samples);
    run_ensemble(
        &manifest,
        out_dir,
        options,
        |u| {
            let d = sample_disorder(n, master_seed, u.sample_index)?;
            let rs = enumerate_thermo_with_cap(&d, betas, DEFAULT_ENUMERATION_CAP)?;
            Ok(rs.iter().map(|t| ThermoRecord::new("sk", u.sample_index, t)).collect())
        },
        ThermoRecord::observations,
    )
}

/// Ground-state densities with the configured solver.
pub fn ground_state_run(
    n: usize,
    samples: u64,
    solver: &SolverConfig,
    master_seed: u64,
    out_dir: &Path,
    options: &RunOptions,
) -> Result<RunOutcome<GroundRecord>> {
    let method = match solver {
        SolverConfig::Exact { .. } => "exact",
        SolverConfig::Annealing(_) => "annealing",
        SolverConfig::Tempering(_) => "tempering",
    };
    let parameters = serde_json::json!({ "n": n, "solver": solver });
    let manifest = RunManifest::new(
        experiment_id(&format!("ground-{method}"), n, &parameters),
        master_seed,
        parameters,
        samples,
    );
    run_ensemble(
        &manifest,
        out_dir,
        options,
        |u| {
            let d = sample_disorder(n, master_seed, u.sample_index)?;
            let g = solver.solve(&d, u.seed)?;
            Ok(vec![GroundRecord::new(u.sample_index, &g)])
        },
        |r| vec![Observation::new("ground_density", r.n, None, r.density)],
    )
}

/// REM free energy and entropy densities.
pub fn rem_run(
    n: usize,
    betas: &BetaGrid,
    samples: u64,
    master_seed: u64,
    out_dir: &Path,
    options: &RunOptions,
) -> Result<RunOutcome<ThermoRecord>> {
    let parameters = serde_json::json!({ "n": n, "betas": betas.values() });
    let manifest = RunManifest::new(experiment_id("rem", n, &parameters), master_seed, parameters, samples);
    run_ensemble(
        &manifest,
        out_dir,
        options,
        |u| {
            let inst = RemInstance::sample(n, master_seed, u.sample_index)?;
            let rs = rem_thermo(&inst, betas)?;
            Ok(rs.iter().map(|t| ThermoRecord::new("rem", u.sample_index, t)).collect())
        },
        ThermoRecord::observations,
    )
}
