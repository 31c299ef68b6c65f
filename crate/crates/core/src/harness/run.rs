//! Checkpointed, resumable ensemble runs.
//!
//! Layout under `<out>/<experiment_id>/`:
//!
//! ```text
//! manifest.json      the RunManifest
//! units/<hash>.json  one completion marker per finished unit (its rows)
//! failures.csv       units that failed in the latest invocation
//! records.csv        all rows, in sample order (written once complete)
//! summary.json       manifest + merged statistics (written once complete)
//! ```
//!
//! Units are sample indices `0..units`; each gets the seed
//! `derive_seed(master_seed, experiment_id, sample_index)`.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::stats::{merge_stats, merge_tree, EnsembleStats};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, digest_key};
use crate::thermo::FailurePolicy;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment_id: String,
    pub master_seed: u64,
    /// Free-form parameter grid; part of every unit's identity.
    pub parameters: serde_json::Value,
    pub units: u64,
    pub code_version: String,
}

impl RunManifest {
    pub fn new(experiment_id: impl Into<String>, master_seed: u64, parameters: serde_json::Value, units: u64) -> Self {
        RunManifest {
            experiment_id: experiment_id.into(),
            master_seed,
            parameters,
            units,
            code_version: crate::VERSION.to_string(),
        }
    }

    pub fn unit(&self, sample_index: u64) -> Unit {
        Unit {
            sample_index,
            seed: derive_seed(self.master_seed, &self.experiment_id, sample_index),
        }
    }

    /// Hex key naming the completion marker of a unit.
    pub fn unit_hash(&self, sample_index: u64) -> String {
        let tag = format!("skglass/unit\0{}\0{}", self.experiment_id, self.parameters);
        digest_key(&tag, &[self.master_seed, sample_index])[..10]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unit {
    pub sample_index: u64,
    pub seed: u64,
}

/// One scalar contribution of a row to an ensemble statistic.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub observable: String,
    pub n: usize,
    pub beta: Option<f64>,
    pub value: f64,
}

impl Observation {
    pub fn new(observable: impl Into<String>, n: usize, beta: Option<f64>, value: f64) -> Self {
        Observation {
            observable: observable.into(),
            n,
            beta,
            value,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Merge per-unit statistics with a fixed tree in sample order. When off,
    /// the reduction order follows the thread pool.
    pub reproducible: bool,
    pub policy: FailurePolicy,
    /// Stop after this many newly evaluated units (simulates interruption).
    pub max_new_units: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            reproducible: true,
            policy: FailurePolicy::Abort,
            max_new_units: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitFailure {
    pub sample_index: u64,
    pub seed: u64,
    pub message: String,
}

#[derive(Serialize, Deserialize)]
struct Marker<R> {
    sample_index: u64,
    seed: u64,
    rows: Vec<R>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome<R> {
    pub dir: PathBuf,
    pub stats: Vec<EnsembleStats>,
    /// Rows of every completed unit in sample order.
    pub rows: Vec<R>,
    pub completed: u64,
    pub evaluated_now: u64,
    pub failures: Vec<UnitFailure>,
    pub complete: bool,
}

#[derive(Serialize)]
struct Summary<'a> {
    manifest: &'a RunManifest,
    completed: u64,
    stats: &'a [EnsembleStats],
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Runs every incomplete unit of `manifest`, checkpointing each one, then
/// aggregates all completed units.
///
/// `evaluate` must be a pure function of the unit. `observe` maps each row to
/// the scalar observations accumulated into [`EnsembleStats`]; statistics
/// appear in order of first appearance.
pub fn run_ensemble<R, E, O>(
    manifest: &RunManifest,
    out_dir: &Path,
    options: &RunOptions,
    evaluate: E,
    observe: O,
) -> Result<RunOutcome<R>>
where
    R: Serialize + DeserializeOwned + Send + Sync + Clone,
    E: Fn(&Unit) -> Result<Vec<R>> + Sync,
    O: Fn(&R) -> Vec<Observation>,
{
    let dir = out_dir.join(&manifest.experiment_id);
    let units_dir = dir.join("units");
    fs::create_dir_all(&units_dir).map_err(|e| Error::io(&units_dir, e))?;

    let manifest_path = dir.join("manifest.json");
    if manifest_path.exists() {
        let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let existing: RunManifest = serde_json::from_str(&text)?;
        if existing != *manifest {
            return Err(Error::Config(format!(
                "{} holds a different manifest; use a fresh output directory",
                dir.display()
            )));
        }
    } else {
        write_atomic(&manifest_path, serde_json::to_string_pretty(manifest)?.as_bytes())?;
    }

    let marker_path = |i: u64| units_dir.join(format!("{}.json", manifest.unit_hash(i)));
    let mut pending: Vec<u64> = (0..manifest.units).filter(|&i| !marker_path(i).exists()).collect();
    if let Some(limit) = options.max_new_units {
        pending.truncate(limit as usize);
    }

    let results: Vec<std::result::Result<u64, UnitFailure>> = pending
        .par_iter()
        .map(|&i| {
            let unit = manifest.unit(i);
            let fail = |message: String| UnitFailure {
                sample_index: i,
                seed: unit.seed,
                message,
            };
            let rows = evaluate(&unit).map_err(|e| fail(e.to_string()))?;
            let marker = Marker {
                sample_index: i,
                seed: unit.seed,
                rows,
            };
            let bytes = serde_json::to_vec(&marker).map_err(|e| fail(e.to_string()))?;
            write_atomic(&marker_path(i), &bytes).map_err(|e| fail(e.to_string()))?;
            Ok(i)
        })
        .collect();

    let mut evaluated_now = 0;
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(_) => evaluated_now += 1,
            Err(f) => failures.push(f),
        }
    }
    if !failures.is_empty() {
        let path = dir.join("failures.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::io(&path, e.into()))?;
        for f in &failures {
            w.serialize(f).map_err(|e| Error::io(&path, e.into()))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        if options.policy == FailurePolicy::Abort {
            let f = &failures[0];
            return Err(Error::UnitFailed {
                sample_index: f.sample_index,
                seed: f.seed,
                message: f.message.clone(),
            });
        }
    }

    let mut rows = Vec::new();
    let mut per_unit: Vec<Vec<Observation>> = Vec::new();
    let mut completed = 0;
    for i in 0..manifest.units {
        let path = marker_path(i);
        if !path.exists() {
            continue;
        }
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let marker: Marker<R> = serde_json::from_slice(&bytes)?;
        if marker.sample_index != i {
            return Err(Error::Integrity {
                what: path.display().to_string(),
                detail: format!("marker holds sample {} instead of {i}", marker.sample_index),
            });
        }
        completed += 1;
        per_unit.push(marker.rows.iter().flat_map(&observe).collect());
        rows.extend(marker.rows);
    }

    let stats = aggregate(&per_unit, options.reproducible)?;
    let complete = completed == manifest.units;
    if complete {
        let path = dir.join("records.csv");
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &rows {
            w.serialize(r).map_err(|e| Error::io(&path, e.into()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io(&path, e.into_error()))?;
        write_atomic(&path, &bytes)?;
        let summary = Summary {
            manifest,
            completed,
            stats: &stats,
        };
        write_atomic(&dir.join("summary.json"), serde_json::to_string_pretty(&summary)?.as_bytes())?;
    }

    Ok(RunOutcome {
        dir,
        stats,
        rows,
        completed,
        evaluated_now,
        failures,
        complete,
    })
}

fn aggregate(per_unit: &[Vec<Observation>], reproducible: bool) -> Result<Vec<EnsembleStats>> {
    let mut keys: Vec<EnsembleStats> = Vec::new();
    for obs in per_unit.iter().flatten() {
        let probe = EnsembleStats::new(obs.observable.clone(), obs.n, obs.beta);
        if !keys.iter().any(|k| k.same_key(&probe)) {
            keys.push(probe);
        }
    }
    keys.iter()
        .map(|key| {
            let parts: Vec<EnsembleStats> = per_unit
                .iter()
                .map(|obs| {
                    let mut s = key.clone();
                    for o in obs {
                        if o.observable == key.observable
                            && o.n == key.n
                            && o.beta.map(f64::to_bits) == key.beta.map(f64::to_bits)
                        {
                            s.push(o.value);
                        }
                    }
                    s
                })
                .collect();
            if reproducible {
                Ok(merge_tree(&parts)?.unwrap_or_else(|| key.clone()))
            } else {
                parts
                    .into_par_iter()
                    .map(Ok)
                    .try_reduce(|| key.clone(), |a, b| merge_stats(&a, &b))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU64, Ordering};

    #[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
    struct Row {
        sample_index: u64,
        value: f64,
    }

    fn manifest(units: u64) -> RunManifest {
        RunManifest::new("toy", 5, serde_json::json!({"n": 3}), units)
    }

    fn eval(u: &Unit) -> Result<Vec<Row>> {
        Ok(vec![Row {
            sample_index: u.sample_index,
            value: (u.seed % 1000) as f64 / 7.0,
        }])
    }

    fn observe(r: &Row) -> Vec<Observation> {
        vec![Observation::new("value", 3, None, r.value)]
    }

    #[test]
    fn constant_evaluator() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_ensemble(
            &manifest(100),
            dir.path(),
            &RunOptions::default(),
            |u| Ok(vec![Row { sample_index: u.sample_index, value: 1.0 }]),
            observe,
        )
        .unwrap();
        assert!(out.complete);
        assert_eq!(out.stats[0].count, 100);
        assert_eq!(out.stats[0].mean, 1.0);
        assert_eq!(out.stats[0].stderr, 0.0);
    }

    #[test]
    fn resume_matches_uninterrupted_and_skips_done_units() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let m = manifest(40);
        let full = run_ensemble(&m, a.path(), &RunOptions::default(), eval, observe).unwrap();

        let calls = AtomicU64::new(0);
        let counting = |u: &Unit| {
            calls.fetch_add(1, Ordering::SeqCst);
            eval(u)
        };
        let partial = RunOptions {
            max_new_units: Some(17),
            ..RunOptions::default()
        };
        let first = run_ensemble(&m, b.path(), &partial, counting, observe).unwrap();
        assert!(!first.complete);
        assert_eq!(first.completed, 17);
        assert!(!b.path().join("toy/records.csv").exists());
        let second = run_ensemble(&m, b.path(), &RunOptions::default(), counting, observe).unwrap();
        assert!(second.complete);
        assert_eq!(second.evaluated_now, 23);
        assert_eq!(calls.load(Ordering::SeqCst), 40);
        let third = run_ensemble(&m, b.path(), &RunOptions::default(), counting, observe).unwrap();
        assert_eq!(third.evaluated_now, 0);
        assert_eq!(calls.load(Ordering::SeqCst), 40);

        assert_eq!(full.stats, second.stats);
        for f in ["records.csv", "summary.json", "manifest.json"] {
            let x = fs::read(a.path().join("toy").join(f)).unwrap();
            let y = fs::read(b.path().join("toy").join(f)).unwrap();
            assert_eq!(x, y, "{f} differs");
        }
    }

    #[test]
    fn failures_abort_or_continue() {
        let dir = tempfile::tempdir().unwrap();
        let m = manifest(10);
        let flaky = |u: &Unit| {
            if u.sample_index == 3 {
                Err(Error::Consistency("boom".into()))
            } else {
                eval(u)
            }
        };
        let err = run_ensemble(&m, dir.path(), &RunOptions::default(), flaky, observe).unwrap_err();
        match err {
            Error::UnitFailed { sample_index, seed, .. } => {
                assert_eq!(sample_index, 3);
                assert_eq!(seed, m.unit(3).seed);
            }
            other => panic!("unexpected {other}"),
        }
        let skip = RunOptions {
            policy: FailurePolicy::Skip,
            ..RunOptions::default()
        };
        let out = run_ensemble(&m, dir.path(), &skip, flaky, observe).unwrap();
        assert_eq!(out.failures.len(), 1);
        assert_eq!(out.completed, 9);
        assert!(!out.complete);
        assert!(dir.path().join("toy/failures.csv").exists());
        // a later successful pass completes the run
        let out = run_ensemble(&m, dir.path(), &RunOptions::default(), eval, observe).unwrap();
        assert!(out.complete);
        assert_eq!(out.evaluated_now, 1);
    }

    #[test]
    fn manifest_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        run_ensemble(&manifest(3), dir.path(), &RunOptions::default(), eval, observe).unwrap();
        let mut other = manifest(3);
        other.master_seed = 6;
        assert!(matches!(
            run_ensemble(&other, dir.path(), &RunOptions::default(), eval, observe),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn unit_seeds_are_distinct() {
        let m = manifest(1000);
        let mut seeds: Vec<u64> = (0..1000).map(|i| m.unit(i).seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 1000);
    }

    #[test]
    fn non_reproducible_reduction_agrees_closely() {
        let dir = tempfile::tempdir().unwrap();
        let m = manifest(64);
        let a = run_ensemble(&m, dir.path(), &RunOptions::default(), eval, observe).unwrap();
        let loose = RunOptions {
            reproducible: false,
            ..RunOptions::default()
        };
        let b = run_ensemble(&m, dir.path(), &loose, eval, observe).unwrap();
        assert_eq!(a.stats[0].count, b.stats[0].count);
        assert!((a.stats[0].mean - b.stats[0].mean).abs() < 1e-12);
        assert!((a.stats[0].m2 - b.stats[0].m2).abs() < 1e-9);
    }
}
