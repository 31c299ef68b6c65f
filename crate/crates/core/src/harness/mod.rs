//! Ensemble orchestration: statistics, seeding and checkpointed runs.

pub mod run;
pub mod stats;

pub use run::{run_ensemble, Observation, RunManifest, RunOptions, RunOutcome, Unit, UnitFailure};
pub use stats::{merge_stats, merge_tree, EnsembleStats};
