//! Numerical laboratory for the Sherrington–Kirkpatrick spin glass.
//!
//! * [`model`]: couplings, configurations, energy kernels.
//! * [`thermo`]: exact enumeration thermodynamics and the identities it checks.
//! * [`ground`]: exact and heuristic ground states, finite-size extrapolation.
//! * [`rem`]: the Random Energy Model companion.
//! * [`harness`]: disorder ensembles with checkpointing and statistics.
//! * [`experiments`]: the persisted runs behind the command-line tool.

pub mod constants;
pub mod enumerate;
pub mod error;
pub mod experiments;
pub mod ground;
pub mod harness;
pub mod model;
pub mod rem;
pub mod rng;
pub mod thermo;

pub use error::{Error, Result};

/// Version tag stamped into run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
