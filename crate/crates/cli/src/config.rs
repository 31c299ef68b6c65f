use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use skglass::constants::Constants;
use skglass::ground::SolverConfig;
use skglass::{Error, Result};

/// Output directory when neither a flag, the config file nor the
/// environment names one.
pub const DEFAULT_OUT: &str = "skglass-out";
pub const OUT_ENV: &str = "SKGLASS_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedBeta {
    BetaOne,
    BetaStar,
    BetaC,
}

/// An inverse temperature given either as a number or by name.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSpec {
    Value(f64),
    Named(NamedBeta),
}

impl BetaSpec {
    pub fn resolve(self) -> f64 {
        let c = Constants::get();
        match self {
            BetaSpec::Value(v) => v,
            BetaSpec::Named(NamedBeta::BetaOne) => c.beta_one,
            BetaSpec::Named(NamedBeta::BetaStar) => c.beta_star,
            BetaSpec::Named(NamedBeta::BetaC) => c.beta_c_rem,
        }
    }
}

impl FromStr for BetaSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "beta_one" => Ok(BetaSpec::Named(NamedBeta::BetaOne)),
            "beta_star" => Ok(BetaSpec::Named(NamedBeta::BetaStar)),
            "beta_c" => Ok(BetaSpec::Named(NamedBeta::BetaC)),
            other => other
                .parse::<f64>()
                .map(BetaSpec::Value)
                .map_err(|_| format!("`{other}` is neither a number nor one of beta_one, beta_star, beta_c")),
        }
    }
}

impl fmt::Display for BetaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BetaSpec::Value(v) => write!(f, "{v}"),
            BetaSpec::Named(NamedBeta::BetaOne) => f.write_str("beta_one"),
            BetaSpec::Named(NamedBeta::BetaStar) => f.write_str("beta_star"),
            BetaSpec::Named(NamedBeta::BetaC) => f.write_str("beta_c"),
        }
    }
}

/// Everything a run needs besides the subcommand's own switches. Loaded from
/// an optional JSON file, then overridden field by field from flags. Unset
/// fields fall back to per-command defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub n: Option<Vec<usize>>,
    pub beta: Option<Vec<BetaSpec>>,
    pub samples: Option<u64>,
    pub seed: u64,
    pub solver: Option<SolverConfig>,
    pub omega: Option<f64>,
    pub out: Option<PathBuf>,
    /// Print JSON instead of tables where a command supports it.
    pub json: bool,
    /// Deterministic reduction order (on unless explicitly disabled).
    pub reproducible: Option<bool>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn sizes(&self, default: &[usize]) -> Vec<usize> {
        self.n.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn samples_or(&self, default: u64) -> u64 {
        self.samples.unwrap_or(default)
    }

    /// Resolved β values, sorted and deduplicated.
    pub fn betas(&self, default: &[BetaSpec]) -> Vec<f64> {
        let specs = self.beta.clone().unwrap_or_else(|| default.to_vec());
        let mut v: Vec<f64> = specs.into_iter().map(BetaSpec::resolve).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    pub fn is_reproducible(&self) -> bool {
        self.reproducible.unwrap_or(true)
    }
}
