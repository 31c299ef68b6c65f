//! `skglass`: command-line driver for the spin-glass laboratory.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use skglass::ground::{AnnealSchedule, SolverConfig, TemperingConfig};
use skglass::Error;

use config::{BetaSpec, RunConfig};

/// Exit statuses. Clap's own usage errors also exit with 2.
pub mod exit {
    pub const OK: u8 = 0;
    pub const FAILURE: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const CAPACITY: u8 = 3;
    pub const CHECK: u8 = 4;
    pub const INTEGRITY: u8 = 5;
}

#[derive(Parser, Debug)]
#[command(name = "skglass", version, about = "Exact and heuristic numerics for the SK spin glass")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the resolved configuration to this file and continue.
    #[arg(long, global = true)]
    save_config: Option<PathBuf>,
    /// System sizes, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Inverse temperatures: numbers or beta_one, beta_star, beta_c.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    beta: Option<Vec<BetaSpec>>,
    /// Disorder samples per size.
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory [default: $SKGLASS_OUT, else ./skglass-out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Emit JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,
    /// Let the reduction order follow the thread pool.
    #[arg(long, global = true)]
    no_reproducible: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the reference constants and the identities they satisfy.
    Constants,
    /// Run the identity suite; exit 4 if any check fails.
    Verify {
        /// Run only these checks (repeatable).
        #[arg(long = "check", value_enum)]
        checks: Vec<Check>,
        /// Use the couplings stored in this disorder file for the
        /// per-instance checks.
        #[arg(long)]
        disorder: Option<PathBuf>,
    },
    /// Quenched free energy and entropy by exact enumeration.
    FreeEnergy,
    /// Ground-state energy densities.
    GroundState(SolverArgs),
    /// Random Energy Model entropy, optionally beside SK.
    Rem {
        /// Also compare SK and REM entropies at beta = 0, beta_c, beta*.
        #[arg(long)]
        compare: bool,
    },
    /// Annealed curve and the line through β = 1 as TSV.
    Figure {
        /// Destination [default: <out>/figure.tsv].
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fit ground-state densities to ε₀ + a·n^(−ω) and compare with the bound.
    Extrapolate {
        /// JSON list of {n, mean, stderr}; default reads ground-state
        /// summaries under the output directory.
        #[arg(long)]
        points: Option<PathBuf>,
        #[arg(long)]
        omega: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Eq2,
    Eq3,
    Thermo,
    Jensen,
    Annealed,
    BetaStar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Exact,
    Annealing,
    Tempering,
}

#[derive(Args, Debug)]
struct SolverArgs {
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Annealing and tempering sweep budget.
    #[arg(long)]
    sweeps: Option<u64>,
    /// Annealing restarts.
    #[arg(long)]
    restarts: Option<u64>,
    /// Tempering ladder size.
    #[arg(long)]
    rungs: Option<usize>,
    /// Enumeration cap for the exact solver.
    #[arg(long)]
    cap: Option<usize>,
}

impl SolverArgs {
    fn apply(&self, base: Option<SolverConfig>) -> Option<SolverConfig> {
        let mut solver = match (self.method, base) {
            (None, base) => base,
            (Some(MethodArg::Exact), Some(s @ SolverConfig::Exact { .. }))
            | (Some(MethodArg::Annealing), Some(s @ SolverConfig::Annealing(_)))
            | (Some(MethodArg::Tempering), Some(s @ SolverConfig::Tempering(_))) => Some(s),
            (Some(MethodArg::Exact), _) => Some(SolverConfig::default()),
            (Some(MethodArg::Annealing), _) => Some(SolverConfig::Annealing(AnnealSchedule::default())),
            (Some(MethodArg::Tempering), _) => Some(SolverConfig::Tempering(TemperingConfig::default())),
        };
        match solver.as_mut() {
            Some(SolverConfig::Exact { cap }) => {
                if let Some(c) = self.cap {
                    *cap = c;
                }
            }
            Some(SolverConfig::Annealing(s)) => {
                if let Some(v) = self.sweeps {
                    s.sweeps = v;
                }
                if let Some(v) = self.restarts {
                    s.restarts = v;
                }
            }
            Some(SolverConfig::Tempering(t)) => {
                if let Some(v) = self.sweeps {
                    t.sweeps = v;
                }
                if let Some(v) = self.rungs {
                    t.rungs = v;
                }
            }
            None => {}
        }
        solver
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Constants => "constants",
        Command::Verify { .. } => "verify",
        Command::FreeEnergy => "free-energy",
        Command::GroundState(_) => "ground-state",
        Command::Rem { .. } => "rem",
        Command::Figure { .. } => "figure",
        Command::Extrapolate { .. } => "extrapolate",
    }
}

fn resolve_config(cli: &Cli) -> skglass::Result<RunConfig> {
    let a = &cli.common;
    let mut cfg = match &a.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.command = Some(command_name(&cli.command).to_string());
    if a.n.is_some() {
        cfg.n = a.n.clone();
    }
    if a.beta.is_some() {
        cfg.beta = a.beta.clone();
    }
    if a.samples.is_some() {
        cfg.samples = a.samples;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if a.out.is_some() {
        cfg.out = a.out.clone();
    }
    cfg.json |= a.json;
    if a.no_reproducible {
        cfg.reproducible = Some(false);
    }
    match &cli.command {
        Command::GroundState(s) => cfg.solver = s.apply(cfg.solver.take()),
        Command::Extrapolate { omega: Some(w), .. } => cfg.omega = Some(*w),
        _ => {}
    }
    if let Some(path) = &a.save_config {
        std::fs::write(path, cfg.to_json()?).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
    }
    Ok(cfg)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::InvalidInstance(_)
        | Error::DimensionMismatch { .. }
        | Error::SiteOutOfRange { .. }
        | Error::Serde(_) => exit::CONFIG,
        Error::Capacity { .. } => exit::CAPACITY,
        Error::Integrity { .. } => exit::INTEGRITY,
        _ => exit::FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = resolve_config(&cli).and_then(|cfg| match &cli.command {
        Command::Constants => commands::constants(&cfg),
        Command::Verify { checks, disorder } => commands::verify(&cfg, checks, disorder.as_deref()),
        Command::FreeEnergy => commands::free_energy(&cfg),
        Command::GroundState(_) => commands::ground_state(&cfg),
        Command::Rem { compare } => commands::rem(&cfg, *compare),
        Command::Figure { output } => commands::figure(&cfg, output.as_deref()),
        Command::Extrapolate { points, .. } => commands::extrapolate(&cfg, points.as_deref()),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
