use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use skglass::constants::{
    default_figure_grid, emit_figure_data, figure_tsv, format_significant, solve_beta_star, Constants,
};
use skglass::enumerate::{check_cap, DEFAULT_ENUMERATION_CAP};
use skglass::experiments::{free_energy_run, ground_state_run, rem_run};
use skglass::ground::{check_paper_bound, extrapolate_density, DensityPoint, SolverConfig, DEFAULT_OMEGA};
use skglass::harness::{EnsembleStats, RunOptions};
use skglass::model::{sample_disorder, Disorder, DisorderRecord};
use skglass::rem::{compare_sk_rem, DEFAULT_REM_CAP};
use skglass::thermo::{
    annealed_free_energy, enumerate, functional_equation_residual, gibbs_entropy_direct,
    quenched_free_energy, verify_annealed_moment, BetaGrid,
};
use skglass::{Error, Result};

use crate::config::{BetaSpec, NamedBeta, RunConfig};
use crate::exit;
use crate::Check;

fn sig(x: f64) -> String {
    format_significant(x, 7)
}

fn options(cfg: &RunConfig) -> RunOptions {
    RunOptions {
        reproducible: cfg.is_reproducible(),
        ..RunOptions::default()
    }
}

fn grid(values: Vec<f64>) -> Result<BetaGrid> {
    BetaGrid::new(values)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::Io {
            path: parent.to_path_buf(),
            source: e,
        })?;
    }
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

pub fn constants(cfg: &RunConfig) -> Result<u8> {
    let c = Constants::get();
    let roots = solve_beta_star();
    let ln2 = std::f64::consts::LN_2;
    let identities = [
        ("beta_star = 4 log 2", (c.beta_star - 4.0 * ln2).abs()),
        ("beta_c^2 = beta_star", c.rem_square_gap()),
        ("log 2 + beta_star^2/4 = beta_star (log 2 + 1/4)", c.intersection_gap()),
        (
            "epsilon_bound = -log 2 - 1/(16 log 2)",
            (c.epsilon_bound + ln2 + 1.0 / (16.0 * ln2)).abs(),
        ),
        ("root of the intersection above the vertex = beta_star", (roots.high - c.beta_star).abs()),
    ];
    if cfg.json {
        let ids: Vec<_> = identities.iter().map(|(k, v)| json!({ "identity": k, "gap": v })).collect();
        print_json(&json!({ "constants": c, "roots": roots, "identities": ids }))?;
        return Ok(exit::OK);
    }
    for (name, value) in c.table() {
        println!("{name:<24} {}", sig(value));
    }
    println!();
    println!("identities (absolute gap):");
    for (name, gap) in identities {
        println!("  {name:<52} {gap:.1e}");
    }
    println!("  intersections of the annealed curve and the line: {} and {}", sig(roots.low), sig(roots.high));
    Ok(exit::OK)
}

struct CheckOutcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn load_disorder(path: &Path) -> Result<Disorder> {
    let integrity = |detail: String| Error::Integrity {
        what: path.display().to_string(),
        detail,
    };
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let record: DisorderRecord = serde_json::from_str(&text).map_err(|e| integrity(e.to_string()))?;
    Disorder::from_record(&record).map_err(|e| match e {
        Error::Integrity { detail, .. } => integrity(detail),
        other => other,
    })
}

pub fn verify(cfg: &RunConfig, checks: &[Check], disorder: Option<&Path>) -> Result<u8> {
    let c = Constants::get();
    let all = [Check::Eq2, Check::BetaStar, Check::Eq3, Check::Thermo, Check::Jensen, Check::Annealed];
    let selected: &[Check] = if checks.is_empty() { &all } else { checks };
    let sizes = cfg.sizes(&[8, 12, 16]);
    let instances: Vec<Disorder> = match disorder {
        Some(path) => vec![load_disorder(path)?],
        None => sizes
            .iter()
            .map(|&n| {
                check_cap(n, DEFAULT_ENUMERATION_CAP)?;
                sample_disorder(n, cfg.seed, 0)
            })
            .collect::<Result<_>>()?,
    };
    let betas = cfg.betas(&[BetaSpec::Named(NamedBeta::BetaOne), BetaSpec::Named(NamedBeta::BetaStar)]);

    let mut outcomes = Vec::new();
    for check in selected {
        let outcome = match check {
            Check::Eq2 => {
                let gap = c.intersection_gap();
                CheckOutcome {
                    name: "eq2",
                    pass: gap < 1e-12,
                    detail: format!("|beta*(log 2 + 1/4) - (log 2 + beta*^2/4)| = {gap:.1e} (< 1e-12)"),
                }
            }
            Check::BetaStar => {
                let r = solve_beta_star();
                let gap = (r.high - c.beta_star).abs();
                CheckOutcome {
                    name: "beta-star",
                    pass: gap < 1e-9 && (r.low - 1.0).abs() < 1e-9,
                    detail: format!("roots {} and {}, |root - 4 log 2| = {gap:.1e} (< 1e-9)", sig(r.low), sig(r.high)),
                }
            }
            Check::Eq3 => {
                let mut worst = 0.0f64;
                for j in &instances {
                    worst = worst.max(functional_equation_residual(j, c.beta_star)?);
                }
                CheckOutcome {
                    name: "eq3",
                    pass: worst < 1e-12,
                    detail: format!("functional equation residual {worst:.2e} over {} instance(s) (< 1e-12)", instances.len()),
                }
            }
            Check::Thermo => {
                let mut worst = 0.0f64;
                for j in &instances {
                    let e = enumerate(j, &betas, DEFAULT_ENUMERATION_CAP)?;
                    for t in &e.thermo {
                        let direct = gibbs_entropy_direct(j, t.beta, t.log_z, DEFAULT_ENUMERATION_CAP)?;
                        worst = worst.max((t.log_z - direct + t.beta * t.mean_energy).abs() / t.log_z.abs());
                    }
                }
                CheckOutcome {
                    name: "thermo",
                    pass: worst < 1e-9,
                    detail: format!("|log Z - S + beta<H>|/|log Z| = {worst:.2e} (< 1e-9)"),
                }
            }
            Check::Jensen => {
                let samples = cfg.samples_or(200);
                let mut pass = true;
                let mut parts = Vec::new();
                for &n in &sizes {
                    check_cap(n, DEFAULT_ENUMERATION_CAP)?;
                    let f = quenched_free_energy(n, 1.0, samples, cfg.seed)?;
                    let bound = annealed_free_energy(n, 1.0);
                    pass &= f.mean <= bound + 3.0 * f.stderr;
                    parts.push(format!("n={n}: {:.6} <= {:.6}", f.mean, bound));
                }
                CheckOutcome {
                    name: "jensen",
                    pass,
                    detail: format!("quenched f_n(1) over {samples} samples: {}", parts.join(", ")),
                }
            }
            Check::Annealed => {
                let samples = cfg.samples_or(100_000);
                let mut pass = true;
                let mut parts = Vec::new();
                for (n, beta) in [(2, 1.0), (8, 0.5)] {
                    let r = verify_annealed_moment(n, beta, samples, cfg.seed)?;
                    pass &= r.within(3.0);
                    parts.push(format!("n={n} beta={beta}: z = {:+.2}", r.z_score));
                }
                CheckOutcome {
                    name: "annealed",
                    pass,
                    detail: format!("E Z vs 2^n e^(beta^2(n-1)/4), {samples} samples: {}", parts.join(", ")),
                }
            }
        };
        println!("{} {}: {}", if outcome.pass { "PASS" } else { "FAIL" }, outcome.name, outcome.detail);
        outcomes.push(outcome);
    }
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.pass).map(|o| o.name).collect();
    if failed.is_empty() {
        println!("all {} checks passed", outcomes.len());
        Ok(exit::OK)
    } else {
        eprintln!("check failed: {}", failed.join(", "));
        Ok(exit::CHECK)
    }
}

#[derive(Serialize)]
struct FreeEnergyRow {
    n: usize,
    beta: f64,
    free_energy: EnsembleStats,
    entropy: EnsembleStats,
    annealed: f64,
    /// Asserted: quenched ≤ annealed + 3 stderr.
    jensen_holds: bool,
    /// Reported only: distance from the claimed limit at β*.
    distance_from_claimed: Option<f64>,
}

pub fn free_energy(cfg: &RunConfig) -> Result<u8> {
    let c = Constants::get();
    let betas = grid(cfg.betas(&[BetaSpec::Named(NamedBeta::BetaOne), BetaSpec::Named(NamedBeta::BetaStar)]))?;
    let samples = cfg.samples_or(100);
    let out = cfg.out_dir();
    let mut rows = Vec::new();
    for n in cfg.sizes(&[12]) {
        check_cap(n, DEFAULT_ENUMERATION_CAP)?;
        let run = free_energy_run(n, &betas, samples, cfg.seed, &out, &options(cfg))?;
        for &beta in betas.values() {
            let pick = |name: &str| {
                run.stats
                    .iter()
                    .find(|s| s.observable == name && s.beta == Some(beta))
                    .cloned()
                    .expect("every beta is observed")
            };
            let f = pick("free_energy");
            let annealed = annealed_free_energy(n, beta);
            rows.push(FreeEnergyRow {
                n,
                beta,
                jensen_holds: f.mean <= annealed + 3.0 * f.stderr,
                distance_from_claimed: (beta == c.beta_star).then_some(f.mean - c.f_star_claimed),
                free_energy: f,
                entropy: pick("entropy_density"),
                annealed,
            });
        }
    }
    let violated = rows.iter().any(|r| !r.jensen_holds);
    if cfg.json {
        print_json(&rows)?;
    } else {
        println!("records under {}", out.display());
        println!(
            "{:>4} {:>10} {:>22} {:>12} {:>22}  {:<22} reported",
            "n", "beta", "f_n (quenched)", "annealed", "s_n", "asserted"
        );
        for r in &rows {
            let jensen = if r.jensen_holds { "f <= annealed: ok" } else { "f <= annealed: FAILED" };
            let reported = match r.distance_from_claimed {
                Some(d) => format!("f - {} (claimed limit) = {:+.6}", sig(c.f_star_claimed), d),
                None if r.beta == 1.0 => format!("f - {} (high-T limit) = {:+.6}", sig(c.f_one_limit), r.free_energy.mean - c.f_one_limit),
                None => String::new(),
            };
            println!(
                "{:>4} {:>10} {:>22} {:>12.6} {:>22}  {:<22} {}",
                r.n,
                sig(r.beta),
                format!("{:.6} ± {:.6}", r.free_energy.mean, r.free_energy.stderr),
                r.annealed,
                format!("{:.6} ± {:.6}", r.entropy.mean, r.entropy.stderr),
                jensen,
                reported
            );
        }
    }
    Ok(if violated { exit::CHECK } else { exit::OK })
}

pub fn ground_state(cfg: &RunConfig) -> Result<u8> {
    let c = Constants::get();
    let solver = cfg.solver.clone().unwrap_or_default();
    solver.validate()?;
    let samples = cfg.samples_or(50);
    let out = cfg.out_dir();
    let mut rows = Vec::new();
    for n in cfg.sizes(&[16]) {
        if let SolverConfig::Exact { cap } = solver {
            check_cap(n, cap)?;
        }
        let run = ground_state_run(n, samples, &solver, cfg.seed, &out, &options(cfg))?;
        rows.push(run.stats[0].clone());
    }
    if cfg.json {
        print_json(&json!({ "solver": solver, "densities": rows }))?;
    } else {
        println!("records under {}", out.display());
        println!("{:>5} {:>10} {:>24} {:>10} {:>10}", "n", "method", "density", "min", "max");
        let method = match solver {
            SolverConfig::Exact { .. } => "exact",
            SolverConfig::Annealing(_) => "annealing",
            SolverConfig::Tempering(_) => "tempering",
        };
        for s in &rows {
            println!(
                "{:>5} {:>10} {:>24} {:>10.6} {:>10.6}",
                s.n,
                method,
                format!("{:.6} ± {:.6}", s.mean, s.stderr),
                s.min,
                s.max
            );
        }
        println!(
            "reported: entropy-positivity bound {}, quoted simulation value {}",
            sig(c.epsilon_bound),
            c.simulated_ground_state
        );
    }
    Ok(exit::OK)
}

pub fn rem(cfg: &RunConfig, compare: bool) -> Result<u8> {
    let c = Constants::get();
    let betas = grid(cfg.betas(&[
        BetaSpec::Named(NamedBeta::BetaOne),
        BetaSpec::Named(NamedBeta::BetaC),
        BetaSpec::Named(NamedBeta::BetaStar),
    ]))?;
    let samples = cfg.samples_or(100);
    let out = cfg.out_dir();
    let mut code = exit::OK;
    let mut report = Vec::new();
    for n in cfg.sizes(&[16]) {
        if n > DEFAULT_REM_CAP {
            return Err(Error::Capacity { n, cap: DEFAULT_REM_CAP });
        }
        let run = rem_run(n, &betas, samples, cfg.seed, &out, &options(cfg))?;
        let comparison = if compare {
            check_cap(n, DEFAULT_ENUMERATION_CAP)?;
            let cmp = compare_sk_rem(n, samples, cfg.seed)?;
            if cmp.asserted && !cmp.sk_above_rem_at_beta_c {
                code = exit::CHECK;
            }
            Some(cmp)
        } else {
            None
        };
        report.push((n, run.stats, comparison));
    }
    if cfg.json {
        let v: Vec<_> = report
            .iter()
            .map(|(n, stats, cmp)| json!({ "n": n, "rem": stats, "comparison": cmp }))
            .collect();
        print_json(&v)?;
        return Ok(code);
    }
    println!("records under {}", out.display());
    println!("|beta_c^2 - beta*| = {:.1e}", c.rem_square_gap());
    for (n, stats, cmp) in &report {
        println!("{:>4} {:>10} {:>22} {:>22} {:>12}", "n", "beta", "rem f_n", "rem s_n", "annealed s");
        for &beta in betas.values() {
            let get = |name: &str| stats.iter().find(|s| s.observable == name && s.beta == Some(beta));
            let (Some(f), Some(s)) = (get("rem_free_energy"), get("rem_entropy_density")) else {
                continue;
            };
            println!(
                "{:>4} {:>10} {:>22} {:>22} {:>12.6}",
                n,
                sig(beta),
                format!("{:.6} ± {:.6}", f.mean, f.stderr),
                format!("{:.6} ± {:.6}", s.mean, s.stderr),
                std::f64::consts::LN_2 - beta * beta / 4.0
            );
        }
        if let Some(cmp) = cmp {
            println!("  SK vs REM entropy per site, n = {n}, {} samples:", cmp.samples);
            for row in &cmp.rows {
                println!(
                    "    {:<10} beta={:<10} sk {:.6} ± {:.6}   rem {:.6} ± {:.6}",
                    row.label,
                    sig(row.beta),
                    row.sk.mean,
                    row.sk.stderr,
                    row.rem.mean,
                    row.rem.stderr
                );
            }
            let label = if cmp.asserted { "asserted" } else { "reported (n < 16)" };
            println!(
                "  {label}: SK entropy above REM at beta_c: {}",
                if cmp.sk_above_rem_at_beta_c { "yes" } else { "no" }
            );
        }
    }
    Ok(code)
}

pub fn figure(cfg: &RunConfig, output: Option<&Path>) -> Result<u8> {
    let betas = match &cfg.beta {
        Some(_) => cfg.betas(&[]),
        None => default_figure_grid(),
    };
    let rows = emit_figure_data(&betas);
    let path = output.map(Path::to_path_buf).unwrap_or_else(|| cfg.out_dir().join("figure.tsv"));
    write_file(&path, &figure_tsv(&rows))?;
    println!("wrote {} rows to {}", rows.len(), path.display());
    let c = Constants::get();
    for r in rows.iter().filter(|r| r.beta == 1.0 || r.beta == c.beta_star) {
        println!("  beta={:<9} annealed={:<9} linear={}", sig(r.beta), sig(r.annealed), sig(r.linear));
    }
    Ok(exit::OK)
}

/// Ground-state densities from the summaries of completed runs, one point
/// per size; exact results win over heuristic ones.
fn points_from_runs(out: &Path) -> Result<Vec<DensityPoint>> {
    let entries = fs::read_dir(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|s| s.to_str())
                .is_some_and(|s| s.starts_with("ground-"))
        })
        .collect();
    dirs.sort();
    let mut points: Vec<(u8, DensityPoint)> = Vec::new();
    for dir in dirs {
        let path = dir.join("summary.json");
        let Ok(text) = fs::read_to_string(&path) else {
            continue;
        };
        let summary: serde_json::Value = serde_json::from_str(&text)?;
        let rank = match summary["manifest"]["parameters"]["solver"]["method"].as_str() {
            Some("exact") => 0,
            Some("tempering") => 1,
            _ => 2,
        };
        let Some(stats) = summary["stats"].as_array() else {
            continue;
        };
        for s in stats {
            let s: EnsembleStats = serde_json::from_value(s.clone())?;
            if s.observable != "ground_density" {
                continue;
            }
            let p = DensityPoint {
                n: s.n,
                mean: s.mean,
                stderr: s.stderr,
            };
            match points.iter_mut().find(|(_, q)| q.n == p.n) {
                Some(slot) if rank < slot.0 => *slot = (rank, p),
                Some(_) => {}
                None => points.push((rank, p)),
            }
        }
    }
    let mut points: Vec<DensityPoint> = points.into_iter().map(|(_, p)| p).collect();
    points.sort_by_key(|p| p.n);
    Ok(points)
}

pub fn extrapolate(cfg: &RunConfig, points_file: Option<&Path>) -> Result<u8> {
    let out = cfg.out_dir();
    let points: Vec<DensityPoint> = match points_file {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.to_path_buf(),
                source: e,
            })?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => points_from_runs(&out)?,
    };
    let fit = extrapolate_density(&points, cfg.omega.unwrap_or(DEFAULT_OMEGA))?;
    let bound = check_paper_bound(&fit);
    let path = out.join("extrapolation.json");
    write_file(&path, &serde_json::to_string_pretty(&json!({ "fit": fit, "bound": bound }))?)?;
    if cfg.json {
        print_json(&json!({ "fit": fit, "bound": bound }))?;
    } else {
        for p in &fit.points {
            println!("  n={:<4} density {:.6} ± {:.6}   fit {:.6}", p.n, p.mean, p.stderr, fit.predict(p.n));
        }
        println!(
            "intercept {:.6} ± {:.6}, slope {:.6} ± {:.6}, omega {:.6}, chi2 {:.3} ({})",
            fit.intercept,
            fit.intercept_stderr,
            fit.slope,
            fit.slope_stderr,
            fit.omega,
            fit.chi2,
            if fit.weighted { "weighted" } else { "unweighted" }
        );
        println!(
            "asserted: intercept >= bound {} - 3σ = {:.6}: {} (margin {:+.6})",
            sig(bound.bound),
            bound.threshold,
            if bound.pass { "PASS" } else { "FAIL" },
            bound.margin
        );
        println!(
            "reported: quoted simulation value {} (intercept - value = {:+.6})",
            bound.simulated_value,
            fit.intercept - bound.simulated_value
        );
        println!("wrote {}", path.display());
    }
    Ok(if bound.pass { exit::OK } else { exit::CHECK })
}
