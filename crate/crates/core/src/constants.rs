//! Reference constants of the SK/REM comparison and the β* construction.

use std::f64::consts::LN_2;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// All constants are computed from `log 2`, never typed in truncated form,
/// except the two quoted comparison values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// `4 log 2`.
    pub beta_star: f64,
    pub beta_one: f64,
    /// High-temperature limit `log 2 + 1/4` of the free energy at β = 1.
    pub f_one_limit: f64,
    /// Claimed limit `β*²/4 + 1/4` at β*.
    pub f_star_claimed: f64,
    /// Annealed limit `log 2 + β*²/4`.
    pub annealed_at_star: f64,
    /// `−β*/4 − 1/(4β*)`.
    pub epsilon_bound: f64,
    /// REM critical inverse temperature `2√(log 2)`.
    pub beta_c_rem: f64,
    /// Spherical-model comparison value (quoted, not derived).
    pub spherical_bound: f64,
    /// Ground-state density from replica-based simulations (quoted).
    pub simulated_ground_state: f64,
}

impl Constants {
    pub fn get() -> Self {
        let beta_star = 4.0 * LN_2;
        Constants {
            beta_star,
            beta_one: 1.0,
            f_one_limit: LN_2 + 0.25,
            f_star_claimed: beta_star * beta_star / 4.0 + 0.25,
            annealed_at_star: LN_2 + beta_star * beta_star / 4.0,
            epsilon_bound: -beta_star / 4.0 - 1.0 / (4.0 * beta_star),
            beta_c_rem: 2.0 * LN_2.sqrt(),
            spherical_bound: 2.2058,
            simulated_ground_state: -0.7633,
        }
    }

    /// `|β* − β_c²|`.
    pub fn rem_square_gap(&self) -> f64 {
        (self.beta_star - self.beta_c_rem * self.beta_c_rem).abs()
    }

    /// `|(log 2 + β*²/4) − β*·(log 2 + 1/4)|`: the annealed curve meets the
    /// line through the origin and the β = 1 value at β*.
    pub fn intersection_gap(&self) -> f64 {
        (self.annealed_at_star - self.beta_star * self.f_one_limit).abs()
    }

    /// Named values with the rows printed by the `constants` command.
    pub fn table(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("beta_star", self.beta_star),
            ("beta_one", self.beta_one),
            ("f_one_limit", self.f_one_limit),
            ("f_star_claimed", self.f_star_claimed),
            ("annealed_at_star", self.annealed_at_star),
            ("epsilon_bound", self.epsilon_bound),
            ("beta_c_rem", self.beta_c_rem),
            ("spherical_bound", self.spherical_bound),
            ("simulated_ground_state", self.simulated_ground_state),
        ]
    }
}

/// Formats `x` with `digits` significant digits in fixed notation.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// `log 2 + β²/4 − β(log 2 + 1/4)`; its zeros are β = 1 and β = β*.
pub fn intersection_residual(beta: f64) -> f64 {
    LN_2 + beta * beta / 4.0 - beta * (LN_2 + 0.25)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaStarRoots {
    pub low: f64,
    pub high: f64,
}

/// Both intersections of the annealed limit curve with the line
/// `β ↦ β·(log 2 + 1/4)`, by bisection on brackets either side of the vertex.
pub fn solve_beta_star() -> BetaStarRoots {
    let vertex = 2.0 * (LN_2 + 0.25);
    BetaStarRoots {
        low: bisect(intersection_residual, 0.0, vertex),
        high: bisect(intersection_residual, vertex, 8.0),
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    debug_assert!(fa * f(b) < 0.0);
    loop {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            return if f(a).abs() <= f(b).abs() { a } else { b };
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FigureRow {
    pub beta: f64,
    /// `log 2 + β²/4`.
    pub annealed: f64,
    /// `β·(log 2 + 1/4)`.
    pub linear: f64,
}

pub fn emit_figure_data(betas: &[f64]) -> Vec<FigureRow> {
    betas
        .iter()
        .map(|&beta| FigureRow {
            beta,
            annealed: LN_2 + beta * beta / 4.0,
            linear: beta * (LN_2 + 0.25),
        })
        .collect()
}

/// `0, 0.05, ..., 4` with β = 1 and β = β* inserted exactly.
pub fn default_figure_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=80).map(|i| i as f64 * 0.05).collect();
    grid.push(Constants::get().beta_star);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Tab-separated table with marker comments for the two special β values.
pub fn figure_tsv(rows: &[FigureRow]) -> String {
    let c = Constants::get();
    let mut out = String::new();
    writeln!(out, "# marker\tbeta_one\t{}", c.beta_one).unwrap();
    writeln!(out, "# marker\tbeta_star\t{}", c.beta_star).unwrap();
    writeln!(out, "beta\tannealed\tlinear").unwrap();
    for r in rows {
        writeln!(out, "{}\t{}\t{}", r.beta, r.annealed, r.linear).unwrap();
    }
    out
}
