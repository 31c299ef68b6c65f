use serde::{Deserialize, Serialize};

use crate::constants::Constants;
use crate::error::{Error, Result};

/// Finite-size correction exponent used when none is given.
pub const DEFAULT_OMEGA: f64 = 2.0 / 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
}

/// Weighted least-squares fit of `mean(n) = intercept + slope · n^(−omega)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationFit {
    pub omega: f64,
    pub intercept: f64,
    pub slope: f64,
    pub intercept_stderr: f64,
    pub slope_stderr: f64,
    /// Unweighted L2 norm of the residuals.
    pub residual: f64,
    /// Weighted sum of squared residuals (unit weights when any stderr is 0).
    pub chi2: f64,
    pub weighted: bool,
    pub points: Vec<DensityPoint>,
}

impl ExtrapolationFit {
    pub fn predict(&self, n: usize) -> f64 {
        self.intercept + self.slope * (n as f64).powf(-self.omega)
    }
}

/// Fits the finite-size ansatz. Weights are `1/stderr²` when every point has
/// a positive stderr and 1 otherwise. Parameter errors come from the inverse
/// normal matrix, inflated by the reduced χ² when it exceeds 1 (always, for
/// unit weights).
pub fn extrapolate_density(points: &[DensityPoint], omega: f64) -> Result<ExtrapolationFit> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Config(format!("exponent must be positive, got {omega}")));
    }
    let mut distinct: Vec<usize> = points.iter().map(|p| p.n).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::Config(format!(
            "extrapolation needs at least 3 distinct sizes, got {}",
            distinct.len()
        )));
    }
    if distinct[0] == 0 || points.iter().any(|p| !p.mean.is_finite() || !(p.stderr >= 0.0)) {
        return Err(Error::Config("extrapolation points must have n >= 1 and finite values".into()));
    }

    let weighted = points.iter().all(|p| p.stderr > 0.0);
    let w: Vec<f64> = points
        .iter()
        .map(|p| if weighted { 1.0 / (p.stderr * p.stderr) } else { 1.0 })
        .collect();
    let x: Vec<f64> = points.iter().map(|p| (p.n as f64).powf(-omega)).collect();
    let y: Vec<f64> = points.iter().map(|p| p.mean).collect();

    let sw: f64 = w.iter().sum();
    let xm = w.iter().zip(&x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ym = w.iter().zip(&y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(&x).map(|(w, x)| w * (x - xm) * (x - xm)).sum();
    let sxy: f64 = w
        .iter()
        .zip(x.iter().zip(&y))
        .map(|(w, (x, y))| w * (x - xm) * (y - ym))
        .sum();
    if !(sxx > 0.0) {
        return Err(Error::Config("singular design in extrapolation".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;

    let residuals: Vec<f64> = x.iter().zip(&y).map(|(x, y)| y - (intercept + slope * x)).collect();
    let chi2: f64 = residuals.iter().zip(&w).map(|(r, w)| w * r * r).sum();
    let residual = residuals.iter().map(|r| r * r).sum::<f64>().sqrt();
    let dof = points.len().saturating_sub(2);
    let inflation = if dof == 0 {
        1.0
    } else if weighted {
        (chi2 / dof as f64).max(1.0)
    } else {
        chi2 / dof as f64
    };
    let intercept_stderr = ((1.0 / sw + xm * xm / sxx) * inflation).sqrt();
    let slope_stderr = (inflation / sxx).sqrt();

    Ok(ExtrapolationFit {
        omega,
        intercept,
        slope,
        intercept_stderr,
        slope_stderr,
        residual,
        chi2,
        weighted,
        points: points.to_vec(),
    })
}

/// Comparison of the extrapolated ground-state density with the
/// entropy-positivity lower bound `−β*/4 − 1/(4β*)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub intercept: f64,
    pub intercept_stderr: f64,
    pub bound: f64,
    /// Quoted replica-simulation value, printed for comparison only.
    pub simulated_value: f64,
    /// `intercept − bound`.
    pub margin: f64,
    /// `bound − 3·intercept_stderr`.
    pub threshold: f64,
    pub pass: bool,
}

pub fn check_paper_bound(fit: &ExtrapolationFit) -> BoundReport {
    let c = Constants::get();
    let threshold = c.epsilon_bound - 3.0 * fit.intercept_stderr;
    BoundReport {
        intercept: fit.intercept,
        intercept_stderr: fit.intercept_stderr,
        bound: c.epsilon_bound,
        simulated_value: c.simulated_ground_state,
        margin: fit.intercept - c.epsilon_bound,
        threshold,
        pass: fit.intercept >= threshold,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(e0: f64, a: f64, omega: f64, ns: &[usize], stderr: f64) -> Vec<DensityPoint> {
        ns.iter()
            .map(|&n| DensityPoint {
                n,
                mean: e0 + a * (n as f64).powf(-omega),
                stderr,
            })
            .collect()
    }

    #[test]
    fn recovers_exact_model() {
        let ns = [12, 16, 20, 24, 28, 40, 64, 100];
        for stderr in [0.0, 0.003] {
            let pts = synthetic(-0.7632, 0.7, DEFAULT_OMEGA, &ns, stderr);
            let fit = extrapolate_density(&pts, DEFAULT_OMEGA).unwrap();
            assert!((fit.intercept + 0.7632).abs() < 1e-9);
            assert!((fit.slope - 0.7).abs() < 1e-9);
            assert!(fit.residual < 1e-12);
            for p in &pts {
                assert!((fit.predict(p.n) - p.mean).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_data() {
        let pts = synthetic(-0.5, 0.0, DEFAULT_OMEGA, &[8, 16, 32, 64], 0.01);
        let fit = extrapolate_density(&pts, DEFAULT_OMEGA).unwrap();
        assert!((fit.intercept + 0.5).abs() < 1e-12);
        assert!(fit.slope.abs() < 1e-10);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        let same = synthetic(-0.7, 0.5, DEFAULT_OMEGA, &[16, 16, 16], 0.01);
        assert!(extrapolate_density(&same, DEFAULT_OMEGA).is_err());
        let two = synthetic(-0.7, 0.5, DEFAULT_OMEGA, &[16, 20, 20], 0.01);
        assert!(extrapolate_density(&two, DEFAULT_OMEGA).is_err());
        let ok = synthetic(-0.7, 0.5, DEFAULT_OMEGA, &[16, 20, 24], 0.01);
        assert!(extrapolate_density(&ok, -1.0).is_err());
    }

    #[test]
    fn stderr_matches_textbook_weighted_formula() {
        // Weighted fit with χ²/dof < 1: errors are the plain covariance.
        let mut pts = synthetic(-0.76, 0.7, DEFAULT_OMEGA, &[8, 16, 32, 64], 0.01);
        pts[1].mean += 0.001;
        let fit = extrapolate_density(&pts, DEFAULT_OMEGA).unwrap();
        assert!(fit.chi2 / 2.0 < 1.0);
        let x: Vec<f64> = pts.iter().map(|p| (p.n as f64).powf(-DEFAULT_OMEGA)).collect();
        let w = 1.0 / 1e-4;
        let (s, sx, sxx) = (
            w * 4.0,
            w * x.iter().sum::<f64>(),
            w * x.iter().map(|v| v * v).sum::<f64>(),
        );
        let det = s * sxx - sx * sx;
        assert!((fit.intercept_stderr - (sxx / det).sqrt()).abs() < 1e-12);
        assert!((fit.slope_stderr - (s / det).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn bound_checks() {
        let c = Constants::get();
        assert!((c.epsilon_bound + 0.7833163).abs() < 1e-6);
        let pass_fit = ExtrapolationFit {
            omega: DEFAULT_OMEGA,
            intercept: -0.7632,
            slope: 0.7,
            intercept_stderr: 0.0,
            slope_stderr: 0.0,
            residual: 0.0,
            chi2: 0.0,
            weighted: false,
            points: vec![],
        };
        let r = check_paper_bound(&pass_fit);
        assert!(r.pass);
        assert!((r.margin - 0.0201).abs() < 1e-4);
        assert_eq!(r.simulated_value, -0.7633);
        let fail_fit = ExtrapolationFit {
            intercept: -0.80,
            ..pass_fit
        };
        assert!(!check_paper_bound(&fail_fit).pass);
    }
}
