//! Gray-code enumeration of the configuration space.
//!
//! `H(σ) = H(−σ)`, so only the half with the last spin pinned up is visited;
//! callers account for the mirror image. Consecutive codes differ in one bit,
//! so each step costs one field update of length `n − 1`.

use crate::error::{Error, Result};
use crate::model::{Disorder, REBUILD_INTERVAL};

/// Default upper bound on `n` for exact enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 28;

pub fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::Capacity { n, cap });
    }
    // Codes are u64 and the half-space has 2^(n-1) elements.
    if n > 64 {
        return Err(Error::Capacity { n, cap: 64 });
    }
    Ok(())
}

/// Calls `visit(code, energy)` for every configuration with spin `n − 1` up,
/// in reflected Gray-code order starting from all-up. Bit `i` of `code` is
/// set when `σ_i = −1`.
///
/// The energy is carried incrementally and recomputed from scratch every
/// [`REBUILD_INTERVAL`] steps.
pub fn gray_sweep<F>(j: &Disorder, cap: usize, mut visit: F) -> Result<()>
where
    F: FnMut(u64, f64),
{
    let n = j.n();
    check_cap(n, cap)?;
    if n == 1 {
        visit(0, 0.0);
        return Ok(());
    }
    let free = n - 1;
    let scale = j.scale();
    // Rows restricted to the free sites, contiguous per site.
    let mut rows = vec![0.0; free * free];
    for k in 0..free {
        rows[k * free..(k + 1) * free].copy_from_slice(&j.row(k)[..free]);
    }

    let mut spins = vec![1.0f64; free];
    let mut fields = vec![0.0f64; free];
    let mut energy = 0.0;
    let mut code = 0u64;
    rebuild(j, code, &mut spins, &mut fields, &mut energy);
    visit(code, energy);

    let total = 1u64 << free;
    for t in 1..total {
        let k = t.trailing_zeros() as usize;
        let s = spins[k];
        energy += 2.0 * scale * s * fields[k];
        spins[k] = -s;
        code ^= 1 << k;
        let step = -2.0 * s;
        let row = &rows[k * free..(k + 1) * free];
        for (h, c) in fields.iter_mut().zip(row) {
            *h += step * c;
        }
        if t % REBUILD_INTERVAL == 0 {
            rebuild(j, code, &mut spins, &mut fields, &mut energy);
            if !energy.is_finite() {
                return Err(Error::Consistency(format!(
                    "non-finite energy at code {code:#x}"
                )));
            }
        }
        visit(code, energy);
    }
    if !energy.is_finite() {
        return Err(Error::Consistency("non-finite energy at end of sweep".into()));
    }
    Ok(())
}

fn rebuild(j: &Disorder, code: u64, spins: &mut [f64], fields: &mut [f64], energy: &mut f64) {
    let n = j.n();
    let free = spins.len();
    let sigma = |i: usize| -> f64 {
        if i < free && (code >> i) & 1 == 1 {
            -1.0
        } else {
            1.0
        }
    };
    for (i, s) in spins.iter_mut().enumerate() {
        *s = sigma(i);
    }
    let mut total = 0.0;
    for i in 0..n {
        let h: f64 = j.row(i).iter().enumerate().map(|(k, c)| c * sigma(k)).sum();
        if i < free {
            fields[i] = h;
        }
        total += sigma(i) * h;
    }
    *energy = -0.5 * j.scale() * total;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{hamiltonian, sample_disorder, SpinConfig};

    #[test]
    fn visits_every_half_configuration_once() {
        let d = sample_disorder(9, 3, 0).unwrap();
        let mut seen = vec![false; 1 << 8];
        let mut count = 0;
        gray_sweep(&d, 28, |code, e| {
            assert!(!seen[code as usize]);
            seen[code as usize] = true;
            count += 1;
            let direct = hamiltonian(&SpinConfig::from_code(9, code), &d).unwrap();
            assert!((e - direct).abs() < 1e-10, "{e} vs {direct}");
        })
        .unwrap();
        assert_eq!(count, 256);
    }

    #[test]
    fn single_site() {
        let d = sample_disorder(1, 0, 0).unwrap();
        let mut visits = vec![];
        gray_sweep(&d, 28, |c, e| visits.push((c, e))).unwrap();
        assert_eq!(visits, vec![(0, 0.0)]);
    }

    #[test]
    fn cap_is_enforced() {
        let d = sample_disorder(10, 0, 0).unwrap();
        match gray_sweep(&d, 8, |_, _| {}) {
            Err(Error::Capacity { n: 10, cap: 8 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
