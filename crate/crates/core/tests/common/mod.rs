//! Brute-force reference computations, written independently of the library
//! kernels: plain double loops over all 2^n configurations.

#![allow(dead_code)]

use skglass::model::Disorder;

/// `±1` spins of configuration `code`; bit set means spin down.
pub fn spins(n: usize, code: u64) -> Vec<f64> {
    (0..n).map(|i| if code >> i & 1 == 1 { -1.0 } else { 1.0 }).collect()
}

pub fn naive_energy(j: &Disorder, s: &[f64]) -> f64 {
    let n = s.len();
    let mut sum = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            sum += j.coupling(a, b) * s[a] * s[b];
        }
    }
    -sum / (n as f64).sqrt()
}

/// Every configuration's energy, in code order.
pub fn all_energies(j: &Disorder) -> Vec<f64> {
    let n = j.n();
    (0..1u64 << n).map(|c| naive_energy(j, &spins(n, c))).collect()
}

#[derive(Clone, Copy, Debug)]
pub struct NaiveThermo {
    pub log_z: f64,
    pub mean_energy: f64,
    pub entropy: f64,
}

/// `log Z`, `⟨H⟩` and `−Σ p log p` from explicit Boltzmann weights.
pub fn naive_thermo(energies: &[f64], beta: f64) -> NaiveThermo {
    let shift = energies.iter().map(|e| -beta * e).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = energies.iter().map(|e| (-beta * e - shift).exp()).collect();
    let z: f64 = weights.iter().sum();
    let mut mean_energy = 0.0;
    let mut entropy = 0.0;
    for (w, e) in weights.iter().zip(energies) {
        let p = w / z;
        mean_energy += p * e;
        if p > 0.0 {
            entropy -= p * p.ln();
        }
    }
    NaiveThermo {
        log_z: shift + z.ln(),
        mean_energy,
        entropy,
    }
}

pub fn naive_min(energies: &[f64]) -> f64 {
    energies.iter().copied().fold(f64::INFINITY, f64::min)
}
