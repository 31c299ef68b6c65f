//! The SK instance: Gaussian couplings, spin configurations and the energy
//! kernels shared by every other module.
//!
//! Energy convention: `H(σ) = -(1/√n) Σ_{i<j} J_ij σ_i σ_j`, no diagonal and
//! no external field. Spins are stored as bits with `0 ↔ +1`, `1 ↔ -1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{digest_key, Stream};

/// Number of single-spin flips after which cached local fields and energy are
/// recomputed from scratch.
pub const REBUILD_INTERVAL: u64 = 1 << 20;

const DISORDER_TAG: &str = "skglass/disorder/v1";

/// Position of `J_ij` (`i < j`) in the row-major upper-triangular array.
///
/// Row `i` holds `J_{i,i+1} .. J_{i,n-1}`, so the offset is
/// `i*n - i*(i+1)/2 + (j - i - 1)`.
#[inline]
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// One realization of the coupling matrix.
#[derive(Clone, Debug)]
pub struct Disorder {
    n: usize,
    couplings: Vec<f64>,
    seed: u64,
    sample_index: u64,
    // Symmetric n×n copy with zero diagonal; rows feed the field updates.
    dense: Vec<f64>,
}

impl PartialEq for Disorder {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.seed == other.seed
            && self.sample_index == other.sample_index
            && self.couplings.len() == other.couplings.len()
            && self
                .couplings
                .iter()
                .zip(&other.couplings)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Draws the couplings of sample `sample_index` for site count `n`.
///
/// The ChaCha20 key is derived from `(seed, n)` and the stream id is the
/// sample index; couplings are consumed in row-major upper-triangular order.
pub fn sample_disorder(n: usize, seed: u64, sample_index: u64) -> Result<Disorder> {
    if n == 0 {
        return Err(Error::InvalidInstance("site count must be at least 1".into()));
    }
    let mut stream = Stream::new(DISORDER_TAG, &[seed, n as u64], sample_index);
    let couplings = (0..n * (n - 1) / 2).map(|_| stream.normal()).collect();
    Disorder::from_couplings(n, couplings, seed, sample_index)
}

impl Disorder {
    pub fn from_couplings(
        n: usize,
        couplings: Vec<f64>,
        seed: u64,
        sample_index: u64,
    ) -> Result<Disorder> {
        if n == 0 {
            return Err(Error::InvalidInstance("site count must be at least 1".into()));
        }
        let expected = n * (n - 1) / 2;
        if couplings.len() != expected {
            return Err(Error::InvalidInstance(format!(
                "expected {expected} couplings for n = {n}, got {}",
                couplings.len()
            )));
        }
        if let Some(pos) = couplings.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidInstance(format!(
                "coupling at position {pos} is not finite"
            )));
        }
        let mut dense = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let c = couplings[pair_index(n, i, j)];
                dense[i * n + j] = c;
                dense[j * n + i] = c;
            }
        }
        Ok(Disorder {
            n,
            couplings,
            seed,
            sample_index,
            dense,
        })
    }

    /// All couplings zero.
    pub fn zero(n: usize) -> Result<Disorder> {
        Disorder::from_couplings(n, vec![0.0; n * n.saturating_sub(1) / 2], 0, 0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sample_index(&self) -> u64 {
        self.sample_index
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// `J_ij` for any `i != j`; zero on the diagonal.
    #[inline]
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.dense[i * self.n + j]
    }

    /// Row `k` of the symmetric coupling matrix.
    #[inline]
    pub fn row(&self, k: usize) -> &[f64] {
        &self.dense[k * self.n..(k + 1) * self.n]
    }

    /// `1/√n`, the energy scale.
    #[inline]
    pub fn scale(&self) -> f64 {
        1.0 / (self.n as f64).sqrt()
    }

    /// Returns true when the couplings equal the ones regenerated from the
    /// stored seed and sample index, bit for bit.
    pub fn matches_seed(&self) -> bool {
        match sample_disorder(self.n, self.seed, self.sample_index) {
            Ok(fresh) => fresh == *self,
            Err(_) => false,
        }
    }

    pub fn to_record(&self, include_couplings: bool) -> DisorderRecord {
        DisorderRecord {
            n: self.n,
            seed: self.seed,
            sample_index: self.sample_index,
            couplings: include_couplings.then(|| self.couplings.clone()),
            checksum: include_couplings.then(|| coupling_checksum(&self.couplings)),
        }
    }

    pub fn from_record(record: &DisorderRecord) -> Result<Disorder> {
        match &record.couplings {
            None => sample_disorder(record.n, record.seed, record.sample_index),
            Some(c) => {
                if let Some(expected) = &record.checksum {
                    let actual = coupling_checksum(c);
                    if &actual != expected {
                        return Err(Error::Integrity {
                            what: "disorder record".into(),
                            detail: format!("coupling checksum {actual} does not match stored {expected}"),
                        });
                    }
                }
                Disorder::from_couplings(record.n, c.clone(), record.seed, record.sample_index)
                    .map_err(|e| Error::Integrity {
                        what: "disorder record".into(),
                        detail: e.to_string(),
                    })
            }
        }
    }
}

/// Persisted form of a [`Disorder`]. When `couplings` is absent the array is
/// regenerated from `(seed, sample_index, n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderRecord {
    pub n: usize,
    pub seed: u64,
    pub sample_index: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couplings: Option<Vec<f64>>,
    /// Hex SHA-256 prefix over the little-endian coupling bits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checksum: Option<String>,
}

pub fn coupling_checksum(couplings: &[f64]) -> String {
    let words: Vec<u64> = couplings.iter().map(|c| c.to_bits()).collect();
    digest_key("skglass/couplings", &words)[..16]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Clone, Debug)]
struct FieldCache {
    fields: Vec<f64>,
    energy: f64,
    flips_since_rebuild: u64,
}

/// A spin configuration, optionally carrying the local fields
/// `h_i = Σ_{j≠i} J_ij σ_j` and the energy they imply.
#[derive(Clone, Debug)]
pub struct SpinConfig {
    n: usize,
    bits: Vec<u64>,
    cache: Option<FieldCache>,
}

impl PartialEq for SpinConfig {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.bits == other.bits
    }
}

impl SpinConfig {
    /// All spins up.
    pub fn all_up(n: usize) -> Self {
        SpinConfig {
            n,
            bits: vec![0; n.div_ceil(64).max(1)],
            cache: None,
        }
    }

    pub fn from_words(n: usize, words: &[u64]) -> Self {
        let mut s = SpinConfig::all_up(n);
        for (dst, src) in s.bits.iter_mut().zip(words) {
            *dst = *src;
        }
        s.mask_tail();
        s
    }

    /// Configuration whose low `n` bits are taken from `code`.
    pub fn from_code(n: usize, code: u64) -> Self {
        SpinConfig::from_words(n, &[code])
    }

    pub fn from_spins(spins: &[i8]) -> Self {
        let mut s = SpinConfig::all_up(spins.len());
        for (i, &v) in spins.iter().enumerate() {
            if v < 0 {
                s.bits[i / 64] |= 1 << (i % 64);
            }
        }
        s
    }

    pub fn random(n: usize, stream: &mut Stream) -> Self {
        let mut s = SpinConfig::all_up(n);
        for w in s.bits.iter_mut() {
            *w = stream.next_u64();
        }
        s.mask_tail();
        s
    }

    fn mask_tail(&mut self) {
        let rem = self.n % 64;
        if rem != 0 {
            let last = self.bits.len() - 1;
            self.bits[last] &= (1u64 << rem) - 1;
        }
        if self.n == 0 {
            self.bits[0] = 0;
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn words(&self) -> &[u64] {
        &self.bits
    }

    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        (self.bits[i / 64] >> (i % 64)) & 1 == 1
    }

    /// σ_i as ±1.
    #[inline]
    pub fn spin(&self, i: usize) -> f64 {
        if self.bit(i) {
            -1.0
        } else {
            1.0
        }
    }

    pub fn spins(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.spin(i)).collect()
    }

    /// Global spin flip σ → −σ; drops any cache.
    pub fn negated(&self) -> SpinConfig {
        let mut out = SpinConfig::all_up(self.n);
        for (dst, src) in out.bits.iter_mut().zip(&self.bits) {
            *dst = !*src;
        }
        out.mask_tail();
        out
    }

    pub fn has_cache(&self) -> bool {
        self.cache.is_some()
    }

    pub fn local_fields(&self) -> Option<&[f64]> {
        self.cache.as_ref().map(|c| c.fields.as_slice())
    }

    /// Energy maintained by the cache, if one is attached.
    pub fn cached_energy(&self) -> Option<f64> {
        self.cache.as_ref().map(|c| c.energy)
    }

    /// Builds (or rebuilds) the local-field cache for `j`.
    pub fn attach_fields(&mut self, j: &Disorder) -> Result<()> {
        self.check_dims(j)?;
        let spins = self.spins();
        let fields: Vec<f64> = (0..self.n)
            .map(|i| j.row(i).iter().zip(&spins).map(|(c, s)| c * s).sum())
            .collect();
        let energy = energy_from_fields(&spins, &fields, j.scale());
        self.cache = Some(FieldCache {
            fields,
            energy,
            flips_since_rebuild: 0,
        });
        Ok(())
    }

    pub fn with_fields(mut self, j: &Disorder) -> Result<Self> {
        self.attach_fields(j)?;
        Ok(self)
    }

    fn check_dims(&self, j: &Disorder) -> Result<()> {
        if self.n != j.n() {
            return Err(Error::DimensionMismatch {
                config: self.n,
                disorder: j.n(),
            });
        }
        Ok(())
    }

    fn check_site(&self, k: usize) -> Result<()> {
        if k >= self.n {
            return Err(Error::SiteOutOfRange { site: k, n: self.n });
        }
        Ok(())
    }

    /// `H(σ with spin k flipped) − H(σ) = (2/√n) σ_k h_k`.
    ///
    /// Uses the cached field when present and the direct sum otherwise.
    pub fn flip_delta(&self, j: &Disorder, k: usize) -> Result<f64> {
        self.check_dims(j)?;
        self.check_site(k)?;
        let h = match &self.cache {
            Some(c) => c.fields[k],
            None => j
                .row(k)
                .iter()
                .enumerate()
                .map(|(i, c)| c * self.spin(i))
                .sum(),
        };
        Ok(2.0 * j.scale() * self.spin(k) * h)
    }

    /// Toggles spin `k`, updating every cached field in O(n).
    pub fn apply_flip(&mut self, j: &Disorder, k: usize) -> Result<()> {
        self.check_dims(j)?;
        self.check_site(k)?;
        let old = self.spin(k);
        self.bits[k / 64] ^= 1 << (k % 64);
        let needs_rebuild = match self.cache.as_mut() {
            None => false,
            Some(c) => {
                c.energy += 2.0 * j.scale() * old * c.fields[k];
                let step = -2.0 * old;
                for (h, jk) in c.fields.iter_mut().zip(j.row(k)) {
                    *h += step * jk;
                }
                c.flips_since_rebuild += 1;
                c.flips_since_rebuild >= REBUILD_INTERVAL
            }
        };
        if needs_rebuild {
            self.attach_fields(j)?;
        }
        Ok(())
    }

    /// Consuming variant of [`SpinConfig::apply_flip`].
    pub fn flipped(mut self, j: &Disorder, k: usize) -> Result<Self> {
        self.apply_flip(j, k)?;
        Ok(self)
    }
}

#[inline]
pub(crate) fn energy_from_fields(spins: &[f64], fields: &[f64], scale: f64) -> f64 {
    let s: f64 = spins.iter().zip(fields).map(|(s, h)| s * h).sum();
    -0.5 * scale * s
}

/// `H(σ) = -(1/√n) Σ_{i<j} J_ij σ_i σ_j`, summed in row-major pair order.
pub fn hamiltonian(sigma: &SpinConfig, j: &Disorder) -> Result<f64> {
    sigma.check_dims(j)?;
    let n = j.n();
    let spins = sigma.spins();
    let c = j.couplings();
    let mut sum = 0.0;
    let mut p = 0;
    for a in 0..n {
        for b in a + 1..n {
            sum += c[p] * spins[a] * spins[b];
            p += 1;
        }
    }
    Ok(-sum * j.scale())
}
