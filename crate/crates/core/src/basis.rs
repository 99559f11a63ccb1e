//! Bit-encoded product bases along z and x.
//!
//! Bit `n` of a configuration set means eigenvalue +1 of the Pauli operator
//! along the tagged axis at site `n`; chain site 1 is bit 0.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_SITES: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpinConfiguration {
    bits: u32,
    basis: Basis,
    sites: usize,
}

impl SpinConfiguration {
    pub fn new(bits: u32, basis: Basis, sites: usize) -> Result<Self> {
        check_sites(sites)?;
        if bits & !full_mask(sites) != 0 {
            return Err(Error::InvalidParams(format!(
                "configuration {bits:#b} has bits beyond site {sites}"
            )));
        }
        Ok(Self { bits, basis, sites })
    }

    /// All spins up along `basis`.
    pub fn all_up(basis: Basis, sites: usize) -> Result<Self> {
        check_sites(sites)?;
        Ok(Self {
            bits: full_mask(sites),
            basis,
            sites,
        })
    }

    /// Parse a pattern like `"++-++"` or `"11011"`, site 1 first.
    pub fn from_pattern(pattern: &str, basis: Basis) -> Result<Self> {
        let sites = pattern.chars().count();
        check_sites(sites)?;
        let mut bits = 0u32;
        for (n, c) in pattern.chars().enumerate() {
            match c {
                '+' | '1' | 'u' | 'U' => bits |= 1 << n,
                '-' | '0' | 'd' | 'D' => {}
                other => {
                    return Err(Error::InvalidParams(format!(
                        "unexpected character {other:?} in spin pattern"
                    )))
                }
            }
        }
        Ok(Self { bits, basis, sites })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn index(&self) -> usize {
        self.bits as usize
    }

    /// Spin along the tagged axis at `site` as +1 / -1.
    pub fn spin(&self, site: usize) -> i32 {
        if self.bits >> site & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn flip_all(&self) -> Self {
        Self {
            bits: !self.bits & full_mask(self.sites),
            ..*self
        }
    }

    pub fn flip(&self, site: usize) -> Self {
        Self {
            bits: self.bits ^ (1 << site),
            ..*self
        }
    }
}

/// A band label `b` with `0 <= b <= L/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BandIndex(pub usize);

impl BandIndex {
    pub fn new(b: usize, sites: usize) -> Result<Self> {
        let max = sites / 2;
        if b > max {
            return Err(Error::BandOutOfRange { b, sites, max });
        }
        Ok(Self(b))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// Complex amplitudes over the 2^L product states of one basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    basis: Basis,
    sites: usize,
}

impl StateVector {
    pub fn zeros(basis: Basis, sites: usize) -> Result<Self> {
        check_sites(sites)?;
        Ok(Self {
            amplitudes: vec![Complex64::new(0.0, 0.0); 1 << sites],
            basis,
            sites,
        })
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>, basis: Basis) -> Result<Self> {
        let dim = amplitudes.len();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::InvalidParams(format!(
                "amplitude length {dim} is not 2^L with L >= 1"
            )));
        }
        let sites = dim.trailing_zeros() as usize;
        check_sites(sites)?;
        Ok(Self {
            amplitudes,
            basis,
            sites,
        })
    }

    pub fn product(config: SpinConfiguration) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << config.sites];
        amplitudes[config.index()] = Complex64::new(1.0, 0.0);
        Self {
            amplitudes,
            basis: config.basis,
            sites: config.sites,
        }
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            self.amplitudes.iter_mut().for_each(|a| *a *= inv);
        }
    }

    /// `<self|other>`, conjugating `self`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.check_compatible(other)?;
        Ok(inner(&self.amplitudes, &other.amplitudes))
    }

    pub fn check_compatible(&self, other: &StateVector) -> Result<()> {
        if self.sites != other.sites {
            return Err(Error::SiteMismatch {
                left: self.sites,
                right: other.sites,
            });
        }
        if self.basis != other.basis {
            return Err(Error::BasisMismatch {
                expected: self.basis,
                found: other.basis,
            });
        }
        Ok(())
    }
}

pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn full_mask(sites: usize) -> u32 {
    if sites >= 32 {
        u32::MAX
    } else {
        (1u32 << sites) - 1
    }
}

pub(crate) fn check_sites(sites: usize) -> Result<()> {
    if sites == 0 || sites > MAX_SITES {
        return Err(Error::SiteCount(sites));
    }
    Ok(())
}

/// Number of down spins along x.
pub fn x_excitation_count(config: &SpinConfiguration) -> Result<usize> {
    if config.basis != Basis::X {
        return Err(Error::BasisMismatch {
            expected: Basis::X,
            found: config.basis,
        });
    }
    Ok(down_count(config.bits, config.sites))
}

#[inline]
pub(crate) fn down_count(bits: u32, sites: usize) -> usize {
    sites - bits.count_ones() as usize
}

#[inline]
pub(crate) fn band_label(bits: u32, sites: usize) -> usize {
    let k = down_count(bits, sites);
    k.min(sites - k)
}

/// Band of an x configuration: `min(k, L - k)` with `k` flipped spins.
pub fn band_of(config: &SpinConfiguration) -> Result<BandIndex> {
    let k = x_excitation_count(config)?;
    Ok(BandIndex(k.min(config.sites - k)))
}

/// Express `psi` in `target`. The per-site Hadamard is applied as `L`
/// butterfly passes; the map is its own inverse.
pub fn basis_rotate(psi: &StateVector, target: Basis) -> StateVector {
    let mut out = psi.clone();
    if psi.basis != target {
        hadamard_in_place(&mut out.amplitudes);
        out.basis = target;
    }
    out
}

pub(crate) fn hadamard_in_place(amps: &mut [Complex64]) {
    let dim = amps.len();
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut half = 1;
    while half < dim {
        for block in (0..dim).step_by(2 * half) {
            for i in block..block + half {
                let a = amps[i];
                let b = amps[i + half];
                // bit set = +1 eigenstate: |+> = (|up> + |dn>)/sqrt2, |-> = (|up> - |dn>)/sqrt2
                amps[i] = (b - a) * scale;
                amps[i + half] = (b + a) * scale;
            }
        }
        half <<= 1;
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Every x configuration whose excitation count is `b` or `L - b`.
pub fn enumerate_band(sites: usize, b: usize) -> Result<Vec<SpinConfiguration>> {
    check_sites(sites)?;
    BandIndex::new(b, sites)?;
    Ok((0..1u32 << sites)
        .filter(|&bits| band_label(bits, sites) == b)
        .map(|bits| SpinConfiguration {
            bits,
            basis: Basis::X,
            sites,
        })
        .collect())
}

/// Size of band `b`: `2 C(L,b)` below the middle, `C(L, L/2)` at it.
pub fn band_dimension(sites: usize, b: usize) -> usize {
    if 2 * b == sites {
        binomial(sites, b)
    } else {
        2 * binomial(sites, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn excitation_counts() {
        let up = SpinConfiguration::all_up(Basis::X, 8).unwrap();
        assert_eq!(x_excitation_count(&up).unwrap(), 0);
        assert_eq!(x_excitation_count(&up.flip(3)).unwrap(), 1);
        let six_down = SpinConfiguration::new(0b1000_0001, Basis::X, 8).unwrap();
        assert_eq!(x_excitation_count(&six_down).unwrap(), 6);
        let z = SpinConfiguration::all_up(Basis::Z, 8).unwrap();
        assert!(x_excitation_count(&z).is_err());
        assert!(band_of(&z).is_err());
    }

    #[test]
    fn band_labels() {
        let up = SpinConfiguration::all_up(Basis::X, 8).unwrap();
        assert_eq!(band_of(&up.flip(0)).unwrap(), BandIndex(1));
        let six_down = SpinConfiguration::new(0b0100_0001, Basis::X, 8).unwrap();
        assert_eq!(band_of(&six_down).unwrap(), BandIndex(2));
        let four = SpinConfiguration::new(0b0000_1111, Basis::X, 8).unwrap();
        assert_eq!(band_of(&four).unwrap(), BandIndex(4));
    }

    #[test]
    fn rejects_stray_bits() {
        assert!(SpinConfiguration::new(0b1_0000, Basis::X, 4).is_err());
        assert!(SpinConfiguration::all_up(Basis::X, 31).is_err());
        assert!(SpinConfiguration::all_up(Basis::X, 0).is_err());
    }

    #[test]
    fn single_site_rotation() {
        // z up (bit set) = index 1
        let psi = StateVector::from_amplitudes(vec![c(0.0), c(1.0)], Basis::Z).unwrap();
        let x = basis_rotate(&psi, Basis::X);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(x.amplitudes()[0].re, s, epsilon = 1e-15);
        assert_abs_diff_eq!(x.amplitudes()[1].re, s, epsilon = 1e-15);
        assert_eq!(x.basis(), Basis::X);
    }

    #[test]
    fn two_site_rotation_is_uniform() {
        let up = SpinConfiguration::all_up(Basis::Z, 2).unwrap();
        let x = basis_rotate(&StateVector::product(up), Basis::X);
        for a in x.amplitudes() {
            assert_abs_diff_eq!(a.re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn rotation_to_same_basis_is_identity() {
        let up = SpinConfiguration::all_up(Basis::X, 3).unwrap();
        let psi = StateVector::product(up);
        assert_eq!(basis_rotate(&psi, Basis::X), psi);
    }

    #[test]
    fn band_enumeration_sizes() {
        assert_eq!(enumerate_band(4, 1).unwrap().len(), 8);
        assert_eq!(enumerate_band(4, 2).unwrap().len(), 6);
        let total: usize = (0..=2).map(|b| enumerate_band(4, b).unwrap().len()).sum();
        assert_eq!(total, 16);
        assert!(enumerate_band(4, 3).is_err());
    }

    #[test]
    fn band_sizes_cover_hilbert_space() {
        for sites in 1..=14 {
            let total: usize = (0..=sites / 2)
                .map(|b| {
                    let n = enumerate_band(sites, b).unwrap().len();
                    assert_eq!(n, band_dimension(sites, b));
                    n
                })
                .sum();
            assert_eq!(total, 1 << sites);
        }
    }

    fn random_state(sites: usize, seed: u64) -> StateVector {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let amps = (0..1 << sites)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let mut psi = StateVector::from_amplitudes(amps, Basis::Z).unwrap();
        psi.normalize();
        psi
    }

    proptest! {
        #[test]
        fn rotation_is_unitary_involution(sites in 1usize..=10, s1 in any::<u64>(), s2 in any::<u64>()) {
            let a = random_state(sites, s1);
            let b = random_state(sites, s2);
            let ra = basis_rotate(&a, Basis::X);
            let rb = basis_rotate(&b, Basis::X);
            let before = a.inner(&b).unwrap();
            let after = ra.inner(&rb).unwrap();
            prop_assert!((before - after).norm() < 1e-12);
            let mut back = basis_rotate(&ra, Basis::Z);
            back.amplitudes_mut().iter_mut().zip(a.amplitudes()).for_each(|(x, y)| *x -= y);
            prop_assert!(back.norm() < 1e-12);
        }

        #[test]
        fn flipping_all_spins_keeps_band(sites in 2usize..=14, raw in any::<u32>()) {
            let cfg = SpinConfiguration::new(raw & full_mask(sites), Basis::X, sites).unwrap();
            prop_assert_eq!(band_of(&cfg).unwrap(), band_of(&cfg.flip_all()).unwrap());
        }
    }
}
