//! Bands of the long-range term in the x basis.
//!
//! Membership is by excitation number: band `b` holds every configuration
//! with `b` or `L - b` down spins. At `alpha = 0` these are exactly the
//! degenerate eigenspaces of `V`; for `alpha > 0` they are the
//! quasi-degenerate clusters.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::basis::{band_dimension, band_label, down_count, Basis, BandIndex, SpinConfiguration, StateVector};
use crate::error::{Error, Result};
use crate::hamiltonian::ModelParams;
use crate::rng::{self, Purpose};

/// `E_b = 2J (L/2 - b)^2 - J L / 2`.
pub fn band_energy(sites: usize, coupling: f64, b: usize) -> Result<f64> {
    BandIndex::new(b, sites)?;
    let half = sites as f64 / 2.0;
    let d = half - b as f64;
    Ok(2.0 * coupling * d * d - coupling * half)
}

/// Eigenvalue of `V` on an x configuration, any `alpha`.
pub fn v_eigenvalue(config: &SpinConfiguration, params: &ModelParams) -> Result<f64> {
    if config.basis() != Basis::X {
        return Err(Error::BasisMismatch {
            expected: Basis::X,
            found: config.basis(),
        });
    }
    let l = config.sites();
    let mut e = 0.0;
    for n in 0..l {
        for m in n + 1..l {
            e += params.pair_coupling(n, m) * (config.spin(n) * config.spin(m)) as f64;
        }
    }
    Ok(e)
}

/// Which sectors of a band to populate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandSector {
    /// Both the `b` and `L - b` sectors.
    Full,
    /// Only configurations with exactly `b` down spins.
    Lower,
}

#[derive(Debug, Clone)]
pub struct BandTable {
    sites: usize,
    coupling: f64,
    alpha: f64,
    labels: Vec<u8>,
    members: Vec<Vec<u32>>,
}

impl BandTable {
    pub fn new(sites: usize, coupling: f64, alpha: f64) -> Result<Self> {
        crate::basis::check_sites(sites)?;
        let labels: Vec<u8> = (0..1u32 << sites).map(|i| band_label(i, sites) as u8).collect();
        let mut members = vec![Vec::new(); sites / 2 + 1];
        for (i, &b) in labels.iter().enumerate() {
            members[b as usize].push(i as u32);
        }
        Ok(Self {
            sites,
            coupling,
            alpha,
            labels,
            members,
        })
    }

    pub fn for_params(params: &ModelParams) -> Result<Self> {
        Self::new(params.sites, params.coupling, params.alpha)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn band_count(&self) -> usize {
        self.members.len()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn members(&self, b: usize) -> Result<&[u32]> {
        self.check(b)?;
        Ok(&self.members[b])
    }

    pub fn dimension(&self, b: usize) -> Result<usize> {
        Ok(self.members(b)?.len())
    }

    /// Exact band energy; `None` unless `alpha = 0`.
    pub fn energy(&self, b: usize) -> Result<Option<f64>> {
        self.check(b)?;
        if self.alpha == 0.0 {
            band_energy(self.sites, self.coupling, b).map(Some)
        } else {
            Ok(None)
        }
    }

    /// Smallest and largest eigenvalue of `V` inside band `b`.
    pub fn v_range(&self, b: usize) -> Result<(f64, f64)> {
        let params = ModelParams::new(self.sites.max(2))
            .with_coupling(self.coupling)
            .with_alpha(self.alpha);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &bits in self.members(b)? {
            let cfg = SpinConfiguration::new(bits, Basis::X, self.sites)?;
            let v = v_eigenvalue(&cfg, &params)?;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Ok((lo, hi))
    }

    fn check(&self, b: usize) -> Result<()> {
        if b >= self.members.len() {
            return Err(Error::BandOutOfRange {
                b,
                sites: self.sites,
                max: self.members.len() - 1,
            });
        }
        Ok(())
    }

    fn check_state(&self, psi: &StateVector) -> Result<()> {
        if psi.basis() != Basis::X {
            return Err(Error::BasisMismatch {
                expected: Basis::X,
                found: psi.basis(),
            });
        }
        if psi.sites() != self.sites {
            return Err(Error::SiteMismatch {
                left: self.sites,
                right: psi.sites(),
            });
        }
        Ok(())
    }
}

/// Bands `b <= max_band` whose spread of `V` eigenvalues is not smaller
/// than the distance between their mean and the next band's mean. Empty
/// when the quasi-degenerate clusters are well separated.
pub fn cluster_overlaps(table: &BandTable, max_band: usize) -> Result<Vec<usize>> {
    let top = max_band.min(table.band_count().saturating_sub(2));
    let mut out = Vec::new();
    for b in 0..=top {
        let (lo, hi) = table.v_range(b)?;
        let (lo1, hi1) = table.v_range(b + 1)?;
        if hi - lo >= 0.5 * (lo + hi) - 0.5 * (lo1 + hi1) {
            out.push(b);
        }
    }
    Ok(out)
}

/// `Pi_b psi`: zero every amplitude outside band `b`.
pub fn projector_apply(table: &BandTable, b: usize, psi: &StateVector) -> Result<StateVector> {
    table.check(b)?;
    table.check_state(psi)?;
    let mut out = psi.clone();
    for (a, &label) in out.amplitudes_mut().iter_mut().zip(&table.labels) {
        if label as usize != b {
            *a = Complex64::new(0.0, 0.0);
        }
    }
    Ok(out)
}

/// `P_b = |Pi_b psi|^2` for every band.
pub fn band_weights(table: &BandTable, psi: &StateVector) -> Result<Vec<f64>> {
    table.check_state(psi)?;
    Ok(band_weights_raw(&table.labels, table.band_count(), psi.amplitudes()))
}

pub(crate) fn band_weights_raw(labels: &[u8], bands: usize, amps: &[Complex64]) -> Vec<f64> {
    let mut w = vec![0.0; bands];
    for (a, &label) in amps.iter().zip(labels) {
        w[label as usize] += a.norm_sqr();
    }
    w
}

/// Weight of one band without allocating the full profile.
pub(crate) fn band_weight_raw(labels: &[u8], b: usize, amps: &[Complex64]) -> f64 {
    amps.iter()
        .zip(labels)
        .filter(|(_, &l)| l as usize == b)
        .map(|(a, _)| a.norm_sqr())
        .sum()
}

/// Haar-random state on band `b` (both sectors), seeded.
pub fn random_band_state(table: &BandTable, b: usize, seed: u64) -> Result<StateVector> {
    let mut rng = rng::stream(seed, 0, Purpose::InitialState);
    random_band_state_with(table, b, BandSector::Full, &mut rng)
}

/// Haar-random state on band `b` drawn from `rng`: i.i.d. complex
/// Gaussian amplitudes on the members, then normalized.
pub fn random_band_state_with<R: Rng + ?Sized>(
    table: &BandTable,
    b: usize,
    sector: BandSector,
    rng: &mut R,
) -> Result<StateVector> {
    let members = table.members(b)?;
    let mut psi = StateVector::zeros(Basis::X, table.sites)?;
    let amps = psi.amplitudes_mut();
    for &bits in members {
        if sector == BandSector::Lower && down_count(bits, table.sites) != b {
            continue;
        }
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        amps[bits as usize] = Complex64::new(re, im);
    }
    psi.normalize();
    Ok(psi)
}

/// Rows `(b, E_b or None, dimension)` for the whole spectrum of `V`.
pub fn spectrum_rows(table: &BandTable) -> Result<Vec<(usize, Option<f64>, usize)>> {
    (0..table.band_count())
        .map(|b| Ok((b, table.energy(b)?, table.dimension(b)?)))
        .collect()
}

/// Expected size of band `b`.
pub fn expected_dimension(sites: usize, b: usize) -> usize {
    band_dimension(sites, b)
}
