//! The band-projected Hamiltonian `H_Z = sum_b Pi_b H Pi_b`.
//!
//! Built in the x basis from the full operator by discarding every flip
//! whose endpoints carry different band labels. The diagonal is `V` itself,
//! so at `alpha = 0` it equals `E_b` on band `b`. For `alpha > 0` the
//! diagonal is the per-configuration eigenvalue of `V`; this is a natural
//! extension of the degenerate construction, not a derived result.
//!
//! Single flips survive inside the middle band when `L` is odd, and the
//! `k <-> L - k` double flips survive at `b = L/2 - 1` when `L` is even.
//! Both belong to the projection and are kept.

use nalgebra::DMatrix;

use crate::bands::BandTable;
use crate::basis::{Basis, StateVector};
use crate::error::{Error, Result};
use crate::hamiltonian::{x_operator, DisorderRealization, Flip, ModelParams, SparseOperator};
use crate::propagation::{BlockSpectrum, EvolutionResult, Propagator, PropagatorChoice, TimeGrid};

/// Largest band block diagonalized directly.
const BLOCK_LIMIT: usize = 4096;

#[derive(Debug, Clone)]
pub struct ZenoHamiltonian {
    op: SparseOperator,
    labels: Vec<u8>,
    members: Vec<Vec<u32>>,
    energies: Vec<Option<f64>>,
}

pub fn build_zeno(params: &ModelParams, realization: &DisorderRealization, table: &BandTable) -> Result<ZenoHamiltonian> {
    if table.sites() != params.sites {
        return Err(Error::SiteMismatch {
            left: params.sites,
            right: table.sites(),
        });
    }
    let op = x_operator(params, realization)?.restrict_to_bands();
    let members = (0..table.band_count())
        .map(|b| table.members(b).map(<[u32]>::to_vec))
        .collect::<Result<Vec<_>>>()?;
    let energies = (0..table.band_count())
        .map(|b| table.energy(b))
        .collect::<Result<Vec<_>>>()?;
    Ok(ZenoHamiltonian {
        op,
        labels: table.labels().to_vec(),
        members,
        energies,
    })
}

impl ZenoHamiltonian {
    pub fn operator(&self) -> &SparseOperator {
        &self.op
    }

    pub fn sites(&self) -> usize {
        self.op.sites()
    }

    /// `E_b` per band at `alpha = 0`, `None` otherwise.
    pub fn band_energies(&self) -> &[Option<f64>] {
        &self.energies
    }

    /// Intra-band flip terms that remain after projection.
    pub fn hopping_terms(&self) -> &[Flip] {
        self.op.flips()
    }

    pub fn dense(&self) -> Result<DMatrix<f64>> {
        self.op.dense()
    }

    /// `H_Z` restricted to band `b`, rows ordered as the band's members.
    pub fn band_block(&self, b: usize) -> Result<DMatrix<f64>> {
        let members = self.members.get(b).ok_or(Error::BandOutOfRange {
            b,
            sites: self.sites(),
            max: self.members.len() - 1,
        })?;
        let mut position = vec![usize::MAX; self.op.dim()];
        for (k, &m) in members.iter().enumerate() {
            position[m as usize] = k;
        }
        let n = members.len();
        let diag = self.op.diagonal();
        let mut block = DMatrix::<f64>::zeros(n, n);
        for (k, &m) in members.iter().enumerate() {
            let i = m as usize;
            block[(k, k)] = diag[i];
            for flip in self.op.flips() {
                let j = i ^ flip.mask as usize;
                if self.labels[j] == self.labels[i] {
                    block[(position[j], k)] += flip.coefficient;
                }
            }
        }
        Ok(block)
    }

    /// Exact propagator on the listed bands; states must live there.
    pub fn band_propagator(&self, bands: &[usize]) -> Result<Propagator> {
        let blocks = bands
            .iter()
            .map(|&b| Ok((self.members[b].clone(), self.band_block(b)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Propagator::Blocks(BlockSpectrum::new(self.sites(), Basis::X, blocks)?))
    }

    /// Propagator for states supported on `bands`: exact block
    /// diagonalization when the blocks are small, Chebyshev otherwise.
    pub fn propagator_for(&self, bands: &[usize]) -> Result<Propagator> {
        for &b in bands {
            if b >= self.members.len() {
                return Err(Error::BandOutOfRange {
                    b,
                    sites: self.sites(),
                    max: self.members.len() - 1,
                });
            }
        }
        let size = bands.iter().map(|&b| self.members[b].len()).max().unwrap_or(0);
        if self.op.is_diagonal() {
            Ok(Propagator::diagonal(&self.op))
        } else if size <= BLOCK_LIMIT {
            self.band_propagator(bands)
        } else {
            Propagator::for_operator(&self.op, PropagatorChoice::Cheby, 0.0, 0)
        }
    }

    /// Bands carrying weight in `psi`.
    pub fn occupied_bands(&self, psi: &StateVector) -> Vec<usize> {
        let mut seen = vec![false; self.members.len()];
        for (a, &l) in psi.amplitudes().iter().zip(&self.labels) {
            if a.norm_sqr() > 0.0 {
                seen[l as usize] = true;
            }
        }
        (0..seen.len()).filter(|&b| seen[b]).collect()
    }
}

/// Evolve `psi0` under `H_Z`.
pub fn evolve_zeno(zh: &ZenoHamiltonian, psi0: &StateVector, grid: &TimeGrid) -> Result<EvolutionResult> {
    if psi0.basis() != Basis::X {
        return Err(Error::BasisMismatch {
            expected: Basis::X,
            found: psi0.basis(),
        });
    }
    let bands = zh.occupied_bands(psi0);
    zh.propagator_for(&bands)?.evolve(psi0, grid)
}
