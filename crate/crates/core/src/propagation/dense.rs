use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::eigen::{eigensolve_sym, SymmetricEigen};
use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::hamiltonian::{SparseOperator, DENSE_LIMIT};

/// How a block's basis sits inside the full space.
#[derive(Debug, Clone, Copy)]
enum Embedding {
    /// Identity: the block is the whole space.
    Full,
    /// Block vector `k` is `(|k> + sign |k ^ full>) / sqrt 2`, `k < dim / 2`.
    Parity { sign: f64 },
}

#[derive(Debug, Clone)]
struct Block {
    embedding: Embedding,
    eigen: SymmetricEigen,
}

/// Eigendecomposition of a real symmetric Hamiltonian, possibly split into
/// the two sectors of the global spin-flip symmetry.
#[derive(Debug, Clone)]
pub struct DenseSpectrum {
    sites: usize,
    basis: Basis,
    dim: usize,
    blocks: Vec<Block>,
}

impl DenseSpectrum {
    pub fn from_matrix(h: &DMatrix<f64>, basis: Basis) -> Result<Self> {
        let dim = h.nrows();
        if !dim.is_power_of_two() {
            return Err(Error::InvalidParams(format!("matrix dimension {dim} is not a power of two")));
        }
        Ok(Self {
            sites: dim.trailing_zeros() as usize,
            basis,
            dim,
            blocks: vec![Block {
                embedding: Embedding::Full,
                eigen: eigensolve_sym(h)?,
            }],
        })
    }

    /// Diagonalize `op`, using the parity split when `op` commutes with
    /// flipping every spin.
    pub fn from_operator(op: &SparseOperator) -> Result<Self> {
        if op.sites() > DENSE_LIMIT {
            return Err(Error::DenseTooLarge {
                sites: op.sites(),
                limit: DENSE_LIMIT,
            });
        }
        if op.sites() < 2 || !op.has_global_flip_symmetry() {
            return Self::from_matrix(&op.dense()?, op.basis());
        }
        let dim = op.dim();
        let half = dim / 2;
        let full = dim - 1;
        let mut even = DMatrix::<f64>::zeros(half, half);
        let mut odd = DMatrix::<f64>::zeros(half, half);
        let mut unit = vec![0.0f64; dim];
        let mut col = vec![0.0f64; dim];
        for j in 0..half {
            unit[j] = 1.0;
            op.apply(&unit, &mut col);
            unit[j] = 0.0;
            for i in 0..half {
                let (a, b) = (col[i], col[full ^ i]);
                even[(i, j)] = a + b;
                odd[(i, j)] = a - b;
            }
        }
        symmetrize(&mut even);
        symmetrize(&mut odd);
        let blocks = [(even, 1.0), (odd, -1.0)]
            .into_iter()
            .map(|(m, sign)| {
                Ok(Block {
                    embedding: Embedding::Parity { sign },
                    eigen: eigensolve_sym(&m)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            sites: op.sites(),
            basis: op.basis(),
            dim,
            blocks,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.blocks.iter().flat_map(|b| b.eigen.eigenvalues.iter().copied()).collect();
        all.sort_by(f64::total_cmp);
        all
    }

    pub(super) fn prepare(&self, psi0: &[Complex64]) -> DenseCoefficients<'_> {
        let full = self.dim - 1;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let coefficients = self
            .blocks
            .iter()
            .map(|block| {
                let n = block.eigen.eigenvalues.len();
                let (re, im) = match block.embedding {
                    Embedding::Full => (
                        DVector::from_iterator(n, psi0.iter().map(|a| a.re)),
                        DVector::from_iterator(n, psi0.iter().map(|a| a.im)),
                    ),
                    Embedding::Parity { sign } => {
                        let y: Vec<Complex64> = (0..n).map(|k| (psi0[k] + psi0[full ^ k] * sign) * s).collect();
                        (
                            DVector::from_iterator(n, y.iter().map(|a| a.re)),
                            DVector::from_iterator(n, y.iter().map(|a| a.im)),
                        )
                    }
                };
                let q = &block.eigen.eigenvectors;
                (q.tr_mul(&re), q.tr_mul(&im))
            })
            .collect();
        DenseCoefficients {
            spectrum: self,
            coefficients,
        }
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Eigenbasis coefficients of one initial state.
pub(super) struct DenseCoefficients<'a> {
    spectrum: &'a DenseSpectrum,
    coefficients: Vec<(DVector<f64>, DVector<f64>)>,
}

impl DenseCoefficients<'_> {
    /// Write `psi(t)` into `out`.
    pub(super) fn state_at(&self, t: f64, out: &mut [Complex64]) {
        let full = self.spectrum.dim - 1;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        out.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        for (block, (c_re, c_im)) in self.spectrum.blocks.iter().zip(&self.coefficients) {
            let n = c_re.len();
            let mut w_re = DVector::<f64>::zeros(n);
            let mut w_im = DVector::<f64>::zeros(n);
            for k in 0..n {
                let phase = Complex64::from_polar(1.0, -block.eigen.eigenvalues[k] * t);
                let c = Complex64::new(c_re[k], c_im[k]) * phase;
                w_re[k] = c.re;
                w_im[k] = c.im;
            }
            let q = &block.eigen.eigenvectors;
            let z_re = q * w_re;
            let z_im = q * w_im;
            match block.embedding {
                Embedding::Full => {
                    for (k, o) in out.iter_mut().enumerate() {
                        *o = Complex64::new(z_re[k], z_im[k]);
                    }
                }
                Embedding::Parity { sign } => {
                    for k in 0..n {
                        let z = Complex64::new(z_re[k], z_im[k]) * s;
                        out[k] += z;
                        out[full ^ k] += z * sign;
                    }
                }
            }
        }
    }
}

/// Exact evolution for an operator that is block diagonal over given sets
/// of configurations. States must live inside the blocks.
#[derive(Debug, Clone)]
pub struct BlockSpectrum {
    sites: usize,
    basis: Basis,
    dim: usize,
    blocks: Vec<(Vec<u32>, SymmetricEigen)>,
}

impl BlockSpectrum {
    pub fn new(sites: usize, basis: Basis, blocks: Vec<(Vec<u32>, DMatrix<f64>)>) -> Result<Self> {
        let dim = 1usize << sites;
        let blocks = blocks
            .into_iter()
            .map(|(members, m)| {
                if m.nrows() != members.len() {
                    return Err(Error::InvalidParams("block matrix does not match its member list".into()));
                }
                Ok((members, eigensolve_sym(&m)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            sites,
            basis,
            dim,
            blocks,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.blocks.iter().flat_map(|(_, e)| e.eigenvalues.iter().copied()).collect();
        all.sort_by(f64::total_cmp);
        all
    }

    pub(super) fn prepare(&self, psi0: &[Complex64]) -> Result<BlockCoefficients<'_>> {
        let mut covered = vec![false; self.dim];
        let coefficients = self
            .blocks
            .iter()
            .map(|(members, eigen)| {
                let n = members.len();
                for &m in members {
                    covered[m as usize] = true;
                }
                let re = DVector::from_iterator(n, members.iter().map(|&m| psi0[m as usize].re));
                let im = DVector::from_iterator(n, members.iter().map(|&m| psi0[m as usize].im));
                (eigen.eigenvectors.tr_mul(&re), eigen.eigenvectors.tr_mul(&im))
            })
            .collect();
        let outside: f64 = psi0
            .iter()
            .zip(&covered)
            .filter(|(_, &c)| !c)
            .map(|(a, _)| a.norm_sqr())
            .sum();
        if outside > 1e-20 {
            return Err(Error::InvalidParams(format!(
                "state has weight {outside:e} outside the prepared blocks"
            )));
        }
        Ok(BlockCoefficients {
            spectrum: self,
            coefficients,
        })
    }
}

pub(super) struct BlockCoefficients<'a> {
    spectrum: &'a BlockSpectrum,
    coefficients: Vec<(DVector<f64>, DVector<f64>)>,
}

impl BlockCoefficients<'_> {
    pub(super) fn state_at(&self, t: f64, out: &mut [Complex64]) {
        out.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        for ((members, eigen), (c_re, c_im)) in self.spectrum.blocks.iter().zip(&self.coefficients) {
            let n = members.len();
            let mut w_re = DVector::<f64>::zeros(n);
            let mut w_im = DVector::<f64>::zeros(n);
            for k in 0..n {
                let c = Complex64::new(c_re[k], c_im[k]) * Complex64::from_polar(1.0, -eigen.eigenvalues[k] * t);
                w_re[k] = c.re;
                w_im[k] = c.im;
            }
            let z_re = &eigen.eigenvectors * w_re;
            let z_im = &eigen.eigenvectors * w_im;
            for (k, &m) in members.iter().enumerate() {
                out[m as usize] = Complex64::new(z_re[k], z_im[k]);
            }
        }
    }
}
