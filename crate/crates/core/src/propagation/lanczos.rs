//! Extremal eigenvalue estimates and the spectral enclosure the Chebyshev
//! propagator needs.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::Result;
use crate::hamiltonian::{SparseOperator, TermList};
use crate::rng::{self, Purpose};

/// Fraction of the estimated spectral width added on each side.
pub const SPECTRAL_PADDING: f64 = 0.05;

const LANCZOS_SEED: u64 = 0x5EED_1A2C;
const MAX_LANCZOS_STEPS: usize = 160;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBounds {
    pub lower: f64,
    pub upper: f64,
    pub ritz_lower: f64,
    pub ritz_upper: f64,
}

impl SpectralBounds {
    pub fn center(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }
}

/// Extremal Ritz values and their residual norms from Lanczos with full
/// reorthogonalization.
pub fn lanczos_extremes(op: &SparseOperator) -> ((f64, f64), (f64, f64)) {
    let dim = op.dim();
    let steps = MAX_LANCZOS_STEPS.min(dim);
    let mut rng = rng::stream(LANCZOS_SEED, 0, Purpose::Auxiliary);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
    normalize(&mut v);

    let mut basis: Vec<Vec<f64>> = vec![v];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];
    let mut last = (f64::NAN, f64::NAN);
    let mut result = ((0.0, 0.0), (0.0, 0.0));

    for j in 0..steps {
        op.apply(&basis[j], &mut w);
        let a = dot(&w, &basis[j]);
        alpha.push(a);
        // full reorthogonalization, applied twice
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&w, q);
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = dot(&w, &w).sqrt();
        let (ritz, resid) = tridiagonal_extremes(&alpha, &beta, b);
        result = (ritz, resid);
        let scale = (ritz.1 - ritz.0).abs().max(1e-300);
        let converged = (ritz.0 - last.0).abs() < 1e-10 * scale && (ritz.1 - last.1).abs() < 1e-10 * scale;
        last = ritz;
        if b <= 1e-12 * scale || j + 1 == steps || (j >= 20 && converged) {
            break;
        }
        beta.push(b);
        let mut next = w.clone();
        next.iter_mut().for_each(|x| *x /= b);
        basis.push(next);
    }
    result
}

/// Extreme eigenvalues of the tridiagonal matrix and residual norms
/// `beta_next * |last component of the Ritz vector|`.
fn tridiagonal_extremes(alpha: &[f64], beta: &[f64], beta_next: f64) -> ((f64, f64), (f64, f64)) {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = t.symmetric_eigen();
    let (mut lo, mut hi) = (0usize, 0usize);
    for i in 0..m {
        if eig.eigenvalues[i] < eig.eigenvalues[lo] {
            lo = i;
        }
        if eig.eigenvalues[i] > eig.eigenvalues[hi] {
            hi = i;
        }
    }
    let r_lo = beta_next * eig.eigenvectors[(m - 1, lo)].abs();
    let r_hi = beta_next * eig.eigenvectors[(m - 1, hi)].abs();
    ((eig.eigenvalues[lo], eig.eigenvalues[hi]), (r_lo, r_hi))
}

/// Enclosure `[lower, upper]` of the spectrum: Lanczos extremes widened by
/// their residuals and by `SPECTRAL_PADDING` of the width, clipped to the
/// Gershgorin interval.
pub fn spectral_bounds_op(op: &SparseOperator) -> SpectralBounds {
    let (g_lo, g_hi) = op.gershgorin_bounds();
    if op.is_diagonal() {
        let width = g_hi - g_lo;
        let pad = SPECTRAL_PADDING * width.max(1e-12);
        return SpectralBounds {
            lower: g_lo - pad,
            upper: g_hi + pad,
            ritz_lower: g_lo,
            ritz_upper: g_hi,
        };
    }
    let ((r_lo, r_hi), (res_lo, res_hi)) = lanczos_extremes(op);
    let pad = SPECTRAL_PADDING * (r_hi - r_lo).max(1e-12);
    SpectralBounds {
        lower: (r_lo - res_lo - pad).max(g_lo),
        upper: (r_hi + res_hi + pad).min(g_hi),
        ritz_lower: r_lo,
        ritz_upper: r_hi,
    }
}

pub fn spectral_bounds(terms: &TermList) -> Result<SpectralBounds> {
    Ok(spectral_bounds_op(&terms.compile()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}
