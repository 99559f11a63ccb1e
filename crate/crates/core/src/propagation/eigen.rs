use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenpairs of a real symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub eigenvalues: DVector<f64>,
    /// Column `j` is the eigenvector of `eigenvalues[j]`.
    pub eigenvectors: DMatrix<f64>,
}

/// Dense symmetric eigensolver (nalgebra's implicit QR), with the output
/// sorted ascending. Rejects input whose asymmetry exceeds rounding.
pub fn eigensolve_sym(matrix: &DMatrix<f64>) -> Result<SymmetricEigen> {
    if !matrix.is_square() {
        return Err(Error::NotSymmetric(f64::INFINITY));
    }
    let scale = matrix.amax().max(1.0);
    let asym = (matrix - matrix.transpose()).amax();
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    let eig = matrix.clone().symmetric_eigen();
    let n = matrix.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(SymmetricEigen {
        eigenvalues,
        eigenvectors,
    })
}
