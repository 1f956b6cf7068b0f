//! Dense symmetric eigendecomposition for small boxes — exact route for
//! desk-scale systems and the oracle for everything iterative.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operator::SparseHamiltonian;

/// Default cap on dense diagonalization size.
pub const DEFAULT_DENSE_CAP: usize = 6000;

/// Eigenvalues ascending with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenDecomposition {
    /// Distance from `e` to the finite-volume spectrum.
    pub fn dist_to_spectrum(&self, e: f64) -> f64 {
        self.values
            .iter()
            .map(|l| (l - e).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn dense_eig(h: &SparseHamiltonian, cap: usize) -> Result<EigenDecomposition> {
    let n = h.site_count();
    if n > cap {
        return Err(Error::DenseCap { size: n, cap });
    }
    let m = h.to_dense();
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    Ok(EigenDecomposition { values, vectors })
}
