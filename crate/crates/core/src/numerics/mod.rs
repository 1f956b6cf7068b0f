//! Performance kernels with explicit accuracy contracts: Chebyshev time
//! propagation, resolvent columns, and small dense diagonalization.

pub mod chebyshev;
pub mod dense;
pub mod green;
pub mod quad;

use num_complex::Complex64;

use crate::lattice::Grid;

pub use chebyshev::{evolve, Propagator};
pub use dense::{dense_eig, EigenDecomposition, DEFAULT_DENSE_CAP};
pub use green::{green_column, green_column_with, resolvent_apply, GreenColumn, GreenOptions};

/// A complex amplitude vector over the sites of a grid.
#[derive(Debug, Clone)]
pub struct WaveState {
    grid: Grid,
    pub data: Vec<Complex64>,
}

impl WaveState {
    pub fn new(grid: Grid, data: Vec<Complex64>) -> Self {
        assert_eq!(grid.len(), data.len());
        WaveState { grid, data }
    }

    pub fn zero(grid: Grid) -> Self {
        let n = grid.len();
        WaveState { grid, data: vec![Complex64::new(0.0, 0.0); n] }
    }

    /// Canonical basis state concentrated at one site.
    pub fn delta(grid: Grid, site: &[i64]) -> Option<Self> {
        let idx = grid.index_of(site)?;
        let mut s = WaveState::zero(grid);
        s.data[idx] = Complex64::new(1.0, 0.0);
        Some(s)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

pub(crate) fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

