//! Numerical laboratory for one-particle discrete Schrödinger operators on
//! finite boxes of the d-dimensional integer lattice.
//!
//! The crate assembles trimmed-potential Hamiltonians H = H0 + V, evolves
//! wave packets by Chebyshev expansion, solves shifted linear systems for
//! Green's-function columns, constructs closed-form generalized
//! eigenfunctions for periodic trimmed sublattices, and measures quantum
//! transport through Abel/Cesàro/resolvent moment routes. Inequality
//! checkers tie the measured quantities to exponential-decay and
//! delocalization bounds.
//!
//! Data-parallel inner loops (matvec slabs, energy-grid nodes, disorder
//! realizations, shell scans) run on rayon under the default `parallel`
//! feature and degrade to sequential loops without it; results are
//! bit-identical either way.

pub mod analysis;
pub mod eigenfunctions;
pub mod error;
pub mod io;
pub mod lattice;
pub mod numerics;
pub mod operator;
pub mod par;
pub mod transport;

pub use error::{Error, Result};
