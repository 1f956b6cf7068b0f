//! Finite-volume lattice Schrödinger operators H = H0 + V.
//!
//! H0 is the adjacency operator (unit hopping between sites at l1-distance
//! one, links leaving the box dropped), V a real diagonal supported on a
//! trimmed sublattice. The operator is matrix-free: the neighbor structure
//! follows from the box strides, so only the diagonal is stored.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{gamma_contains, Grid, LatticeBox, TrimPattern};
use crate::par;

/// Diagonal potential specification.
#[derive(Debug, Clone)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    /// Sublattice carrying the potential; sites outside get exactly 0.
    pub support: TrimPattern,
}

#[derive(Debug, Clone)]
pub enum PotentialKind {
    Zero,
    /// Explicit site → value table; sites absent from the table get 0.
    Table(BTreeMap<Vec<i64>, f64>),
    /// Independent uniform draws in [-width/2, width/2], keyed per site so
    /// values are independent of box size and traversal order.
    IidUniform { width: f64, seed: u64, realization: u64 },
}

impl PotentialSpec {
    pub fn zero(dim: usize) -> Self {
        PotentialSpec { kind: PotentialKind::Zero, support: TrimPattern::full(dim) }
    }

    /// Table potential; every nonzero entry must lie on the support.
    pub fn table(entries: BTreeMap<Vec<i64>, f64>, support: TrimPattern) -> Result<Self> {
        for (site, &v) in &entries {
            if site.len() != support.dim() {
                return Err(Error::config(format!(
                    "table site {site:?} has dimension {} but the pattern has {}",
                    site.len(),
                    support.dim()
                )));
            }
            if v != 0.0 && !gamma_contains(&support, site) {
                return Err(Error::config(format!(
                    "table potential is nonzero at {site:?} outside the trimmed sublattice"
                )));
            }
        }
        Ok(PotentialSpec { kind: PotentialKind::Table(entries), support })
    }

    pub fn iid_uniform(width: f64, seed: u64, realization: u64, support: TrimPattern) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::config(format!("disorder width must be positive, got {width}")));
        }
        Ok(PotentialSpec {
            kind: PotentialKind::IidUniform { width, seed, realization },
            support,
        })
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    /// Potential value at one site.
    pub fn value_at(&self, site: &[i64]) -> f64 {
        if !gamma_contains(&self.support, site) {
            return 0.0;
        }
        match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::Table(t) => t.get(site).copied().unwrap_or(0.0),
            PotentialKind::IidUniform { width, seed, realization } => {
                uniform_symmetric(site_key(*seed, *realization, site), *width)
            }
        }
    }
}

// splitmix64 finalizer; the standard 64-bit avalanche mixer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based key for one site of one disorder realization.
fn site_key(seed: u64, realization: u64, site: &[i64]) -> u64 {
    let mut h = mix64(seed ^ 0xA076_1D64_78BD_642F);
    h = mix64(h ^ realization.wrapping_mul(0xE703_7ED1_A0B4_28DB));
    for &c in site {
        h = mix64(h ^ (c as u64));
    }
    h
}

/// Map a 64-bit key to a uniform draw in [-width/2, width/2).
fn uniform_symmetric(key: u64, width: f64) -> f64 {
    let u = (key >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    width * (u - 0.5)
}

/// Materialize the potential on the sites of a box, indexed by the box
/// bijection.
pub fn sample_potential(spec: &PotentialSpec, boxref: &LatticeBox) -> Result<Vec<f64>> {
    if spec.dim() != boxref.dim() {
        return Err(Error::config(format!(
            "potential dimension {} does not match box dimension {}",
            spec.dim(),
            boxref.dim()
        )));
    }
    let grid = boxref.grid().clone();
    Ok(par::map_indexed(boxref.site_count(), move |i| {
        spec.value_at(&grid.site_at(i))
    }))
}

/// Finite-volume Hamiltonian: nearest-neighbor hopping on a rectangular
/// grid plus a stored diagonal.
#[derive(Debug, Clone)]
pub struct SparseHamiltonian {
    grid: Grid,
    diag: Vec<f64>,
    potential_sup: f64,
}

/// Assemble H = H0 + V on a box with simple (dropped-link) boundary
/// conditions.
pub fn assemble(boxref: &LatticeBox, pot: &PotentialSpec) -> Result<SparseHamiltonian> {
    let diag = sample_potential(pot, boxref)?;
    Ok(SparseHamiltonian::from_parts(boxref.grid().clone(), diag))
}

impl SparseHamiltonian {
    fn from_parts(grid: Grid, diag: Vec<f64>) -> Self {
        assert_eq!(grid.len(), diag.len());
        let potential_sup = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        SparseHamiltonian { grid, diag, potential_sup }
    }

    /// Explicit construction on an arbitrary rectangular site range with a
    /// given diagonal. Plumbing for reference systems that are not centered
    /// boxes (e.g. a two-site chain).
    pub fn on_range(lo: Vec<i64>, hi: Vec<i64>, diag: Vec<f64>) -> Result<Self> {
        let grid = Grid::new(lo, hi)?;
        if grid.len() != diag.len() {
            return Err(Error::config(format!(
                "diagonal length {} does not match grid size {}",
                diag.len(),
                grid.len()
            )));
        }
        Ok(SparseHamiltonian::from_parts(grid, diag))
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn site_count(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn potential_sup(&self) -> f64 {
        self.potential_sup
    }

    /// Interval guaranteed to contain the spectrum:
    /// [-2d - ||V||_inf, 2d + ||V||_inf].
    pub fn spectrum_window(&self) -> (f64, f64) {
        let hop = 2.0 * self.dim() as f64;
        (-hop - self.potential_sup, hop + self.potential_sup)
    }

    /// Tighter Gershgorin window [min V - 2d, max V + 2d], used internally
    /// for Chebyshev scaling.
    pub(crate) fn gershgorin_window(&self) -> (f64, f64) {
        let hop = 2.0 * self.dim() as f64;
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        for &v in &self.diag {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo - hop, hi + hop)
    }

    /// y = H x.
    pub fn apply<T: HScalar>(&self, x: &[T], y: &mut [T]) {
        self.apply_fused(x, None, T::from_re(0.0), T::from_re(1.0), y);
    }

    /// Fused Chebyshev three-term step:
    /// `out = scale * (H x - shift * x) + prev_coeff * prev`
    /// with `prev = None` treated as the zero vector. A single pass over
    /// memory covers both `y = (Hx - b x)/a` and `y = 2 S x - x_prev`.
    pub fn apply_fused<T: HScalar>(
        &self,
        x: &[T],
        prev: Option<&[T]>,
        shift: T,
        scale: T,
        out: &mut [T],
    ) {
        let n = self.grid.len();
        assert_eq!(x.len(), n);
        assert_eq!(out.len(), n);
        if let Some(p) = prev {
            assert_eq!(p.len(), n);
        }
        let d = self.grid.dim();
        let inner = self.grid.dims()[d - 1];
        let inner_dim = inner;
        let rows = n / inner;
        // a few rows per task keeps scheduling overhead small
        let rows_per_task = (4096 / inner.max(1)).max(1);
        let chunk = rows_per_task * inner;
        let grid = &self.grid;
        let diag = &self.diag;

        par::for_each_chunk_mut(out, chunk, |task, yc| {
            let row0 = task * rows_per_task;
            let nrows = yc.len() / inner_dim;
            for r in 0..nrows {
                let row = row0 + r;
                debug_assert!(row < rows);
                let base = row * inner_dim;
                let yrow = &mut yc[r * inner_dim..(r + 1) * inner_dim];
                let xrow = &x[base..base + inner_dim];

                // diagonal and the fused shift
                for j in 0..inner_dim {
                    yrow[j] = T::from_re(diag[base + j]).sub(shift).mul(xrow[j]);
                }
                // inner-axis hopping within the contiguous row
                for j in 1..inner_dim {
                    yrow[j] = yrow[j].add(xrow[j - 1]);
                    yrow[j - 1] = yrow[j - 1].add(xrow[j]);
                }
                // hopping along the outer axes: whole-row adds
                for a in 0..d - 1 {
                    let stride_rows = grid.strides()[a] / inner_dim;
                    let ca = (row / stride_rows) % grid.dims()[a];
                    if ca > 0 {
                        let nb = base - grid.strides()[a];
                        let xn = &x[nb..nb + inner_dim];
                        for j in 0..inner_dim {
                            yrow[j] = yrow[j].add(xn[j]);
                        }
                    }
                    if ca + 1 < grid.dims()[a] {
                        let nb = base + grid.strides()[a];
                        let xn = &x[nb..nb + inner_dim];
                        for j in 0..inner_dim {
                            yrow[j] = yrow[j].add(xn[j]);
                        }
                    }
                }
                // fused scale and previous-vector combination
                match prev {
                    Some(p) => {
                        let prow = &p[base..base + inner_dim];
                        for j in 0..inner_dim {
                            yrow[j] = scale.mul(yrow[j]).sub(prow[j]);
                        }
                    }
                    None => {
                        for j in 0..inner_dim {
                            yrow[j] = scale.mul(yrow[j]);
                        }
                    }
                }
            }
        });
    }

    /// Dense matrix form (small boxes only; used by the dense routes).
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.site_count();
        let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            let site = self.grid.site_at(i);
            for a in 0..self.dim() {
                if site[a] + 1 <= self.grid.hi()[a] {
                    let j = i + self.grid.strides()[a];
                    m[(i, j)] = 1.0;
                    m[(j, i)] = 1.0;
                }
            }
        }
        m
    }
}

/// Scalar types the Hamiltonian can act on.
pub trait HScalar: Copy + Send + Sync {
    fn from_re(v: f64) -> Self;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
}

impl HScalar for f64 {
    fn from_re(v: f64) -> Self {
        v
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
}

impl HScalar for Complex64 {
    fn from_re(v: f64) -> Self {
        Complex64::new(v, 0.0)
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
}
