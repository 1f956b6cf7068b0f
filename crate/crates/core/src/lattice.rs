//! Finite-box geometry of the d-dimensional integer lattice.
//!
//! A box of radius L around a center site holds the (2L+1)^d sites within
//! sup-norm distance L. Boundary shells come in three kinds: the inner
//! shell (sup-distance exactly L), the outer shell (exactly L+1), and the
//! enlarged shell (their disjoint union). Trimmed sublattices are periodic
//! unions of hyperplane grids: a site belongs to the sublattice when at
//! least one of the first d1 coordinates is divisible by its period.

use crate::error::{Error, Result};

/// A centered sup-norm box in the integer lattice with a lexicographic
/// site ↔ index bijection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeBox {
    center: Vec<i64>,
    radius: i64,
    grid: Grid,
}

impl LatticeBox {
    pub fn new(center: Vec<i64>, radius: i64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::config("box dimension must be at least 1"));
        }
        if radius < 0 {
            return Err(Error::config(format!("box radius must be >= 0, got {radius}")));
        }
        let lo: Vec<i64> = center.iter().map(|c| c - radius).collect();
        let hi: Vec<i64> = center.iter().map(|c| c + radius).collect();
        let grid = Grid::new(lo, hi)?;
        Ok(LatticeBox { center, radius, grid })
    }

    /// Box of radius `radius` around the origin.
    pub fn centered(dim: usize, radius: i64) -> Result<Self> {
        Self::new(vec![0; dim], radius)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[i64] {
        &self.center
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Number of sites, (2L+1)^d.
    pub fn site_count(&self) -> usize {
        self.grid.len()
    }

    pub fn contains(&self, site: &[i64]) -> bool {
        self.grid.contains(site)
    }

    /// Sup-norm distance from the center.
    pub fn sup_dist(&self, site: &[i64]) -> i64 {
        site.iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c).abs())
            .max()
            .unwrap_or(0)
    }

    pub fn index_of(&self, site: &[i64]) -> Option<usize> {
        self.grid.index_of(site)
    }

    pub fn site_at(&self, index: usize) -> Vec<i64> {
        self.grid.site_at(index)
    }
}

/// Lexicographically ordered enumeration of the box sites.
pub fn box_sites(b: &LatticeBox) -> Vec<Vec<i64>> {
    (0..b.site_count()).map(|i| b.site_at(i)).collect()
}

/// Axis-aligned rectangular index space: the site ↔ flat-index bijection
/// underlying boxes and Hamiltonians. Lexicographic in (n1, …, nd) with
/// the last axis contiguous.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    lo: Vec<i64>,
    hi: Vec<i64>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::config("grid bounds must be nonempty and of equal dimension"));
        }
        let mut dims = Vec::with_capacity(lo.len());
        for (l, h) in lo.iter().zip(&hi) {
            if h < l {
                return Err(Error::config(format!("grid axis range [{l}, {h}] is empty")));
            }
            dims.push((h - l + 1) as usize);
        }
        let mut len: usize = 1;
        for &d in &dims {
            len = len
                .checked_mul(d)
                .ok_or_else(|| Error::config("site count overflows addressable size"))?;
        }
        // Keep well below isize::MAX bytes for complex state vectors.
        if len > (1usize << 33) {
            return Err(Error::config(format!("site count {len} exceeds the addressable cap")));
        }
        let mut strides = vec![1usize; dims.len()];
        for a in (0..dims.len().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * dims[a + 1];
        }
        Ok(Grid { lo, hi, dims, strides, len })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn hi(&self) -> &[i64] {
        &self.hi
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn contains(&self, site: &[i64]) -> bool {
        site.len() == self.lo.len()
            && site
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(c, (l, h))| l <= c && c <= h)
    }

    pub fn index_of(&self, site: &[i64]) -> Option<usize> {
        if !self.contains(site) {
            return None;
        }
        let mut idx = 0usize;
        for (a, c) in site.iter().enumerate() {
            idx += (c - self.lo[a]) as usize * self.strides[a];
        }
        Some(idx)
    }

    pub fn site_at(&self, mut index: usize) -> Vec<i64> {
        debug_assert!(index < self.len);
        let mut site = vec![0i64; self.dim()];
        for a in 0..self.dim() {
            site[a] = self.lo[a] + (index / self.strides[a]) as i64;
            index %= self.strides[a];
        }
        site
    }

    /// Coordinate of `index` along `axis` without materializing the site.
    pub fn coord(&self, index: usize, axis: usize) -> i64 {
        self.lo[axis] + ((index / self.strides[axis]) % self.dims[axis]) as i64
    }
}

/// Which boundary shell of a box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShellKind {
    /// Sites of the box at sup-distance exactly L from the center.
    Inner,
    /// Sites at sup-distance exactly L+1 (just outside the box).
    Outer,
    /// Union of inner and outer shells.
    Enlarged,
}

/// A boundary shell of a box.
#[derive(Debug, Clone)]
pub struct Shell<'a> {
    pub boxref: &'a LatticeBox,
    pub kind: ShellKind,
}

/// Enumerate the sites of a shell.
pub fn shell_sites(shell: &Shell) -> Vec<Vec<i64>> {
    match shell.kind {
        ShellKind::Inner => sphere_sites(shell.boxref.center(), shell.boxref.radius()),
        ShellKind::Outer => sphere_sites(shell.boxref.center(), shell.boxref.radius() + 1),
        ShellKind::Enlarged => {
            let mut s = sphere_sites(shell.boxref.center(), shell.boxref.radius());
            s.extend(sphere_sites(shell.boxref.center(), shell.boxref.radius() + 1));
            s
        }
    }
}

/// All sites at sup-norm distance exactly `r` from `center`.
pub fn sphere_sites(center: &[i64], r: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    for_each_sphere_site(center, r, |s| out.push(s.to_vec()));
    out
}

/// Visit every site at sup-norm distance exactly `r` from `center`
/// without allocating per site.
pub fn for_each_sphere_site<F: FnMut(&[i64])>(center: &[i64], r: i64, mut f: F) {
    assert!(r >= 0);
    let d = center.len();
    if r == 0 {
        f(center);
        return;
    }
    let mut site = vec![0i64; d];
    // One face pair per axis; earlier axes stay strictly inside ±r to
    // avoid duplicating edges and corners.
    for axis in 0..d {
        enumerate_face(center, r, axis, 0, &mut site, &mut f);
    }
}

fn enumerate_face<F: FnMut(&[i64])>(
    center: &[i64],
    r: i64,
    axis: usize,
    depth: usize,
    site: &mut Vec<i64>,
    f: &mut F,
) {
    let d = center.len();
    if depth == d {
        f(site);
        return;
    }
    if depth == axis {
        for s in [-r, r] {
            site[depth] = center[depth] + s;
            enumerate_face(center, r, axis, depth + 1, site, f);
        }
    } else {
        let bound = if depth < axis { r - 1 } else { r };
        for v in -bound..=bound {
            site[depth] = center[depth] + v;
            enumerate_face(center, r, axis, depth + 1, site, f);
        }
    }
}

/// Periodic trimmed sublattice: the union over the first d1 axes of the
/// hyperplane grids where that coordinate is divisible by its period,
/// crossed with the remaining free axes. The full-lattice sentinel models
/// the classical case where every site carries potential.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrimPattern {
    /// Every site belongs to the sublattice (classical Anderson model).
    Full { dim: usize },
    /// Union of period-ρ_i hyperplane grids in the first d1 axes.
    Trimmed { rho: Vec<i64>, free_dims: usize },
}

impl TrimPattern {
    pub fn full(dim: usize) -> Self {
        TrimPattern::Full { dim }
    }

    pub fn trimmed(rho: Vec<i64>, free_dims: usize) -> Result<Self> {
        if rho.iter().any(|&p| p < 2) {
            return Err(Error::config(format!("trim periods must be >= 2, got {rho:?}")));
        }
        Ok(TrimPattern::Trimmed { rho, free_dims })
    }

    pub fn dim(&self) -> usize {
        match self {
            TrimPattern::Full { dim } => *dim,
            TrimPattern::Trimmed { rho, free_dims } => rho.len() + free_dims,
        }
    }

    /// Number of trimmed axes (d1).
    pub fn trimmed_dims(&self) -> usize {
        match self {
            TrimPattern::Full { .. } => 0,
            TrimPattern::Trimmed { rho, .. } => rho.len(),
        }
    }

    pub fn rho(&self) -> &[i64] {
        match self {
            TrimPattern::Full { .. } => &[],
            TrimPattern::Trimmed { rho, .. } => rho,
        }
    }

    /// Asymptotic density of the sublattice, 1 - ∏(1 - 1/ρ_i).
    pub fn density_limit(&self) -> f64 {
        match self {
            TrimPattern::Full { .. } => 1.0,
            TrimPattern::Trimmed { rho, .. } => {
                1.0 - rho.iter().map(|&p| 1.0 - 1.0 / p as f64).product::<f64>()
            }
        }
    }
}

/// Membership predicate of the trimmed sublattice.
pub fn gamma_contains(pattern: &TrimPattern, site: &[i64]) -> bool {
    debug_assert_eq!(site.len(), pattern.dim());
    match pattern {
        TrimPattern::Full { .. } => true,
        TrimPattern::Trimmed { rho, .. } => {
            rho.iter().zip(site).any(|(&p, &c)| c.rem_euclid(p) == 0)
        }
    }
}
