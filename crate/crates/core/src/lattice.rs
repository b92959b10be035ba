//! Finite truncations of `Z^d` with `n` fermionic orbitals per site.
//!
//! Sites are numbered row-major; site `i` in a chain has coordinate `i`,
//! site `x + Lx * y` on a square patch has coordinates `(x, y)`. Each
//! orbital `(site, i)` carries the fermionic mode `k = site * n + i` and the
//! two Majorana modes `2k` and `2k + 1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard upper bound on `log2` of the Hilbert-space dimension.
pub const MAX_LOG_DIM: usize = 12;

/// A set of lattice sites, stored as a bitmask over site indices.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SiteSet(pub u64);

impl SiteSet {
    pub const EMPTY: SiteSet = SiteSet(0);

    pub fn single(site: usize) -> Self {
        SiteSet(1 << site)
    }

    pub fn from_sites<I: IntoIterator<Item = usize>>(sites: I) -> Self {
        SiteSet(sites.into_iter().fold(0, |acc, s| acc | (1u64 << s)))
    }

    pub fn contains(self, site: usize) -> bool {
        self.0 >> site & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: SiteSet) -> SiteSet {
        SiteSet(self.0 | other.0)
    }

    pub fn intersection(self, other: SiteSet) -> SiteSet {
        SiteSet(self.0 & other.0)
    }

    pub fn is_subset(self, other: SiteSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        BitIter(self.0)
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl fmt::Debug for SiteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A set of Majorana modes. As a monomial label it stands for the
/// ascending product `m_{p1} m_{p2} ... m_{pk}`.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeMask(pub u64);

impl ModeMask {
    pub const EMPTY: ModeMask = ModeMask(0);

    pub fn single(mode: usize) -> Self {
        ModeMask(1 << mode)
    }

    pub fn from_modes<I: IntoIterator<Item = usize>>(modes: I) -> Self {
        ModeMask(modes.into_iter().fold(0, |acc, m| acc | (1u64 << m)))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_even(self) -> bool {
        self.0.count_ones().is_multiple_of(2)
    }

    pub fn contains(self, mode: usize) -> bool {
        self.0 >> mode & 1 == 1
    }

    pub fn is_subset(self, other: ModeMask) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        BitIter(self.0)
    }
}

impl fmt::Debug for ModeMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Γ")?;
        f.debug_set().entries(self.iter()).finish()
    }
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }
}

/// Geometry and mode bookkeeping of a finite lattice.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "LatticeRepr", into = "LatticeRepr")]
pub struct LatticeSpec {
    dimension: usize,
    extent: [usize; 2],
    orbitals: usize,
    cap: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LatticeRepr {
    dimension: usize,
    extent: Vec<usize>,
    #[serde(default = "one")]
    orbitals: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_log_dim: Option<usize>,
}

fn one() -> usize {
    1
}

impl TryFrom<LatticeRepr> for LatticeSpec {
    type Error = Error;

    fn try_from(r: LatticeRepr) -> Result<Self> {
        let spec = LatticeSpec::new(r.dimension, &r.extent, r.orbitals)?;
        match r.max_log_dim {
            Some(cap) => spec.with_dimension_cap(cap),
            None => Ok(spec),
        }
    }
}

impl From<LatticeSpec> for LatticeRepr {
    fn from(l: LatticeSpec) -> Self {
        LatticeRepr {
            dimension: l.dimension,
            extent: l.extent[..l.dimension].to_vec(),
            orbitals: l.orbitals,
            max_log_dim: (l.cap != MAX_LOG_DIM).then_some(l.cap),
        }
    }
}

impl fmt::Debug for LatticeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for LatticeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.dimension {
            1 => write!(f, "chain({})", self.extent[0])?,
            _ => write!(f, "square({}x{})", self.extent[0], self.extent[1])?,
        }
        if self.orbitals != 1 {
            write!(f, "[n={}]", self.orbitals)?;
        }
        Ok(())
    }
}

impl LatticeSpec {
    pub fn new(dimension: usize, extent: &[usize], orbitals: usize) -> Result<Self> {
        if !(1..=2).contains(&dimension) {
            return Err(Error::InvalidLattice(format!(
                "dimension must be 1 or 2, got {dimension}"
            )));
        }
        if extent.len() != dimension {
            return Err(Error::InvalidLattice(format!(
                "expected {dimension} extents, got {}",
                extent.len()
            )));
        }
        if extent.contains(&0) || orbitals == 0 {
            return Err(Error::InvalidLattice("extents and orbitals must be positive".into()));
        }
        let mut ext = [1, 1];
        ext[..dimension].copy_from_slice(extent);
        let spec = LatticeSpec {
            dimension,
            extent: ext,
            orbitals,
            cap: MAX_LOG_DIM,
        };
        spec.check_cap()?;
        Ok(spec)
    }

    pub fn chain(sites: usize) -> Result<Self> {
        Self::new(1, &[sites], 1)
    }

    pub fn square(lx: usize, ly: usize) -> Result<Self> {
        Self::new(2, &[lx, ly], 1)
    }

    pub fn with_orbitals(self, orbitals: usize) -> Result<Self> {
        Self::new(self.dimension, &self.extent[..self.dimension], orbitals)?.with_dimension_cap(self.cap)
    }

    /// Lower the dimension cap below [`MAX_LOG_DIM`].
    pub fn with_dimension_cap(mut self, max_log_dim: usize) -> Result<Self> {
        if max_log_dim > MAX_LOG_DIM {
            return Err(Error::InvalidLattice(format!(
                "dimension cap 2^{max_log_dim} exceeds the hard cap 2^{MAX_LOG_DIM}"
            )));
        }
        self.cap = max_log_dim;
        self.check_cap()?;
        Ok(self)
    }

    fn check_cap(&self) -> Result<()> {
        if self.num_modes() > self.cap {
            return Err(Error::InvalidLattice(format!(
                "Hilbert space 2^{} exceeds the cap 2^{}",
                self.num_modes(),
                self.cap
            )));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn extent(&self) -> &[usize] {
        &self.extent[..self.dimension]
    }

    pub fn orbitals(&self) -> usize {
        self.orbitals
    }

    pub fn num_sites(&self) -> usize {
        self.extent[0] * self.extent[1]
    }

    /// Number of fermionic modes `n |Λ|`.
    pub fn num_modes(&self) -> usize {
        self.num_sites() * self.orbitals
    }

    /// Number of Majorana modes `2 n |Λ|`.
    pub fn num_majoranas(&self) -> usize {
        2 * self.num_modes()
    }

    /// Hilbert-space dimension `2^{n |Λ|}`.
    pub fn hilbert_dim(&self) -> usize {
        1 << self.num_modes()
    }

    pub fn all_sites(&self) -> SiteSet {
        SiteSet((1u64 << self.num_sites()) - 1)
    }

    pub fn all_modes(&self) -> ModeMask {
        ModeMask((1u64 << self.num_majoranas()) - 1)
    }

    pub fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.num_sites() {
            return Err(Error::SiteOutOfRange {
                site,
                sites: self.num_sites(),
            });
        }
        Ok(())
    }

    pub fn check_sites(&self, sites: SiteSet) -> Result<()> {
        if !sites.is_subset(self.all_sites()) {
            let bad = sites.iter().find(|&s| s >= self.num_sites()).unwrap_or(0);
            return self.check_site(bad);
        }
        Ok(())
    }

    pub fn coords(&self, site: usize) -> [i64; 2] {
        [(site % self.extent[0]) as i64, (site / self.extent[0]) as i64]
    }

    pub fn site_at(&self, coords: [i64; 2]) -> Option<usize> {
        let [x, y] = coords;
        if x < 0 || y < 0 || x as usize >= self.extent[0] || y as usize >= self.extent[1] {
            return None;
        }
        Some(x as usize + self.extent[0] * y as usize)
    }

    /// Maximum-norm distance between two sites.
    pub fn distance(&self, a: usize, b: usize) -> usize {
        let (ca, cb) = (self.coords(a), self.coords(b));
        (ca[0] - cb[0]).unsigned_abs().max((ca[1] - cb[1]).unsigned_abs()) as usize
    }

    /// Maximum-norm distance between two site sets (0 if they overlap).
    pub fn set_distance(&self, a: SiteSet, b: SiteSet) -> usize {
        a.iter()
            .flat_map(|x| b.iter().map(move |y| (x, y)))
            .map(|(x, y)| self.distance(x, y))
            .min()
            .unwrap_or(0)
    }

    /// Largest pairwise maximum-norm distance inside `sites`.
    pub fn diameter(&self, sites: SiteSet) -> usize {
        sites
            .iter()
            .flat_map(|x| sites.iter().map(move |y| self.distance(x, y)))
            .max()
            .unwrap_or(0)
    }

    /// The box `B_r(x) = { y : |x - y|_max <= r }` intersected with the lattice.
    pub fn ball(&self, center: usize, radius: usize) -> SiteSet {
        SiteSet::from_sites((0..self.num_sites()).filter(|&y| self.distance(center, y) <= radius))
    }

    /// Smallest radius `k` with `B_k(x)` covering the whole lattice.
    pub fn exhaustion_radius(&self, center: usize) -> usize {
        (0..self.num_sites())
            .map(|y| self.distance(center, y))
            .max()
            .unwrap_or(0)
    }

    /// Largest exhaustion radius over all sites.
    pub fn radius(&self) -> usize {
        self.diameter(self.all_sites())
    }

    /// Fermionic mode index of orbital `orbital` at `site`.
    pub fn mode(&self, site: usize, orbital: usize) -> usize {
        debug_assert!(orbital < self.orbitals);
        site * self.orbitals + orbital
    }

    /// Majorana index: `which = 0` is `a + a^*`, `which = 1` is `i(a - a^*)`.
    pub fn majorana(&self, site: usize, orbital: usize, which: usize) -> usize {
        2 * self.mode(site, orbital) + which
    }

    pub fn site_of_majorana(&self, p: usize) -> usize {
        p / (2 * self.orbitals)
    }

    /// All Majorana modes living on `sites`.
    pub fn modes_of(&self, sites: SiteSet) -> ModeMask {
        let block = (1u64 << (2 * self.orbitals)) - 1;
        ModeMask(sites.iter().fold(0, |acc, s| acc | block << (2 * self.orbitals * s)))
    }

    /// Sites touched by a Majorana mask.
    pub fn sites_of(&self, modes: ModeMask) -> SiteSet {
        SiteSet::from_sites(modes.iter().map(|p| self.site_of_majorana(p)))
    }

    /// A chain (or square patch) holding `sites` sites of this lattice, used
    /// to evaluate norms of locally supported operators in a smaller space.
    pub fn compressed(&self, sites: usize) -> LatticeSpec {
        LatticeSpec {
            dimension: 1,
            extent: [sites.max(1), 1],
            orbitals: self.orbitals,
            cap: MAX_LOG_DIM,
        }
    }
}
