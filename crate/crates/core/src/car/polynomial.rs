//! Sparse Majorana expansions `A = Σ_S c_S Γ_S`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use faer::{c64, Mat, MatRef};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dense::{spectral_norm, DenseOperator};
use super::monomial::{adjoint_sign, mask_from_pauli, monomial_pauli, monomial_product, I_POWERS};
use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, ModeMask, SiteSet};

/// Coefficients below this modulus are dropped.
pub const PRUNE: f64 = 1e-15;

const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
const ONE: c64 = c64 { re: 1.0, im: 0.0 };

#[derive(Clone, PartialEq)]
pub struct MajoranaPolynomial {
    lattice: LatticeSpec,
    terms: BTreeMap<ModeMask, c64>,
}

impl fmt::Debug for MajoranaPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MajoranaPolynomial[{}]", self.lattice)?;
        f.debug_map()
            .entries(self.terms.iter().map(|(m, c)| (m, (c.re, c.im))))
            .finish()
    }
}

impl MajoranaPolynomial {
    pub fn zero(lattice: LatticeSpec) -> Self {
        MajoranaPolynomial {
            lattice,
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(lattice: LatticeSpec, c: c64) -> Self {
        let mut p = Self::zero(lattice);
        p.add_term(ModeMask::EMPTY, c);
        p
    }

    pub fn identity(lattice: LatticeSpec) -> Self {
        Self::scalar(lattice, ONE)
    }

    /// `c · Γ_S`.
    pub fn monomial(lattice: LatticeSpec, mask: ModeMask, c: c64) -> Result<Self> {
        if !mask.is_subset(lattice.all_modes()) {
            return Err(Error::InvalidLattice(format!(
                "monomial {mask:?} exceeds the {} Majorana modes of {lattice}",
                lattice.num_majoranas()
            )));
        }
        let mut p = Self::zero(lattice);
        p.add_term(mask, c);
        Ok(p)
    }

    fn checked_mode(lattice: LatticeSpec, mode: usize) -> usize {
        assert!(mode < lattice.num_modes(), "mode {mode} out of range");
        mode
    }

    /// The Majorana operator `m_p`.
    pub fn majorana(lattice: LatticeSpec, p: usize) -> Self {
        assert!(p < lattice.num_majoranas(), "Majorana index {p} out of range");
        let mut out = Self::zero(lattice);
        out.add_term(ModeMask::single(p), ONE);
        out
    }

    /// `a_k^* = (m_{2k} + i m_{2k+1}) / 2`.
    pub fn creation(lattice: LatticeSpec, mode: usize) -> Self {
        let k = Self::checked_mode(lattice, mode);
        let mut out = Self::zero(lattice);
        out.add_term(ModeMask::single(2 * k), c64::new(0.5, 0.0));
        out.add_term(ModeMask::single(2 * k + 1), c64::new(0.0, 0.5));
        out
    }

    /// `a_k = (m_{2k} - i m_{2k+1}) / 2`.
    pub fn annihilation(lattice: LatticeSpec, mode: usize) -> Self {
        let k = Self::checked_mode(lattice, mode);
        let mut out = Self::zero(lattice);
        out.add_term(ModeMask::single(2 * k), c64::new(0.5, 0.0));
        out.add_term(ModeMask::single(2 * k + 1), c64::new(0.0, -0.5));
        out
    }

    /// `n_k = a_k^* a_k = (1 - i m_{2k} m_{2k+1}) / 2`.
    pub fn number(lattice: LatticeSpec, mode: usize) -> Self {
        let k = Self::checked_mode(lattice, mode);
        let mut out = Self::identity(lattice).scale_real(0.5);
        out.add_term(ModeMask::from_modes([2 * k, 2 * k + 1]), c64::new(0.0, -0.5));
        out
    }

    /// `a_j^* a_k + a_k^* a_j`.
    pub fn hopping(lattice: LatticeSpec, j: usize, k: usize) -> Self {
        let t = &Self::creation(lattice, j) * &Self::annihilation(lattice, k);
        &t + &t.adjoint()
    }

    /// `a_j a_k + a_k^* a_j^*`.
    pub fn pairing(lattice: LatticeSpec, j: usize, k: usize) -> Self {
        let t = &Self::annihilation(lattice, j) * &Self::annihilation(lattice, k);
        &t + &t.adjoint()
    }

    /// A random polynomial with `count` monomials drawn from subsets of
    /// `modes`, coefficients uniform in the unit square.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        lattice: LatticeSpec,
        modes: ModeMask,
        count: usize,
        even: bool,
    ) -> Self {
        let available: Vec<usize> = modes.iter().collect();
        let mut out = Self::zero(lattice);
        if available.is_empty() {
            if count > 0 {
                out.add_term(ModeMask::EMPTY, c64::new(rng.random_range(-1.0..1.0), 0.0));
            }
            return out;
        }
        for _ in 0..count {
            let mut mask = 0u64;
            for &p in &available {
                if rng.random_bool(0.5) {
                    mask |= 1 << p;
                }
            }
            if even && mask.count_ones() % 2 == 1 {
                mask ^= 1 << available[rng.random_range(0..available.len())];
            }
            let c = c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            out.add_term(ModeMask(mask), c);
        }
        out
    }

    pub fn lattice(&self) -> LatticeSpec {
        self.lattice
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (ModeMask, c64)> + '_ {
        self.terms.iter().map(|(&m, &c)| (m, c))
    }

    pub fn coeff(&self, mask: ModeMask) -> c64 {
        self.terms.get(&mask).copied().unwrap_or(ZERO)
    }

    /// Accumulate `c · Γ_S`, pruning the entry if it cancels.
    pub fn add_term(&mut self, mask: ModeMask, c: c64) {
        debug_assert!(mask.is_subset(self.lattice.all_modes()));
        let entry = self.terms.entry(mask).or_insert(ZERO);
        *entry += c;
        if entry.norm() < PRUNE {
            self.terms.remove(&mask);
        }
    }

    fn from_map(lattice: LatticeSpec, mut terms: BTreeMap<ModeMask, c64>) -> Self {
        terms.retain(|_, c| c.norm() >= PRUNE);
        MajoranaPolynomial { lattice, terms }
    }

    fn map_coeffs(&self, f: impl Fn(ModeMask, c64) -> c64) -> Self {
        Self::from_map(self.lattice, self.terms.iter().map(|(&m, &c)| (m, f(m, c))).collect())
    }

    pub fn check_same_lattice(&self, other: &Self) -> Result<()> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch {
                left: self.lattice,
                right: other.lattice,
            });
        }
        Ok(())
    }

    pub fn scale(&self, c: c64) -> Self {
        self.map_coeffs(|_, a| a * c)
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.map_coeffs(|_, a| a * c)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_lattice(other)?;
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m, c);
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_same_lattice(other)?;
        let mut acc: BTreeMap<ModeMask, c64> = BTreeMap::new();
        for (&s, &a) in &self.terms {
            for (&t, &b) in &other.terms {
                let (phase, u) = monomial_product(s, t);
                *acc.entry(u).or_insert(ZERO) += phase * a * b;
            }
        }
        Ok(Self::from_map(self.lattice, acc))
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn adjoint(&self) -> Self {
        self.map_coeffs(|m, c| c.conj() * adjoint_sign(m))
    }

    /// Largest coefficient deviation between `A` and `A^*`.
    pub fn self_adjoint_deviation(&self) -> f64 {
        self.terms
            .iter()
            .map(|(&m, &c)| (c - c.conj() * adjoint_sign(m)).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.self_adjoint_deviation() <= tol
    }

    pub fn is_even(&self) -> bool {
        self.terms.keys().all(|m| m.is_even())
    }

    /// `(A_+, A_-)` with `A_± = (A ± g_π(A)) / 2`.
    pub fn parity_projections(&self) -> (Self, Self) {
        let (even, odd): (BTreeMap<_, _>, BTreeMap<_, _>) = self.terms.iter().partition(|(m, _)| m.is_even());
        (Self::from_map(self.lattice, even), Self::from_map(self.lattice, odd))
    }

    /// `ω^tr(A)`, the coefficient of the identity.
    pub fn tracial_state(&self) -> c64 {
        self.coeff(ModeMask::EMPTY)
    }

    /// Majorana modes appearing in some monomial.
    pub fn support_modes(&self) -> ModeMask {
        ModeMask(self.terms.keys().fold(0, |acc, m| acc | m.0))
    }

    /// Sites touched by some monomial.
    pub fn support(&self) -> SiteSet {
        self.lattice.sites_of(self.support_modes())
    }

    /// `E_M(A)`: drop every monomial not contained in the modes of `sites`.
    pub fn conditional_expectation(&self, sites: SiteSet) -> Result<Self> {
        self.lattice.check_sites(sites)?;
        let allowed = self.lattice.modes_of(sites);
        Ok(Self::from_map(
            self.lattice,
            self.terms
                .iter()
                .filter(|(m, _)| m.is_subset(allowed))
                .map(|(&m, &c)| (m, c))
                .collect(),
        ))
    }

    /// `g_φ(A)` by rotating every Majorana pair:
    /// `m_{2k} -> cos φ m_{2k} - sin φ m_{2k+1}`,
    /// `m_{2k+1} -> sin φ m_{2k} + cos φ m_{2k+1}`.
    ///
    /// A pair `m_{2k} m_{2k+1}` is invariant, and since each pair occupies
    /// adjacent positions in the ascending order no reordering signs arise.
    pub fn gauge_transform(&self, phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        let mut acc: BTreeMap<ModeMask, c64> = BTreeMap::new();
        for (&mask, &coeff) in &self.terms {
            let mut partial: Vec<(u64, c64)> = vec![(mask.0, coeff)];
            let mut rest = mask.0;
            while rest != 0 {
                let p = rest.trailing_zeros() as u64;
                let pair = 0b11u64 << (p & !1);
                rest &= !pair;
                if mask.0 & pair == pair {
                    continue;
                }
                let other = if p.is_multiple_of(2) { -s } else { s };
                partial = partial
                    .into_iter()
                    .flat_map(|(m, v)| [(m, v * c), (m ^ pair, v * other)])
                    .collect();
            }
            for (m, v) in partial {
                *acc.entry(ModeMask(m)).or_insert(ZERO) += v;
            }
        }
        Self::from_map(self.lattice, acc)
    }

    /// Jordan–Wigner matrix image.
    pub fn to_dense(&self) -> DenseOperator {
        DenseOperator::from_parts(self.lattice, self.to_mat())
    }

    pub(crate) fn to_mat(&self) -> Mat<c64> {
        let dim = self.lattice.hilbert_dim();
        let mut m = Mat::<c64>::zeros(dim, dim);
        for (&mask, &coeff) in &self.terms {
            let pauli = monomial_pauli(mask);
            for col in 0..dim {
                let (row, v) = pauli.apply(col);
                m[(row, col)] += coeff * v;
            }
        }
        m
    }

    /// `A · M` without forming the matrix of `A`; `O(terms · dim²)`.
    pub fn mul_dense_left(&self, m: MatRef<'_, c64>) -> Mat<c64> {
        let dim = m.nrows();
        let mut out = Mat::<c64>::zeros(dim, m.ncols());
        for (&mask, &coeff) in &self.terms {
            let pauli = monomial_pauli(mask);
            let map: Vec<(usize, c64)> = (0..dim)
                .map(|b| {
                    let (row, v) = pauli.apply(b);
                    (row, v * coeff)
                })
                .collect();
            for c in 0..m.ncols() {
                for (b, &(row, v)) in map.iter().enumerate() {
                    out[(row, c)] += v * m[(b, c)];
                }
            }
        }
        out
    }

    /// `M · A` without forming the matrix of `A`.
    pub fn mul_dense_right(&self, m: MatRef<'_, c64>) -> Mat<c64> {
        let dim = m.ncols();
        let mut out = Mat::<c64>::zeros(m.nrows(), dim);
        for (&mask, &coeff) in &self.terms {
            let pauli = monomial_pauli(mask);
            for b in 0..dim {
                let (col, v) = pauli.apply(b);
                let v = v * coeff;
                for r in 0..m.nrows() {
                    out[(r, b)] += m[(r, col)] * v;
                }
            }
        }
        out
    }

    /// `[M, A]` for a dense `M`.
    pub fn dense_commutator(&self, m: MatRef<'_, c64>) -> Mat<c64> {
        self.mul_dense_right(m) - self.mul_dense_left(m)
    }

    /// Coefficients from a matrix by `c_S = ω^tr(Γ_S^* M)`.
    ///
    /// All `4^L` traces are computed at once: for each flip pattern `x` the
    /// vector `b -> M[b ^ x, b]` is Walsh–Hadamard transformed over `z`.
    pub fn from_dense(op: &DenseOperator) -> Result<Self> {
        let lattice = op.lattice();
        let dim = lattice.hilbert_dim();
        if op.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: op.dim(),
            });
        }
        let modes = lattice.num_modes();
        let m = op.mat();
        let mut out = Self::zero(lattice);
        let mut v = vec![ZERO; dim];
        for x in 0..dim {
            for (b, slot) in v.iter_mut().enumerate() {
                *slot = m[(b ^ x, b)];
            }
            walsh_hadamard(&mut v);
            for (z, &alpha) in v.iter().enumerate() {
                let alpha = alpha / dim as f64;
                if alpha.norm() < PRUNE {
                    continue;
                }
                let mask = mask_from_pauli(x as u64, z as u64, modes);
                let q = monomial_pauli(mask).phase as usize;
                // X^x Z^z = i^{-q} Γ_S
                out.add_term(mask, alpha * I_POWERS[(4 - q) % 4]);
            }
        }
        Ok(out)
    }

    /// Operator norm, evaluated on the smallest sub-lattice carrying the
    /// support (an isomorphic copy of `A_M`).
    pub fn norm(&self) -> f64 {
        if self.terms.is_empty() {
            return 0.0;
        }
        if self.terms.len() == 1 {
            return self.terms.values().next().unwrap().norm();
        }
        let (small, _) = self.compress();
        spectral_norm(small.to_mat().as_ref())
    }

    /// Relabel onto a chain holding only the support sites, preserving the
    /// relative order of modes.
    pub fn compress(&self) -> (Self, Vec<usize>) {
        let sites = self.support().to_vec();
        let per_site = 2 * self.lattice.orbitals();
        let target = self.lattice.compressed(sites.len());
        let mut rank = vec![usize::MAX; self.lattice.num_sites()];
        for (r, &s) in sites.iter().enumerate() {
            rank[s] = r;
        }
        let terms = self
            .terms
            .iter()
            .map(|(&m, &c)| {
                let relabeled = m.iter().fold(0u64, |acc, p| {
                    let site = p / per_site;
                    acc | 1 << (rank[site] * per_site + p % per_site)
                });
                (ModeMask(relabeled), c)
            })
            .collect();
        (Self::from_map(target, terms), sites)
    }

    /// Coefficient-wise maximum distance.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        let mut keys: Vec<ModeMask> = self.terms.keys().copied().collect();
        keys.extend(other.terms.keys().copied());
        keys.into_iter()
            .map(|m| (self.coeff(m) - other.coeff(m)).norm())
            .fold(0.0, f64::max)
    }

    /// `Σ |c_S|`, an upper bound for the operator norm.
    pub fn coeff_l1(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// In-place unnormalized Walsh–Hadamard transform.
fn walsh_hadamard(v: &mut [c64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for i in (0..n).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (v[j], v[j + h]);
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

impl<'a> Add<&'a MajoranaPolynomial> for &'a MajoranaPolynomial {
    type Output = MajoranaPolynomial;

    /// Panics on lattice mismatch; see [`MajoranaPolynomial::try_add`].
    fn add(self, rhs: &'a MajoranaPolynomial) -> MajoranaPolynomial {
        self.try_add(rhs).expect("lattice mismatch")
    }
}

impl<'a> Sub<&'a MajoranaPolynomial> for &'a MajoranaPolynomial {
    type Output = MajoranaPolynomial;

    fn sub(self, rhs: &'a MajoranaPolynomial) -> MajoranaPolynomial {
        self.try_add(&-rhs).expect("lattice mismatch")
    }
}

impl<'a> Mul<&'a MajoranaPolynomial> for &'a MajoranaPolynomial {
    type Output = MajoranaPolynomial;

    /// Panics on lattice mismatch; see [`MajoranaPolynomial::try_mul`].
    fn mul(self, rhs: &'a MajoranaPolynomial) -> MajoranaPolynomial {
        self.try_mul(rhs).expect("lattice mismatch")
    }
}

impl Neg for &MajoranaPolynomial {
    type Output = MajoranaPolynomial;

    fn neg(self) -> MajoranaPolynomial {
        self.scale_real(-1.0)
    }
}

/// Bilinear product; errors on lattice mismatch.
pub fn poly_mul(a: &MajoranaPolynomial, b: &MajoranaPolynomial) -> Result<MajoranaPolynomial> {
    a.try_mul(b)
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    mask: String,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    lattice: LatticeSpec,
    terms: Vec<TermRepr>,
}

impl Serialize for MajoranaPolynomial {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        PolyRepr {
            lattice: self.lattice,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| TermRepr {
                    mask: format!("{:#x}", m.0),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for MajoranaPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = PolyRepr::deserialize(de)?;
        let mut out = MajoranaPolynomial::zero(repr.lattice);
        for t in repr.terms {
            let digits = t.mask.trim_start_matches("0x").trim_start_matches("0X");
            let mask =
                u64::from_str_radix(digits, 16).map_err(|e| D::Error::custom(format!("bad mask {:?}: {e}", t.mask)))?;
            if !ModeMask(mask).is_subset(repr.lattice.all_modes()) {
                return Err(D::Error::custom(format!("mask {} exceeds lattice", t.mask)));
            }
            out.add_term(ModeMask(mask), c64::new(t.re, t.im));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chain(n: usize) -> LatticeSpec {
        LatticeSpec::chain(n).unwrap()
    }

    #[test]
    fn number_operator_is_projector() {
        let l = chain(2);
        let n0 = MajoranaPolynomial::number(l, 0);
        let prod = &MajoranaPolynomial::creation(l, 0) * &MajoranaPolynomial::annihilation(l, 0);
        assert!(prod.max_coeff_diff(&n0) < 1e-15);
        assert!((&n0 * &n0).max_coeff_diff(&n0) < 1e-15);
        assert_eq!(n0.tracial_state(), c64::new(0.5, 0.0));
        assert!(n0.to_dense().max_diff(&DenseOperator::number(l, 0)) < 1e-15);
    }

    #[test]
    fn car_relations_in_dense_form() {
        let l = chain(3);
        for j in 0..3 {
            for k in 0..3 {
                let a = MajoranaPolynomial::annihilation(l, j);
                let b = MajoranaPolynomial::creation(l, k);
                let anti = &(&a * &b) + &(&b * &a);
                let expect = if j == k {
                    MajoranaPolynomial::identity(l)
                } else {
                    MajoranaPolynomial::zero(l)
                };
                assert!(anti.max_coeff_diff(&expect) < 1e-15);
                let dense = a.to_dense().mul(&b.to_dense()).add(&b.to_dense().mul(&a.to_dense()));
                assert!(dense.max_diff(&expect.to_dense()) < 1e-15);
            }
        }
    }

    #[test]
    fn dense_round_trip() {
        let l = chain(3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = MajoranaPolynomial::random(&mut rng, l, l.all_modes(), 20, false);
        let back = MajoranaPolynomial::from_dense(&p.to_dense()).unwrap();
        assert!(back.max_coeff_diff(&p) < 1e-13);
    }

    #[test]
    fn gauge_pi_flips_creation() {
        let l = chain(2);
        let a = MajoranaPolynomial::creation(l, 1);
        assert!(a.gauge_transform(std::f64::consts::PI).max_coeff_diff(&-&a) < 1e-15);
        let phi = 0.37;
        let rotated = a.gauge_transform(phi);
        assert!(rotated.max_coeff_diff(&a.scale(c64::cis(phi))) < 1e-15);
    }

    #[test]
    fn compressed_norm_matches_full() {
        let l = chain(4);
        let hop = MajoranaPolynomial::hopping(l, 0, 3);
        assert!((hop.norm() - 1.0).abs() < 1e-13);
        assert!((hop.to_dense().norm() - 1.0).abs() < 1e-13);
        let (small, sites) = hop.compress();
        assert_eq!(sites, vec![0, 3]);
        assert_eq!(small.lattice().num_sites(), 2);
    }

    #[test]
    fn json_round_trip() {
        let l = chain(2);
        let p = MajoranaPolynomial::hopping(l, 0, 1);
        let s = p.to_json().unwrap();
        assert!(s.contains("\"mask\":\"0x"));
        assert_eq!(MajoranaPolynomial::from_json(&s).unwrap(), p);
    }
}
