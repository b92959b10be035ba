//! Interactions `Φ: M ↦ Φ(M)` on a finite lattice.

use std::collections::BTreeMap;

use faer::c64;
use serde::{Deserialize, Serialize};

use super::center::center;
use crate::car::{DenseOperator, MajoranaPolynomial};
use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, SiteSet};

/// Self-adjointness tolerance for local terms (coefficient-wise).
pub const TERM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Interaction {
    lattice: LatticeSpec,
    terms: BTreeMap<SiteSet, MajoranaPolynomial>,
}

impl Interaction {
    pub fn new(lattice: LatticeSpec) -> Self {
        Interaction {
            lattice,
            terms: BTreeMap::new(),
        }
    }

    /// Build from `(M, Φ(M))` pairs, validating every term.
    pub fn from_terms<I>(lattice: LatticeSpec, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (SiteSet, MajoranaPolynomial)>,
    {
        let mut out = Self::new(lattice);
        for (m, op) in terms {
            out.add(m, op)?;
        }
        Ok(out)
    }

    /// Add `op` to `Φ(M)`. The term must be even, self-adjoint and
    /// supported in `M`.
    pub fn add(&mut self, sites: SiteSet, op: MajoranaPolynomial) -> Result<()> {
        let fail = |reason: String| Error::InvalidInteraction {
            sites: sites.to_vec(),
            reason,
        };
        if op.lattice() != self.lattice {
            return Err(Error::LatticeMismatch {
                left: self.lattice,
                right: op.lattice(),
            });
        }
        if sites.is_empty() {
            return Err(fail("Φ(∅) must vanish".into()));
        }
        self.lattice.check_sites(sites)?;
        if op.conditional_expectation(sites)? != op {
            return Err(fail(format!("term reaches sites {:?}", op.support())));
        }
        if !op.is_even() {
            return Err(fail("term is not parity-even".into()));
        }
        let dev = op.self_adjoint_deviation();
        if dev > TERM_TOL {
            return Err(fail(format!("term is not self-adjoint (deviation {dev:.3e})")));
        }
        self.insert_unchecked(sites, op);
        Ok(())
    }

    pub(crate) fn insert_unchecked(&mut self, sites: SiteSet, op: MajoranaPolynomial) {
        let merged = match self.terms.remove(&sites) {
            Some(old) => &old + &op,
            None => op,
        };
        if !merged.is_zero() {
            self.terms.insert(sites, merged);
        }
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

    pub fn terms(&self) -> impl Iterator<Item = (SiteSet, &MajoranaPolynomial)> {
        self.terms.iter().map(|(&m, p)| (m, p))
    }

    pub fn term(&self, sites: SiteSet) -> Option<&MajoranaPolynomial> {
        self.terms.get(&sites)
    }

    pub fn supports(&self) -> Vec<SiteSet> {
        self.terms.keys().copied().collect()
    }

    /// `Σ_M Φ(M)`.
    pub fn total(&self) -> MajoranaPolynomial {
        let mut acc = MajoranaPolynomial::zero(self.lattice);
        for p in self.terms.values() {
            for (m, c) in p.terms() {
                acc.add_term(m, c);
            }
        }
        acc
    }

    pub fn total_dense(&self) -> DenseOperator {
        self.total().to_dense()
    }

    fn combine(&self, other: &Self, sign: f64) -> Result<Self> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch {
                left: self.lattice,
                right: other.lattice,
            });
        }
        let mut out = self.clone();
        for (&m, p) in &other.terms {
            out.insert_unchecked(m, p.scale_real(sign));
        }
        Ok(out)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.combine(other, 1.0)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, -1.0)
    }

    /// `c Φ` for real `c` (complex scalars would break self-adjointness).
    pub fn scale(&self, c: f64) -> Self {
        let mut out = Self::new(self.lattice);
        for (&m, p) in &self.terms {
            out.insert_unchecked(m, p.scale_real(c));
        }
        out
    }

    /// `‖Φ‖_ν = sup_x Σ_{M ∋ x} (1 + diam M)^ν ‖Φ(M)‖`.
    pub fn norm(&self, nu: f64) -> f64 {
        let weighted: Vec<(SiteSet, f64)> = self
            .terms
            .iter()
            .map(|(&m, p)| {
                let diam = self.lattice.diameter(m) as f64;
                (m, (1.0 + diam).powf(nu) * p.norm())
            })
            .collect();
        (0..self.lattice.num_sites())
            .map(|x| {
                weighted
                    .iter()
                    .filter(|(m, _)| m.contains(x))
                    .map(|(_, w)| w)
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// `Φ_x = Σ_{C(M) = x} Φ(M)`, indexed by site.
    pub fn group_by_center(&self) -> Vec<MajoranaPolynomial> {
        let mut out = vec![MajoranaPolynomial::zero(self.lattice); self.lattice.num_sites()];
        for (&m, p) in &self.terms {
            let x = center(&self.lattice, m).expect("terms have nonempty support");
            out[x] = &out[x] + p;
        }
        out
    }

    /// `Φ_k(M) = E_{B_{⌊k/2⌋}(C(M))} Φ(M)` for terms centered in
    /// `B_{⌊k/2⌋}(z)`, all other terms dropped. Keys are kept.
    pub fn restrict(&self, z: usize, k: usize) -> Result<Self> {
        self.lattice.check_site(z)?;
        let half = k / 2;
        let mut out = Self::new(self.lattice);
        for (&m, p) in &self.terms {
            let x = center(&self.lattice, m)?;
            if self.lattice.distance(x, z) > half {
                continue;
            }
            let cut = p.conditional_expectation(self.lattice.ball(x, half))?;
            out.insert_unchecked(m, cut);
        }
        Ok(out)
    }

    /// Terms supported in `region`.
    pub fn restrict_to_region(&self, region: SiteSet) -> Self {
        let mut out = Self::new(self.lattice);
        for (&m, p) in &self.terms {
            if m.is_subset(region) {
                out.insert_unchecked(m, p.clone());
            }
        }
        out
    }

    /// Largest term-wise operator-norm distance, over the union of supports.
    pub fn max_term_diff(&self, other: &Self) -> f64 {
        let mut keys: Vec<SiteSet> = self.terms.keys().copied().collect();
        keys.extend(other.terms.keys().copied());
        keys.sort();
        keys.dedup();
        let zero = MajoranaPolynomial::zero(self.lattice);
        keys.into_iter()
            .map(|m| {
                let a = self.terms.get(&m).unwrap_or(&zero);
                let b = other.terms.get(&m).unwrap_or(&zero);
                (a - b).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    sites: Vec<usize>,
    operator: MajoranaPolynomial,
}

#[derive(Serialize, Deserialize)]
struct InteractionRepr {
    lattice: LatticeSpec,
    terms: Vec<TermRepr>,
}

impl Serialize for Interaction {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        InteractionRepr {
            lattice: self.lattice,
            terms: self
                .terms
                .iter()
                .map(|(m, p)| TermRepr {
                    sites: m.to_vec(),
                    operator: p.clone(),
                })
                .collect(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Interaction {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = InteractionRepr::deserialize(de)?;
        let terms = repr
            .terms
            .into_iter()
            .map(|t| (SiteSet::from_sites(t.sites), t.operator));
        Interaction::from_terms(repr.lattice, terms).map_err(D::Error::custom)
    }
}

/// Convenience constructors for common local terms.
pub mod terms {
    use super::*;

    /// `μ n_x` summed over orbitals.
    pub fn onsite(lattice: LatticeSpec, site: usize, mu: f64) -> MajoranaPolynomial {
        let mut acc = MajoranaPolynomial::zero(lattice);
        for i in 0..lattice.orbitals() {
            acc = &acc + &MajoranaPolynomial::number(lattice, lattice.mode(site, i)).scale_real(mu);
        }
        acc
    }

    /// `-J (a_x^* a_y + h.c.)` on orbital 0.
    pub fn hopping(lattice: LatticeSpec, x: usize, y: usize, j: f64) -> MajoranaPolynomial {
        MajoranaPolynomial::hopping(lattice, lattice.mode(x, 0), lattice.mode(y, 0)).scale_real(-j)
    }

    /// `Δ (a_x a_y + h.c.)` on orbital 0.
    pub fn pairing(lattice: LatticeSpec, x: usize, y: usize, delta: f64) -> MajoranaPolynomial {
        MajoranaPolynomial::pairing(lattice, lattice.mode(x, 0), lattice.mode(y, 0)).scale_real(delta)
    }

    /// `c · identity`, useful for energy shifts inside a term.
    pub fn constant(lattice: LatticeSpec, c: f64) -> MajoranaPolynomial {
        MajoranaPolynomial::scalar(lattice, c64::new(c, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nn_chain(l: LatticeSpec) -> Interaction {
        let n = l.num_sites();
        Interaction::from_terms(
            l,
            (0..n - 1).map(|x| (SiteSet::from_sites([x, x + 1]), terms::hopping(l, x, x + 1, 1.0))),
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_terms() {
        let l = LatticeSpec::chain(3).unwrap();
        let odd = MajoranaPolynomial::majorana(l, 0);
        assert!(Interaction::new(l).add(SiteSet::single(0), odd).is_err());
        let hop = terms::hopping(l, 0, 2, 1.0);
        assert!(Interaction::new(l)
            .add(SiteSet::from_sites([0, 1]), hop.clone())
            .is_err());
        assert!(Interaction::new(l).add(SiteSet::EMPTY, hop.clone()).is_err());
        let skew = hop.scale(c64::new(0.0, 1.0));
        assert!(Interaction::new(l).add(SiteSet::from_sites([0, 2]), skew).is_err());
    }

    #[test]
    fn norm_of_nearest_neighbour_chain() {
        let l = LatticeSpec::chain(5).unwrap();
        let phi = nn_chain(l);
        for nu in 0..4 {
            let expect = 2.0 * 2f64.powi(nu);
            assert!((phi.norm(nu as f64) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn grouping_and_restriction() {
        let l = LatticeSpec::chain(6).unwrap();
        let phi = nn_chain(l);
        let groups = phi.group_by_center();
        assert!(groups[0].is_zero());
        for (x, g) in groups.iter().enumerate().skip(1) {
            assert_eq!(*g, terms::hopping(l, x - 1, x, 1.0));
        }
        // k = 2, z = 3: bonds centered at 2, 3, 4, each cut to B_1(center)
        let r = phi.restrict(3, 2).unwrap();
        assert_eq!(
            r.supports(),
            vec![
                SiteSet::from_sites([1, 2]),
                SiteSet::from_sites([2, 3]),
                SiteSet::from_sites([3, 4])
            ]
        );
        assert_eq!(phi.restrict(3, 12).unwrap(), phi);
        // k = 0: a pure hopping bond has no part inside a single site
        assert!(phi.restrict(3, 0).unwrap().is_empty());
        let dressed = Interaction::from_terms(
            l,
            (0..5).map(|x| {
                let bond = &terms::hopping(l, x, x + 1, 1.0) + &terms::onsite(l, x + 1, 0.5);
                (SiteSet::from_sites([x, x + 1]), bond)
            }),
        )
        .unwrap();
        let r0 = dressed.restrict(3, 0).unwrap();
        assert_eq!(r0.supports(), vec![SiteSet::from_sites([2, 3])]);
        let kept = r0.term(SiteSet::from_sites([2, 3])).unwrap();
        assert!(kept.max_coeff_diff(&terms::onsite(l, 3, 0.5)) < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let l = LatticeSpec::chain(3).unwrap();
        let phi = nn_chain(l);
        let back = Interaction::from_json(&phi.to_json().unwrap()).unwrap();
        assert_eq!(back, phi);
    }
}
