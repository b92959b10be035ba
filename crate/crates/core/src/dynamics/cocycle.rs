//! Liouvillians and time-ordered cocycles.
//!
//! A cocycle `α_{u,v}(A) = U_{u,v} A U_{u,v}^*` generated by `s ↦ Φ_s` solves
//! `∂_v U_{u,v} = i U_{u,v} Φ_v` with `U_{u,u} = 1`. Substituting into
//! `∂_v α_{u,v}(A)` gives `α_{u,v}(i[Φ_v, A])`, the defining equation. For a
//! constant generator `U_{u,v} = exp(i(v − u)Φ)`, so `α_{u,v}` is the
//! Heisenberg evolution for time `v − u`.

use faer::{c64, Mat, MatRef};

use super::spectral::diagonalize_mat;
use crate::car::{max_abs, DenseOperator, MajoranaPolynomial, HERMITIAN_TOL};
use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::locality::Interaction;

/// `𝓛_Φ A = Σ_M [Φ(M), A]`.
pub fn liouvillian_apply(phi: &Interaction, a: &MajoranaPolynomial) -> Result<MajoranaPolynomial> {
    if phi.lattice() != a.lattice() {
        return Err(Error::LatticeMismatch {
            left: phi.lattice(),
            right: a.lattice(),
        });
    }
    let mut acc = MajoranaPolynomial::zero(a.lattice());
    for (_, term) in phi.terms() {
        acc = &acc + &term.commutator(a);
    }
    Ok(acc)
}

/// Dense form `[Φ_total, A]`.
pub fn liouvillian_apply_dense(phi: &Interaction, a: &DenseOperator) -> Result<DenseOperator> {
    if phi.lattice() != a.lattice() {
        return Err(Error::LatticeMismatch {
            left: phi.lattice(),
            right: a.lattice(),
        });
    }
    let total = phi.total();
    let m = total.dense_commutator(a.mat());
    // dense_commutator gives [A, Φ]
    Ok(DenseOperator::new(a.lattice(), m)?.scale_real(-1.0))
}

/// `exp(i h G)` for Hermitian `G`.
pub fn expm_i(g: MatRef<'_, c64>, h: f64, lattice: LatticeSpec) -> Result<Mat<c64>> {
    let spec = diagonalize_mat(lattice, g)?;
    Ok(spec.propagator(h))
}

/// Step rule for [`cocycle_propagate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepRule {
    /// Exactly this many midpoint steps.
    Fixed(usize),
    /// Double the step count, starting from `initial`, until two successive
    /// unitaries differ by less than `tol` in max-norm; at most `max_steps`.
    Adaptive { initial: usize, tol: f64, max_steps: usize },
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::Adaptive {
            initial: 4,
            tol: 1e-8,
            max_steps: 1 << 14,
        }
    }
}

/// Result of a propagation.
#[derive(Clone, Debug)]
pub struct Propagation {
    pub unitary: Mat<c64>,
    pub steps: usize,
    /// Max-norm change at the last doubling (0 for fixed steps).
    pub last_change: f64,
}

/// `U_{u,v}` by the midpoint ordered product `U ← U · exp(i h Φ_mid)`.
///
/// `generator(s)` returns the dense total generator at `s`; it must be
/// Hermitian.
pub fn cocycle_propagate<G>(lattice: LatticeSpec, generator: G, u: f64, v: f64, rule: StepRule) -> Result<Propagation>
where
    G: Fn(f64) -> Result<Mat<c64>>,
{
    match rule {
        StepRule::Fixed(steps) => Ok(Propagation {
            unitary: midpoint_product(lattice, &generator, u, v, steps.max(1))?,
            steps: steps.max(1),
            last_change: 0.0,
        }),
        StepRule::Adaptive {
            initial,
            tol,
            max_steps,
        } => {
            let mut steps = initial.max(1);
            let mut prev = midpoint_product(lattice, &generator, u, v, steps)?;
            let mut last_change = f64::INFINITY;
            loop {
                if steps * 2 > max_steps {
                    return Err(Error::StepCap { max_steps, last_change });
                }
                steps *= 2;
                let next = midpoint_product(lattice, &generator, u, v, steps)?;
                let change = max_abs((&next - &prev).as_ref());
                if change < tol {
                    return Ok(Propagation {
                        unitary: next,
                        steps,
                        last_change: change,
                    });
                }
                prev = next;
                last_change = change;
            }
        }
    }
}

fn midpoint_product<G>(lattice: LatticeSpec, generator: &G, u: f64, v: f64, steps: usize) -> Result<Mat<c64>>
where
    G: Fn(f64) -> Result<Mat<c64>>,
{
    let dim = lattice.hilbert_dim();
    let h = (v - u) / steps as f64;
    let mut acc = Mat::<c64>::identity(dim, dim);
    for k in 0..steps {
        let mid = u + (k as f64 + 0.5) * h;
        let g = generator(mid)?;
        check_hermitian(g.as_ref())?;
        if max_abs(g.as_ref()) == 0.0 {
            continue;
        }
        acc = &acc * expm_i(g.as_ref(), h, lattice)?;
    }
    Ok(acc)
}

fn check_hermitian(g: MatRef<'_, c64>) -> Result<()> {
    let dev = crate::car::hermitian_deviation(g);
    if dev > HERMITIAN_TOL * max_abs(g).max(1.0) * 1e3 {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(())
}

/// Accumulated unitaries `U_{s_0, s_j}` along a grid, each segment with a
/// fixed number of midpoint substeps.
pub fn cocycle_path<G>(lattice: LatticeSpec, generator: G, grid: &[f64], substeps: usize) -> Result<Vec<Mat<c64>>>
where
    G: Fn(f64) -> Result<Mat<c64>>,
{
    let dim = lattice.hilbert_dim();
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = Mat::<c64>::identity(dim, dim);
    out.push(acc.clone());
    for w in grid.windows(2) {
        let seg = midpoint_product(lattice, &generator, w[0], w[1], substeps.max(1))?;
        acc = &acc * seg;
        out.push(acc.clone());
    }
    Ok(out)
}

/// `max |U^* U − 1|`.
pub fn unitarity_defect(u: MatRef<'_, c64>) -> f64 {
    let n = u.nrows();
    max_abs((u.adjoint() * u - Mat::<c64>::identity(n, n)).as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::spectral::diagonalize;
    use crate::lattice::SiteSet;
    use crate::locality::terms;

    #[test]
    fn onsite_liouvillian_on_annihilator() {
        let l = LatticeSpec::chain(2).unwrap();
        let mu = 0.8;
        let phi = Interaction::from_terms(l, [(SiteSet::single(0), terms::onsite(l, 0, mu))]).unwrap();
        let a = MajoranaPolynomial::annihilation(l, 0);
        let la = liouvillian_apply(&phi, &a).unwrap();
        assert!(la.max_coeff_diff(&a.scale_real(-mu)) < 1e-15);
        let dense = liouvillian_apply_dense(&phi, &a.to_dense()).unwrap();
        assert!(dense.max_diff(&la.to_dense()) < 1e-14);
        let id = MajoranaPolynomial::identity(l);
        assert!(liouvillian_apply(&phi, &id).unwrap().is_zero());
    }

    #[test]
    fn constant_generator_matches_exponential() {
        let l = LatticeSpec::chain(2).unwrap();
        let phi = Interaction::from_terms(
            l,
            [
                (SiteSet::from_sites([0, 1]), terms::hopping(l, 0, 1, 0.7)),
                (SiteSet::single(1), terms::onsite(l, 1, 0.3)),
            ],
        )
        .unwrap();
        let h = phi.total_dense();
        let prop = cocycle_propagate(l, |_| Ok(h.mat().to_owned()), 0.2, 1.0, StepRule::Fixed(3)).unwrap();
        let spec = diagonalize(&h).unwrap();
        let exact = spec.propagator(0.8);
        assert!(max_abs((&prop.unitary - &exact).as_ref()) < 1e-12);
    }

    #[test]
    fn zero_generator_gives_identity() {
        let l = LatticeSpec::chain(2).unwrap();
        let prop = cocycle_propagate(l, |_| Ok(Mat::zeros(4, 4)), 0.0, 1.0, StepRule::default()).unwrap();
        assert_eq!(max_abs((&prop.unitary - Mat::<c64>::identity(4, 4)).as_ref()), 0.0);
    }
}
