//! Interaction-level inverse Liouvillian.
//!
//! `𝓘(Φ)_{x,*} = −i ∫ W(t) ∫_0^t e^{iu𝓛_H} 𝓛_Φ H_x du dt`. Exchanging the
//! two integrals turns the nested form into one integral against the even
//! kernel `𝒲(|u|) = ∫_{|u|}^∞ W`:
//! `𝓘(Φ)_{x,*} = −i ∫ 𝒲(|u|) e^{iu𝓛_H} [Φ, H_x] du`.
//! The shells `𝓘(Φ)(B_k(x)) = (E_{B_k(x)} − E_{B_{k−1}(x)}) 𝓘(Φ)_{x,*}`
//! telescope back to the bulk operator.

use faer::{c64, Mat, MatRef};
use serde::Serialize;

use crate::car::{max_abs, DenseOperator, MajoranaPolynomial};
use crate::dynamics::{diagonalize, SpectralData};
use crate::error::{Error, Result};
use crate::filter::{transfer_matrix, FilterFunction, Transfer, Weight};
use crate::locality::Interaction;
use crate::par;

#[derive(Clone, Debug)]
pub struct LocalizedGenerator {
    pub x: usize,
    pub bulk: MajoranaPolynomial,
    /// `shells[k]` is supported in `B_k(x)`.
    pub shells: Vec<MajoranaPolynomial>,
    /// Largest coefficient deviation of `Σ_k shells[k]` from `bulk`.
    pub reassembly_residual: f64,
}

impl LocalizedGenerator {
    /// `‖𝓘(Φ)(B_k(x))‖` for each `k`.
    pub fn shell_norms(&self) -> Vec<f64> {
        self.shells.iter().map(|s| s.norm()).collect()
    }
}

/// Everything the interaction-level construction shares between sites.
pub struct LocalizedInverse {
    spec: SpectralData,
    iterated: Transfer,
}

impl LocalizedInverse {
    pub fn new(filter: &FilterFunction, h: &Interaction) -> Result<Self> {
        let spec = diagonalize(&h.total_dense())?;
        let iterated = transfer_matrix(filter, spec.energies(), Weight::Iterated, 0)?;
        Ok(LocalizedInverse { spec, iterated })
    }

    pub fn spectral(&self) -> &SpectralData {
        &self.spec
    }

    pub fn panels(&self) -> usize {
        self.iterated.panels
    }

    /// `−i ∫ 𝒲(|u|) e^{iuH} C e^{−iuH} du`.
    pub fn integrate(&self, c: MatRef<'_, c64>) -> Mat<c64> {
        let v = self.iterated.apply(&self.spec, c);
        let n = v.nrows();
        Mat::from_fn(n, n, |i, j| v[(i, j)] * c64::new(0.0, -1.0))
    }

    /// Bulk operator and shells for every site.
    pub fn generators(&self, h: &Interaction, phi: &Interaction) -> Result<Vec<LocalizedGenerator>> {
        let lattice = h.lattice();
        if phi.lattice() != lattice {
            return Err(Error::LatticeMismatch {
                left: lattice,
                right: phi.lattice(),
            });
        }
        let phi_total = phi.total();
        let grouped = h.group_by_center();
        par::try_map_range(lattice.num_sites(), |x| {
            let hx = &grouped[x];
            let bulk = if phi_total.is_zero() || hx.is_zero() {
                MajoranaPolynomial::zero(lattice)
            } else {
                // dense_commutator(M) is [M, H_x]
                let comm = hx.dense_commutator(phi_total.to_dense().mat());
                let dense = DenseOperator::new(lattice, self.integrate(comm.as_ref()))?;
                MajoranaPolynomial::from_dense(&dense)?
            };
            let k_max = lattice.exhaustion_radius(x);
            let mut shells = Vec::with_capacity(k_max + 1);
            let mut inner = MajoranaPolynomial::zero(lattice);
            for k in 0..=k_max {
                let outer = bulk.conditional_expectation(lattice.ball(x, k))?;
                shells.push(&outer - &inner);
                inner = outer;
            }
            let mut sum = MajoranaPolynomial::zero(lattice);
            for s in &shells {
                sum = &sum + s;
            }
            let reassembly_residual = sum.max_coeff_diff(&bulk);
            Ok(LocalizedGenerator {
                x,
                bulk,
                shells,
                reassembly_residual,
            })
        })
    }
}

/// `𝓘(Φ)_{x,*}` and its shells for every `x`.
pub fn inverse_liouvillian_interaction(
    filter: &FilterFunction,
    h: &Interaction,
    phi: &Interaction,
) -> Result<Vec<LocalizedGenerator>> {
    LocalizedInverse::new(filter, h)?.generators(h, phi)
}

/// Comparison of `Σ_x [𝓘(Φ)_{x,*}, A]` (reassembled from shells) with
/// `∫ W(t) e^{it𝓛_H} 𝓛_Φ e^{−it𝓛_H} A dt = [𝓘(Φ_total), A]` computed with
/// the odd weight `W`.
#[derive(Clone, Debug, Serialize)]
pub struct DerivationCheck {
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub reassembly: f64,
}

pub fn derivation_equality(
    filter: &FilterFunction,
    h: &Interaction,
    phi: &Interaction,
    generators: &[LocalizedGenerator],
    samples: &[DenseOperator],
) -> Result<DerivationCheck> {
    let spec = diagonalize(&h.total_dense())?;
    let odd = transfer_matrix(filter, spec.energies(), Weight::Odd, 0)?;
    let via_w = odd.apply(&spec, phi.total_dense().mat());
    let lattice = h.lattice();
    let mut via_shells = Mat::<c64>::zeros(lattice.hilbert_dim(), lattice.hilbert_dim());
    let mut reassembly = 0.0f64;
    for g in generators {
        reassembly = reassembly.max(g.reassembly_residual);
        for s in &g.shells {
            via_shells += s.to_dense().mat();
        }
    }
    let residuals: Vec<f64> = samples
        .iter()
        .map(|a| {
            let a = a.mat();
            let left = &via_shells * a - a * &via_shells;
            let right = &via_w * a - a * &via_w;
            max_abs((left - right).as_ref())
        })
        .collect();
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(DerivationCheck {
        residuals,
        max_residual,
        reassembly,
    })
}
