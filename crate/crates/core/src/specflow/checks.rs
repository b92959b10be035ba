//! Dense checks of the ground-state identities along a family.

use faer::{c64, Mat};
use serde::Serialize;

use super::decompose::InverseLiouvillian;
use super::flow::projection_derivative;
use crate::car::{spectral_norm, trace_product, DenseOperator};
use crate::dynamics::{diagonalize, SpectralData};
use crate::error::{Error, Result};
use crate::filter::FilterFunction;
use crate::locality::{Interaction, InteractionFamily};

/// Step of the central difference for `Ṗ_s`.
pub const PDOT_STEP: f64 = 1e-4;
/// Largest `‖[H, Q]‖` accepted as a symmetry.
pub const SYMMETRY_TOL: f64 = 1e-10;

fn nondegenerate(family: &InteractionFamily, s: f64) -> Result<SpectralData> {
    let spec = diagonalize(&family.at(s).total_dense())?;
    if spec.ground_dim() != 1 {
        return Err(Error::DegenerateGround {
            s,
            multiplicity: spec.ground_dim(),
        });
    }
    Ok(spec)
}

#[derive(Clone, Debug, Serialize)]
pub struct ParallelTransport {
    pub s: f64,
    /// `max |tr(Ṗ_s A^D)|` over the samples.
    pub diagonal: f64,
    /// `max |tr(Ṗ_s A)|` over the samples.
    pub reference: f64,
    pub passed: bool,
}

/// `ω̇_s(A^D) = 0`: checks `max |tr(Ṗ A^D)| ≤ 1e−4 max |tr(Ṗ A)| + 1e−6`.
pub fn parallel_transport_check(
    filter: &FilterFunction,
    family: &InteractionFamily,
    s: f64,
    samples: &[DenseOperator],
) -> Result<ParallelTransport> {
    let spec = nondegenerate(family, s)?;
    let pdot = projection_derivative(family, s, PDOT_STEP)?;
    let inv = InverseLiouvillian::new(filter, spec)?;
    let mut diagonal = 0.0f64;
    let mut reference = 0.0f64;
    for a in samples {
        let ad = inv.diagonal(a.mat());
        diagonal = diagonal.max(trace_product(pdot.as_ref(), ad.as_ref()).norm());
        reference = reference.max(trace_product(pdot.as_ref(), a.mat()).norm());
    }
    Ok(ParallelTransport {
        s,
        diagonal,
        reference,
        passed: diagonal <= 1e-4 * reference + 1e-6,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivativeSwitch {
    pub s: f64,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

/// `ω̇_s(𝓛_{H_s} A) = −ω_s(𝓛_{Ḣ_s} A)`, i.e.
/// `|tr(Ṗ_s [H_s, A]) + tr(P_s [Ḣ_s, A])|` for each sample.
pub fn derivative_switch_check(
    family: &InteractionFamily,
    s: f64,
    samples: &[DenseOperator],
) -> Result<DerivativeSwitch> {
    let spec = nondegenerate(family, s)?;
    let pdot = projection_derivative(family, s, PDOT_STEP)?;
    let h = family.at(s).total_dense();
    let hdot = family.derivative_at(s).total_dense();
    let p = spec.ground_projection();
    let residuals: Vec<f64> = samples
        .iter()
        .map(|a| {
            let ha = h.commutator(a);
            let hda = hdot.commutator(a);
            (trace_product(pdot.as_ref(), ha.mat()) + trace_product(p, hda.mat())).norm()
        })
        .collect();
    Ok(DerivativeSwitch {
        s,
        max_residual: residuals.iter().copied().fold(0.0, f64::max),
        residuals,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GoldstoneCheck {
    /// `‖[H, Q]‖` for the symmetry generator `Q`.
    pub hypothesis: f64,
    /// `max |tr(P β_s(A)) − tr(P A)|` over grid and samples.
    pub invariance: f64,
    /// `‖[P, Q]‖`.
    pub charge_commutator: f64,
}

/// Invariance of the ground state under the symmetry cocycle
/// `β_s(A) = e^{isQ} A e^{−isQ}` generated by `sym`.
///
/// Refuses when `[H, Q] ≠ 0`, which separates a broken hypothesis from a
/// broken conclusion.
pub fn goldstone_check(
    h: &Interaction,
    sym: &Interaction,
    grid: &[f64],
    samples: &[DenseOperator],
) -> Result<GoldstoneCheck> {
    let hd = h.total_dense();
    let q = sym.total_dense();
    hd.check_same_lattice(&q)?;
    let hypothesis = hd.commutator(&q).norm();
    if hypothesis > SYMMETRY_TOL {
        return Err(Error::SymmetryHypothesis { residual: hypothesis });
    }
    let spec = diagonalize(&hd)?;
    if spec.ground_dim() != 1 {
        return Err(Error::DegenerateGround {
            s: 0.0,
            multiplicity: spec.ground_dim(),
        });
    }
    let p = spec.ground_projection();
    let qspec = diagonalize(&q)?;
    let mut invariance = 0.0f64;
    for &s in grid {
        for a in samples {
            let moved = qspec.evolve(a.mat(), s);
            let diff: c64 = trace_product(p, moved.as_ref()) - trace_product(p, a.mat());
            invariance = invariance.max(diff.norm());
        }
    }
    let pq: Mat<c64> = p * q.mat() - q.mat() * p;
    Ok(GoldstoneCheck {
        hypothesis,
        invariance,
        charge_commutator: spectral_norm(pq.as_ref()),
    })
}
