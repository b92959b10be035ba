//! The two-level off-gap identity `−i[H, 𝓘(A)] = A^OD`.

use faer::{c64, Mat};
use serde::Serialize;

use super::function::FilterFunction;
use super::quadrature::{quad_against, Weight};
use crate::car::{spectral_norm, DenseOperator};
use crate::dynamics::diagonalize;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OffGapCheck {
    pub splitting: f64,
    pub residual: f64,
    pub panels: usize,
}

/// For a two-level `H` with splitting `E ≥ 2g`, integrate `W` against the
/// exact evolution node by node and return `‖−i[H, 𝓘(A)] − offdiag(A)‖`,
/// where `offdiag` is taken in the eigenbasis of `H`.
pub fn verify_fourier_offgap(filter: &FilterFunction, h: &DenseOperator, a: &DenseOperator) -> Result<OffGapCheck> {
    h.check_same_lattice(a)?;
    if h.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: h.dim(),
        });
    }
    let spec = diagonalize(h)?;
    let e = spec.energies();
    let splitting = e[1] - e[0];
    let required = 2.0 * filter.gap();
    if splitting < required {
        return Err(Error::SplittingTooSmall { splitting, required });
    }
    let quad = quad_against(
        filter,
        |t| {
            let u = spec.propagator(t);
            Ok(&u * a.mat() * u.adjoint())
        },
        Weight::Odd,
        None,
    )?;
    let inv = quad.value;
    let comm = h.mat() * &inv - &inv * h.mat();
    let od = Mat::from_fn(2, 2, |i, j| comm[(i, j)] * c64::new(0.0, -1.0));
    let mut b = spec.to_eigenbasis(a.mat());
    for i in 0..2 {
        b[(i, i)] = c64::new(0.0, 0.0);
    }
    let offdiag = spec.from_eigenbasis(b.as_ref());
    let diff: Mat<c64> = od - offdiag;
    Ok(OffGapCheck {
        splitting,
        residual: spectral_norm(diff.as_ref()),
        panels: quad.panels,
    })
}
