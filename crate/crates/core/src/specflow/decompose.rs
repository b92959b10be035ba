//! Operator-level inverse Liouvillian and the diagonal/off-diagonal split.

use faer::{c64, Mat, MatRef};
use serde::Serialize;

use crate::car::{max_abs, spectral_norm, DenseOperator};
use crate::dynamics::SpectralData;
use crate::error::{Error, Result};
use crate::filter::{transfer_matrix, FilterFunction, Transfer, Weight};

/// `𝓘(A) = ∫ W(t) e^{itH} A e^{−itH} dt` and `A^D = ∫ w(t) e^{itH} A e^{−itH} dt`
/// for one Hamiltonian. The transfer matrices are built once and reused.
#[derive(Clone, Debug)]
pub struct InverseLiouvillian {
    spec: SpectralData,
    odd: Transfer,
    density: Transfer,
}

impl InverseLiouvillian {
    pub fn new(filter: &FilterFunction, spec: SpectralData) -> Result<Self> {
        Self::with_levels(filter, spec, 0)
    }

    /// Start `extra_levels` doublings above the default panel count.
    pub fn with_levels(filter: &FilterFunction, spec: SpectralData, extra_levels: u32) -> Result<Self> {
        let odd = transfer_matrix(filter, spec.energies(), Weight::Odd, extra_levels)?;
        let density = transfer_matrix(filter, spec.energies(), Weight::Density, extra_levels)?;
        Ok(InverseLiouvillian { spec, odd, density })
    }

    pub fn spectral(&self) -> &SpectralData {
        &self.spec
    }

    /// Panels used by the finer of the two transfers.
    pub fn panels(&self) -> usize {
        self.odd.panels.max(self.density.panels)
    }

    /// Largest change seen at the final doubling.
    pub fn quadrature_change(&self) -> f64 {
        self.odd.change.max(self.density.change)
    }

    pub fn inverse(&self, a: MatRef<'_, c64>) -> Mat<c64> {
        self.odd.apply(&self.spec, a)
    }

    pub fn diagonal(&self, a: MatRef<'_, c64>) -> Mat<c64> {
        self.density.apply(&self.spec, a)
    }

    /// `−i [H, 𝓘(A)]`, with the commutator taken in the eigenbasis.
    pub fn off_diagonal(&self, a: MatRef<'_, c64>) -> Mat<c64> {
        let b = self.odd.apply_eigen(self.spec.to_eigenbasis(a).as_ref());
        let e = self.spec.energies();
        let n = b.nrows();
        let od = Mat::from_fn(n, n, |i, j| b[(i, j)] * c64::new(0.0, -(e[i] - e[j])));
        self.spec.from_eigenbasis(od.as_ref())
    }

    pub fn decompose(&self, a: &DenseOperator) -> ODecomposition {
        let diag = self.diagonal(a.mat());
        let offdiag = self.off_diagonal(a.mat());
        let split = max_abs((a.mat() - &diag - &offdiag).as_ref());
        ODecomposition {
            input: a.mat().to_owned(),
            diag,
            offdiag,
            split_residual: split,
            panels: self.panels(),
        }
    }
}

/// `A = A^D + A^OD`.
#[derive(Clone, Debug)]
pub struct ODecomposition {
    pub input: Mat<c64>,
    pub diag: Mat<c64>,
    pub offdiag: Mat<c64>,
    /// `max |A − A^D − A^OD|`.
    pub split_residual: f64,
    pub panels: usize,
}

/// Ground-block identities of a decomposition, in spectral norm.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GroundBlocks {
    /// `‖P A^OD P‖`
    pub od_ground: f64,
    /// `‖P A^D P⊥‖`
    pub d_cross: f64,
    /// `‖P A^OD P⊥ − P A P⊥‖`
    pub od_cross: f64,
}

impl GroundBlocks {
    pub fn max(&self) -> f64 {
        self.od_ground.max(self.d_cross).max(self.od_cross)
    }
}

impl ODecomposition {
    pub fn ground_blocks(&self, spec: &SpectralData) -> GroundBlocks {
        let p = spec.ground_projection();
        let n = p.nrows();
        let q = Mat::<c64>::identity(n, n) - p;
        let od_ground = spectral_norm((p * &self.offdiag * p).as_ref());
        let d_cross = spectral_norm((p * &self.diag * &q).as_ref());
        let od_cross = spectral_norm((p * (&self.offdiag - &self.input) * &q).as_ref());
        GroundBlocks {
            od_ground,
            d_cross,
            od_cross,
        }
    }

    /// Hermiticity defects of the two parts.
    pub fn adjoint_defects(&self) -> (f64, f64) {
        (
            crate::car::hermitian_deviation(self.diag.as_ref()),
            crate::car::hermitian_deviation(self.offdiag.as_ref()),
        )
    }
}

/// `𝓘(A)` for a dense Hermitian `H`.
pub fn inverse_liouvillian_op(filter: &FilterFunction, spec: &SpectralData, a: &DenseOperator) -> Result<Mat<c64>> {
    let odd = transfer_matrix(filter, spec.energies(), Weight::Odd, 0)?;
    Ok(odd.apply(spec, a.mat()))
}

/// Split `A` into diagonal and off-diagonal parts. Refuses when the gap is
/// below the filter gap, since the ground-block identities then fail.
pub fn od_decompose(filter: &FilterFunction, spec: &SpectralData, a: &DenseOperator) -> Result<ODecomposition> {
    Ok(od_decomposer(filter, spec)?.decompose(a))
}

/// Reusable [`InverseLiouvillian`] behind the same gap refusal as
/// [`od_decompose`].
pub fn od_decomposer(filter: &FilterFunction, spec: &SpectralData) -> Result<InverseLiouvillian> {
    if spec.gap() < filter.gap() {
        return Err(Error::GapTooSmall {
            gap: spec.gap(),
            required: filter.gap(),
        });
    }
    InverseLiouvillian::new(filter, spec.clone())
}

/// `|ω(B^* A^D) − ω(B^*) ω(A)|` in the (nondegenerate) ground state.
pub fn factorization_residual(spec: &SpectralData, dec: &ODecomposition, b: MatRef<'_, c64>) -> f64 {
    let bstar = b.adjoint().to_owned();
    let lhs = spec.ground_expectation((&bstar * &dec.diag).as_ref());
    let rhs = spec.ground_expectation(bstar.as_ref()) * spec.ground_expectation(dec.input.as_ref());
    (lhs - rhs).norm()
}
