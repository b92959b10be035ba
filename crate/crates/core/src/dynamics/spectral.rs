//! Exact diagonalization and eigenbasis evolution.

use faer::{c64, Mat, MatRef, Side};

use crate::car::{hermitian_deviation, max_abs, DenseOperator, HERMITIAN_TOL};
use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;

/// Eigenvalues within this distance of the minimum form the ground cluster.
pub const GROUND_CLUSTER: f64 = 1e-9;

#[derive(Clone)]
pub struct SpectralData {
    lattice: LatticeSpec,
    energies: Vec<f64>,
    vectors: Mat<c64>,
    ground_dim: usize,
    gap: f64,
    projection: Mat<c64>,
}

impl std::fmt::Debug for SpectralData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralData")
            .field("dim", &self.energies.len())
            .field("ground_energy", &self.energies.first())
            .field("ground_dim", &self.ground_dim)
            .field("gap", &self.gap)
            .finish()
    }
}

/// Residuals of the structural invariants of a decomposition.
#[derive(Clone, Copy, Debug)]
pub struct SpectralResiduals {
    pub unitarity: f64,
    pub projection: f64,
    pub reconstruction: f64,
}

/// Diagonalize a Hermitian operator.
pub fn diagonalize(h: &DenseOperator) -> Result<SpectralData> {
    let dev = h.hermitian_deviation();
    if dev > HERMITIAN_TOL * h.max_abs().max(1.0) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    diagonalize_mat(h.lattice(), h.mat())
}

pub(crate) fn diagonalize_mat(lattice: LatticeSpec, h: MatRef<'_, c64>) -> Result<SpectralData> {
    let n = h.nrows();
    let sym = Mat::from_fn(n, n, |i, j| (h[(i, j)] + h[(j, i)].conj()) * 0.5);
    let eig = sym
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let raw: Vec<f64> = (0..n).map(|i| eig.S()[i].re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
    let energies: Vec<f64> = order.iter().map(|&i| raw[i]).collect();
    let u = eig.U();
    let vectors = Mat::from_fn(n, n, |i, j| u[(i, order[j])]);

    let e0 = energies[0];
    let ground_dim = energies.iter().take_while(|&&e| e - e0 <= GROUND_CLUSTER).count();
    let gap = energies.get(ground_dim).map(|e| e - e0).unwrap_or(f64::INFINITY);
    let g = vectors.subcols(0, ground_dim);
    let projection = g * g.adjoint();
    Ok(SpectralData {
        lattice,
        energies,
        vectors,
        ground_dim,
        gap,
        projection,
    })
}

impl SpectralData {
    pub fn lattice(&self) -> LatticeSpec {
        self.lattice
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Ascending eigenvalues.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn ground_dim(&self) -> usize {
        self.ground_dim
    }

    /// Distance from the ground cluster to the rest of the spectrum.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// Columns are eigenvectors, ordered as [`Self::energies`].
    pub fn vectors(&self) -> MatRef<'_, c64> {
        self.vectors.as_ref()
    }

    /// Projection onto the ground cluster.
    pub fn ground_projection(&self) -> MatRef<'_, c64> {
        self.projection.as_ref()
    }

    pub fn ground_projection_op(&self) -> DenseOperator {
        DenseOperator::from_parts(self.lattice, self.projection.clone())
    }

    /// `V^* A V`.
    pub fn to_eigenbasis(&self, a: MatRef<'_, c64>) -> Mat<c64> {
        self.vectors.adjoint() * a * &self.vectors
    }

    /// `V B V^*`.
    pub fn from_eigenbasis(&self, b: MatRef<'_, c64>) -> Mat<c64> {
        &self.vectors * b * self.vectors.adjoint()
    }

    /// Multiply entry `(i, j)` of the eigenbasis form of `A` by
    /// `f(E_i, E_j)` and transform back.
    pub fn spectral_map(&self, a: MatRef<'_, c64>, f: impl Fn(f64, f64) -> c64) -> Mat<c64> {
        let mut b = self.to_eigenbasis(a);
        let e = &self.energies;
        for j in 0..b.ncols() {
            for i in 0..b.nrows() {
                b[(i, j)] *= f(e[i], e[j]);
            }
        }
        self.from_eigenbasis(b.as_ref())
    }

    /// `e^{itH} A e^{-itH}`.
    pub fn evolve(&self, a: MatRef<'_, c64>, t: f64) -> Mat<c64> {
        if t == 0.0 {
            return a.to_owned();
        }
        self.spectral_map(a, |ei, ej| c64::cis((ei - ej) * t))
    }

    /// `e^{itH}`.
    pub fn propagator(&self, t: f64) -> Mat<c64> {
        let n = self.dim();
        let phases = Mat::from_fn(n, n, |i, j| self.vectors[(i, j)] * c64::cis(self.energies[j] * t));
        phases * self.vectors.adjoint()
    }

    /// `tr(P A) / tr(P)`, the (averaged) ground-state expectation.
    pub fn ground_expectation(&self, a: MatRef<'_, c64>) -> c64 {
        crate::car::trace_product(self.projection.as_ref(), a) / self.ground_dim as f64
    }

    pub fn residuals(&self, h: MatRef<'_, c64>) -> SpectralResiduals {
        let n = self.dim();
        let id = Mat::<c64>::identity(n, n);
        let unitarity = max_abs((self.vectors.adjoint() * &self.vectors - &id).as_ref());
        let p = &self.projection;
        let projection = max_abs((p * p - p).as_ref()).max(hermitian_deviation(p.as_ref()));
        let diag = Mat::from_fn(n, n, |i, j| {
            if i == j {
                c64::new(self.energies[i], 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        });
        let reconstruction = max_abs((self.from_eigenbasis(diag.as_ref()) - h).as_ref());
        SpectralResiduals {
            unitarity,
            projection,
            reconstruction,
        }
    }
}

/// `e^{iHt} A e^{-iHt}` for a Hermitian `H`.
pub fn heisenberg_evolve(h: &DenseOperator, a: &DenseOperator, t: f64) -> Result<DenseOperator> {
    h.check_same_lattice(a)?;
    let spec = diagonalize(h)?;
    Ok(DenseOperator::from_parts(h.lattice(), spec.evolve(a.mat(), t)))
}
