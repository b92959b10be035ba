//! Dense matrix representation of finite-volume operators.

use faer::{c64, Mat, MatRef, Side};

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;

/// Tolerance for the Hermitian flag, in max-entry norm.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// A `2^{n|Λ|}`-dimensional complex matrix tied to a lattice.
#[derive(Clone)]
pub struct DenseOperator {
    lattice: LatticeSpec,
    mat: Mat<c64>,
    hermitian: bool,
}

impl std::fmt::Debug for DenseOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DenseOperator")
            .field("lattice", &self.lattice)
            .field("dim", &self.dim())
            .field("hermitian", &self.hermitian)
            .finish()
    }
}

impl DenseOperator {
    pub fn new(lattice: LatticeSpec, mat: Mat<c64>) -> Result<Self> {
        let dim = lattice.hilbert_dim();
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: mat.nrows().max(mat.ncols()),
            });
        }
        Ok(DenseOperator {
            lattice,
            mat,
            hermitian: false,
        })
    }

    /// Construct and verify Hermiticity to [`HERMITIAN_TOL`].
    pub fn hermitian(lattice: LatticeSpec, mat: Mat<c64>) -> Result<Self> {
        let mut op = Self::new(lattice, mat)?;
        let deviation = op.hermitian_deviation();
        if deviation > HERMITIAN_TOL * op.max_abs().max(1.0) {
            return Err(Error::NotHermitian { deviation });
        }
        op.hermitian = true;
        Ok(op)
    }

    pub(crate) fn from_parts(lattice: LatticeSpec, mat: Mat<c64>) -> Self {
        debug_assert_eq!(mat.nrows(), lattice.hilbert_dim());
        DenseOperator {
            lattice,
            mat,
            hermitian: false,
        }
    }

    pub fn zeros(lattice: LatticeSpec) -> Self {
        let d = lattice.hilbert_dim();
        Self::from_parts(lattice, Mat::zeros(d, d))
    }

    pub fn identity(lattice: LatticeSpec) -> Self {
        let d = lattice.hilbert_dim();
        let mut op = Self::from_parts(lattice, Mat::identity(d, d));
        op.hermitian = true;
        op
    }

    /// Diagonal operator with the given real entries.
    pub fn diagonal(lattice: LatticeSpec, diag: impl Fn(usize) -> f64) -> Self {
        let d = lattice.hilbert_dim();
        let mut m = Mat::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = c64::new(diag(i), 0.0);
        }
        let mut op = Self::from_parts(lattice, m);
        op.hermitian = true;
        op
    }

    /// Total particle number `N = Σ_{x,i} n_{x,i}`.
    pub fn total_number(lattice: LatticeSpec) -> Self {
        Self::diagonal(lattice, |b| b.count_ones() as f64)
    }

    /// Occupation `n_k` of fermionic mode `k`.
    pub fn number(lattice: LatticeSpec, mode: usize) -> Self {
        Self::diagonal(lattice, |b| (b >> mode & 1) as f64)
    }

    pub fn lattice(&self) -> LatticeSpec {
        self.lattice
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> MatRef<'_, c64> {
        self.mat.as_ref()
    }

    pub fn into_mat(self) -> Mat<c64> {
        self.mat
    }

    pub fn is_flagged_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn check_same_lattice(&self, other: &DenseOperator) -> Result<()> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch {
                left: self.lattice,
                right: other.lattice,
            });
        }
        Ok(())
    }

    fn same(&self, other: &DenseOperator) {
        assert_eq!(self.lattice, other.lattice, "lattice mismatch");
    }

    fn with(&self, mat: Mat<c64>) -> Self {
        Self::from_parts(self.lattice, mat)
    }

    pub fn adjoint(&self) -> Self {
        let mut op = self.with(self.mat.adjoint().to_owned());
        op.hermitian = self.hermitian;
        op
    }

    pub fn mul(&self, rhs: &DenseOperator) -> Self {
        self.same(rhs);
        self.with(&self.mat * &rhs.mat)
    }

    pub fn add(&self, rhs: &DenseOperator) -> Self {
        self.same(rhs);
        let mut op = self.with(&self.mat + &rhs.mat);
        op.hermitian = self.hermitian && rhs.hermitian;
        op
    }

    pub fn sub(&self, rhs: &DenseOperator) -> Self {
        self.same(rhs);
        let mut op = self.with(&self.mat - &rhs.mat);
        op.hermitian = self.hermitian && rhs.hermitian;
        op
    }

    pub fn scale(&self, c: c64) -> Self {
        let m = &self.mat;
        self.with(Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * c))
    }

    pub fn scale_real(&self, c: f64) -> Self {
        let mut op = self.scale(c64::new(c, 0.0));
        op.hermitian = self.hermitian;
        op
    }

    /// `[self, rhs] = self·rhs − rhs·self`.
    pub fn commutator(&self, rhs: &DenseOperator) -> Self {
        self.same(rhs);
        self.with(&self.mat * &rhs.mat - &rhs.mat * &self.mat)
    }

    pub fn trace(&self) -> c64 {
        (0..self.dim()).map(|i| self.mat[(i, i)]).sum()
    }

    /// The tracial state `tr(A) / dim`.
    pub fn tracial_state(&self) -> c64 {
        self.trace() / self.dim() as f64
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        max_abs(self.mat.as_ref())
    }

    pub fn frobenius(&self) -> f64 {
        self.mat.norm_l2()
    }

    /// Spectral (operator) norm.
    pub fn norm(&self) -> f64 {
        spectral_norm(self.mat.as_ref())
    }

    /// `max |A_ij − conj(A_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(self.mat.as_ref())
    }

    /// `max |A − B|` entrywise.
    pub fn max_diff(&self, other: &DenseOperator) -> f64 {
        self.same(other);
        max_abs((&self.mat - &other.mat).as_ref())
    }

    /// Conjugation by `exp(iφN)`: the gauge automorphism in dense form.
    pub fn gauge_conjugate(&self, phi: f64) -> Self {
        let m = &self.mat;
        self.with(Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
            let dn = i.count_ones() as f64 - j.count_ones() as f64;
            m[(i, j)] * c64::cis(phi * dn)
        }))
    }

    /// Replace by the exactly Hermitian part `(A + A^*)/2`.
    pub fn hermitian_part(&self) -> Self {
        let m = &self.mat;
        let mut op = self.with(Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
            (m[(i, j)] + m[(j, i)].conj()) * 0.5
        }));
        op.hermitian = true;
        op
    }

    /// `<ψ|A|ψ>` style expectation `tr(P A)` for a density-like `P`.
    pub fn trace_product(&self, rhs: &DenseOperator) -> c64 {
        self.same(rhs);
        trace_product(self.mat.as_ref(), rhs.mat.as_ref())
    }
}

pub(crate) fn max_abs(m: MatRef<'_, c64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

pub(crate) fn hermitian_deviation(m: MatRef<'_, c64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in j..m.nrows() {
            best = best.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    best
}

/// `tr(A B)` without forming the product.
pub(crate) fn trace_product(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> c64 {
    let mut acc = c64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Below this dimension the dense eigensolver is cheap enough.
const LANCZOS_MIN_DIM: usize = 128;
const LANCZOS_MAX_STEPS: usize = 320;
const LANCZOS_RTOL: f64 = 1e-13;

/// Spectral norm. Hermitian and anti-Hermitian inputs use their extreme
/// eigenvalues, everything else the top eigenvalue of `M†M`. Large inputs
/// go through Lanczos with full reorthogonalization and fall back to the
/// dense solvers when it has not converged.
pub fn spectral_norm(m: MatRef<'_, c64>) -> f64 {
    let scale = max_abs(m);
    if scale == 0.0 || m.nrows() == 0 {
        return 0.0;
    }
    if m.nrows() == 1 {
        return scale;
    }
    let n = m.nrows();
    let mut herm = 0.0f64;
    let mut anti = 0.0f64;
    for j in 0..n {
        for i in j..n {
            herm = herm.max((m[(i, j)] - m[(j, i)].conj()).norm());
            anti = anti.max((m[(i, j)] + m[(j, i)].conj()).norm());
        }
    }
    let eig_norm = |h: Mat<c64>| -> Option<f64> {
        h.self_adjoint_eigenvalues(Side::Lower)
            .ok()
            .map(|ev| ev.iter().fold(0.0f64, |a, &x| a.max(x.abs())))
    };
    let i_ = c64::new(0.0, 1.0);
    if herm <= 1e-14 * scale || anti <= 1e-14 * scale {
        // anti-Hermitian M has the same norm as the Hermitian iM
        let phase = if herm <= 1e-14 * scale { c64::new(1.0, 0.0) } else { i_ };
        let h = Mat::from_fn(n, n, |i, j| (m[(i, j)] * phase + (m[(j, i)] * phase).conj()) * 0.5);
        if n >= LANCZOS_MIN_DIM {
            if let Some(v) = lanczos_abs_max(n, false, |q| &h * q) {
                return v;
            }
        }
        if let Some(v) = eig_norm(h) {
            return v;
        }
    } else {
        if n >= LANCZOS_MIN_DIM {
            if let Some(v) = lanczos_abs_max(n, true, |q| m.adjoint() * (m * q)) {
                return v.sqrt();
            }
        }
        let gram = m.adjoint() * m;
        if let Some(v) = eig_norm(Mat::from_fn(n, n, |i, j| (gram[(i, j)] + gram[(j, i)].conj()) * 0.5)) {
            return v.sqrt();
        }
    }
    m.singular_values()
        .map(|s| s.iter().copied().fold(0.0, f64::max))
        .unwrap_or_else(|_| m.norm_l2())
}

/// Largest `|λ|` of the Hermitian map `apply` by Lanczos from a fixed pseudo-random
/// start. Returns `None` unless the relevant extreme Ritz values (only the
/// top one for a `nonnegative` map) have residual below `LANCZOS_RTOL · max|θ|`.
fn lanczos_abs_max(n: usize, nonnegative: bool, apply: impl Fn(&Mat<c64>) -> Mat<c64>) -> Option<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x1a2c_2053);
    let mut q = Mat::<c64>::from_fn(n, 1, |_, _| {
        c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    q = &q * faer::Scale(c64::new(1.0 / q.norm_l2(), 0.0));
    let mut basis: Vec<Mat<c64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let steps = LANCZOS_MAX_STEPS.min(n);
    for k in 0..steps {
        let mut w = apply(&q);
        let alpha = (q.adjoint() * &w)[(0, 0)].re;
        basis.push(q);
        alphas.push(alpha);
        for _ in 0..2 {
            for v in &basis {
                let c = (v.adjoint() * &w)[(0, 0)];
                w -= v * faer::Scale(c);
            }
        }
        let beta = w.norm_l2();
        let done = beta <= 1e-300 || k + 1 == steps;
        if done || (k + 1) % 8 == 0 {
            let dim = alphas.len();
            let t = Mat::<f64>::from_fn(dim, dim, |i, j| {
                if i == j {
                    alphas[i]
                } else if i == j + 1 {
                    betas[j]
                } else if j == i + 1 {
                    betas[i]
                } else {
                    0.0
                }
            });
            let eig = t.self_adjoint_eigen(Side::Lower).ok()?;
            let s = eig.S();
            let u = eig.U();
            let (mut lo, mut hi) = (0, 0);
            for i in 0..dim {
                if s[i] < s[lo] {
                    lo = i;
                }
                if s[i] > s[hi] {
                    hi = i;
                }
            }
            let top = s[lo].abs().max(s[hi].abs());
            let resid = |i: usize| beta * u[(dim - 1, i)].abs();
            let r = if nonnegative {
                resid(hi)
            } else {
                resid(lo).max(resid(hi))
            };
            if beta <= 1e-300 || r <= LANCZOS_RTOL * top {
                return Some(top);
            }
            if done {
                return None;
            }
        }
        betas.push(beta);
        q = &w * faer::Scale(c64::new(1.0 / beta, 0.0));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_norm_matches_svd_on_large_inputs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 200;
        let g = Mat::<c64>::from_fn(n, n, |_, _| {
            c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let herm = Mat::from_fn(n, n, |i, j| g[(i, j)] + g[(j, i)].conj());
        let anti = Mat::from_fn(n, n, |i, j| g[(i, j)] - g[(j, i)].conj());
        // two equal top singular values and a sparse spectrum
        let diag = Mat::from_fn(n, n, |i, j| {
            if i == j {
                c64::new(if i < 2 { 3.0 } else { 1e-3 * i as f64 }, 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        });
        let low_rank = g.get(.., 0..1) * g.get(0..1, ..);
        for m in [
            g.clone(),
            herm,
            anti,
            &g * &diag,
            &low_rank * faer::Scale(c64::new(1e-9, 0.0)),
        ] {
            let svd = m.singular_values().unwrap().iter().copied().fold(0.0, f64::max);
            let fast = spectral_norm(m.as_ref());
            assert!((fast - svd).abs() <= 1e-11 * svd, "{fast} vs {svd}");
        }
    }

    #[test]
    fn norms_of_simple_operators() {
        let l = LatticeSpec::chain(2).unwrap();
        let n0 = DenseOperator::number(l, 0);
        assert!((n0.norm() - 1.0).abs() < 1e-14);
        assert_eq!(n0.tracial_state(), c64::new(0.5, 0.0));
        let n = DenseOperator::total_number(l);
        assert!((n.norm() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn hermitian_constructor_rejects() {
        let l = LatticeSpec::chain(1).unwrap();
        let mut m = Mat::<c64>::zeros(2, 2);
        m[(0, 1)] = c64::new(1.0, 0.0);
        assert!(matches!(
            DenseOperator::hermitian(l, m.clone()),
            Err(Error::NotHermitian { .. })
        ));
        m[(1, 0)] = c64::new(1.0, 0.0);
        assert!(DenseOperator::hermitian(l, m).is_ok());
        assert!(DenseOperator::new(l, Mat::zeros(3, 3)).is_err());
    }

    #[test]
    fn nonnormal_norm_uses_svd() {
        let l = LatticeSpec::chain(1).unwrap();
        let mut m = Mat::<c64>::zeros(2, 2);
        m[(0, 1)] = c64::new(3.0, 0.0);
        m[(1, 1)] = c64::new(4.0, 0.0);
        let op = DenseOperator::new(l, m).unwrap();
        assert!((op.norm() - 5.0).abs() < 1e-12);
    }
}
