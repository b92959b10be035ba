//! The CAR algebra of a finite lattice in Majorana and matrix form.

mod dense;
mod monomial;
mod polynomial;

pub use dense::{spectral_norm, DenseOperator, HERMITIAN_TOL};
pub use monomial::{adjoint_sign, majorana_pauli, mask_from_pauli, monomial_pauli, monomial_product, Pauli};
pub use polynomial::{poly_mul, MajoranaPolynomial, PRUNE};

pub(crate) use dense::{hermitian_deviation, max_abs, trace_product};
