//! Filter functions and the quadrature that integrates against them.

mod function;
mod offgap;
mod quadrature;

pub use function::{build_filter, FilterFunction, FilterParams, NODES_PER_PANEL};
pub use offgap::{verify_fourier_offgap, OffGapCheck};
pub use quadrature::{
    quad_against, spectral_integral, start_level, transfer_matrix, NodeTable, Quadrature, Transfer, Weight, MAX_LEVEL,
    MIN_LEVEL, QUAD_TOL,
};
