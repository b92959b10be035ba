//! Heisenberg dynamics, cocycles and Lieb–Robinson profiling.

mod cocycle;
mod lr;
mod spectral;

pub use cocycle::{
    cocycle_path, cocycle_propagate, expm_i, liouvillian_apply, liouvillian_apply_dense, unitarity_defect, Propagation,
    StepRule,
};
pub use lr::{
    fit_envelope, fmt_num, lr_commutator_profile, lr_envelope_inequality, norm_growth, restriction_convergence,
    write_profile_csv, Envelope, Evolution, LrSample, NormGrowth,
};
pub use spectral::{diagonalize, heisenberg_evolve, SpectralData, SpectralResiduals, GROUND_CLUSTER};
