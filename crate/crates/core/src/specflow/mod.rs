//! Inverse Liouvillian, diagonal/off-diagonal split and spectral flow.

mod checks;
mod decompose;
mod flow;
mod localized;

pub use checks::{
    derivative_switch_check, goldstone_check, parallel_transport_check, DerivativeSwitch, GoldstoneCheck,
    ParallelTransport, PDOT_STEP, SYMMETRY_TOL,
};
pub use decompose::{
    factorization_residual, inverse_liouvillian_op, od_decompose, od_decomposer, GroundBlocks, InverseLiouvillian,
    ODecomposition,
};
pub use flow::{
    flow_generator, flow_generator_with, gap_gate, kato_transport, projection_derivative, transport,
    transport_convergence, FlowConfig, FlowGenerator, FlowRun, TransportConvergence, CONVERGENCE_FLOOR,
    GENERATOR_HERMITIAN_TOL,
};
pub use localized::{
    derivation_equality, inverse_liouvillian_interaction, DerivationCheck, LocalizedGenerator, LocalizedInverse,
};
