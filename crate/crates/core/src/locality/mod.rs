//! Locality structure: quasi-local norms, interactions and their families.

mod center;
mod family;
mod interaction;
mod norms;

pub use center::center;
pub use family::{InteractionFamily, FD_STEP};
pub use interaction::{terms, Interaction, TERM_TOL};
pub use norms::{
    commutator_bound, liouvillian_norm_ratio, localization_tails, norm_from_tails, quasi_local_norm, random_quasilocal,
    CommutatorBound,
};
