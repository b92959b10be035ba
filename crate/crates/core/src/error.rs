use thiserror::Error;

use crate::lattice::LatticeSpec;

/// Errors raised by the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("lattice mismatch: {left} vs {right}")]
    LatticeMismatch { left: LatticeSpec, right: LatticeSpec },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("site {site} is outside a lattice with {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },

    #[error("center of an empty site set is undefined")]
    EmptySiteSet,

    #[error("operator is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid interaction term on {sites:?}: {reason}")]
    InvalidInteraction { sites: Vec<usize>, reason: String },

    #[error("invalid filter parameters: {0}")]
    InvalidFilter(String),

    #[error("time {t} lies outside the filter window [-{cutoff}, {cutoff}]")]
    OutsideFilterWindow { t: f64, cutoff: f64 },

    #[error("quadrature did not converge within {max_panels} panels (last change {last_change:.3e})")]
    QuadratureCap { max_panels: usize, last_change: f64 },

    #[error("ordered exponential did not converge within {max_steps} steps (last change {last_change:.3e})")]
    StepCap { max_steps: usize, last_change: f64 },

    #[error("off-gap identity requires splitting >= 2g: splitting {splitting} < {required}")]
    SplittingTooSmall { splitting: f64, required: f64 },

    #[error("spectral gap {gap:.6} is below the required {required:.6}")]
    GapTooSmall { gap: f64, required: f64 },

    #[error("gap gate failed at s = {s}: gap {gap:.6e} < declared {declared:.6e}")]
    GapGate {
        s: f64,
        gap: f64,
        declared: f64,
        spectrum: Vec<f64>,
    },

    #[error("ground state at s = {s} is {multiplicity}-fold degenerate")]
    DegenerateGround { s: f64, multiplicity: usize },

    #[error("family provides no derivative")]
    MissingDerivative,

    #[error("both operators are parity-odd; the Lieb-Robinson bound needs one even operator")]
    BothOdd,

    #[error("symmetry hypothesis fails: ||[H, Q]|| = {residual:.3e}")]
    SymmetryHypothesis { residual: f64 },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("unknown scenario `{name}`{}", suggestion.as_ref().map(|s| format!(" (did you mean `{s}`?)")).unwrap_or_default())]
    UnknownScenario { name: String, suggestion: Option<String> },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
