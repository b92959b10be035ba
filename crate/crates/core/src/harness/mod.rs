//! Scenario library, configuration and experiment runs.

mod checks;
mod config;
mod run;
mod scenarios;

pub use checks::{
    function_estimate_violations, lr_operators, number_interaction, run_check, sample_operators, two_level_offgap,
    Artifact, CheckResult, Context,
};
pub use config::{
    CheckKind, ChecksSection, Config, FilterSection, GridSection, LatticeSection, OutputSection, ScenarioSection,
    SEED_ENV,
};
pub use run::{input_hash, run_experiment, FilterSummary, RunManifest, RunOutcome, SOFTWARE};
pub use scenarios::{chain_interaction, find_scenario, list_scenarios, suggest, ParamSpec, Params, Scenario, Symmetry};
