//! Experiment configuration, TOML or JSON with one schema.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::scenarios::{find_scenario, Params, Scenario};
use crate::error::{Error, Result};
use crate::filter::FilterParams;

pub const SEED_ENV: &str = "SPECFLOW_SEED";

/// The checks a run can execute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Filter,
    Transport,
    OdIdentities,
    ParallelTransport,
    DerivativeSwitch,
    Goldstone,
    Derivation,
    LrProfile,
    Norms,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Filter => "filter",
            CheckKind::Transport => "transport",
            CheckKind::OdIdentities => "od-identities",
            CheckKind::ParallelTransport => "parallel-transport",
            CheckKind::DerivativeSwitch => "derivative-switch",
            CheckKind::Goldstone => "goldstone",
            CheckKind::Derivation => "derivation",
            CheckKind::LrProfile => "lr-profile",
            CheckKind::Norms => "norms",
        }
    }

    /// Checks that assert a consequence of the gap and so sit behind the gate.
    pub fn is_gated(self) -> bool {
        matches!(
            self,
            CheckKind::Transport
                | CheckKind::OdIdentities
                | CheckKind::ParallelTransport
                | CheckKind::DerivativeSwitch
                | CheckKind::Goldstone
                | CheckKind::Derivation
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    #[serde(default)]
    pub params: Params,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    /// Overrides the scenario's size parameters (`sites`, or `lx`, `ly`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent: Option<Vec<usize>>,
}

/// Filter settings; `gap` defaults to the scenario's declared gap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    pub order: usize,
    pub eta: f64,
    pub tol: f64,
    pub clamp: bool,
}

impl Default for FilterSection {
    fn default() -> Self {
        let d = FilterParams::default();
        FilterSection {
            gap: None,
            order: d.order,
            eta: d.eta,
            tol: d.tol,
            clamp: d.clamp,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    /// `s`-steps of the transport grid.
    pub steps: usize,
    /// Points (as fractions of the family interval) for pointwise checks.
    pub probes: Vec<f64>,
    /// Times of the light-cone profile.
    pub times: Vec<f64>,
    /// Random operators per pointwise check.
    pub samples: usize,
    /// `(A, B)` pairs for the norm inequality.
    pub pairs: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            steps: 64,
            probes: vec![0.25, 0.5, 0.75],
            times: (0..=8).map(|i| 0.25 * i as f64).collect(),
            samples: 20,
            pairs: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksSection {
    /// Checks to run; empty means the scenario's default set.
    pub run: Vec<CheckKind>,
    /// Override of the scenario's gap gate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_gate: Option<f64>,
    pub transport_tol: f64,
    /// Also run the half-step, doubled-panel transport.
    pub convergence: bool,
}

impl Default for ChecksSection {
    fn default() -> Self {
        ChecksSection {
            run: Vec::new(),
            gap_gate: None,
            transport_tol: 1e-3,
            convergence: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: u64,
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub lattice: LatticeSection,
    #[serde(default)]
    pub filter: FilterSection,
    #[serde(default)]
    pub grids: GridSection,
    #[serde(default)]
    pub checks: ChecksSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl Config {
    /// Default config for a scenario, with its parameters spelled out.
    pub fn for_scenario(scenario: &Scenario) -> Self {
        Config {
            seed: 0,
            scenario: ScenarioSection {
                name: scenario.name.to_string(),
                params: scenario.defaults(),
            },
            lattice: LatticeSection::default(),
            filter: FilterSection::default(),
            grids: GridSection::default(),
            checks: ChecksSection::default(),
            output: OutputSection::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("{e}")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Load by extension: `.json` is JSON, anything else TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        };
        parsed.map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Apply `SPECFLOW_SEED` if set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV} must be an unsigned integer, got `{v}`")))?;
        }
        Ok(())
    }

    pub fn scenario(&self) -> Result<&'static Scenario> {
        find_scenario(&self.scenario.name)
    }

    /// Scenario parameters after applying `[lattice] extent`.
    pub fn scenario_params(&self) -> Result<Params> {
        let scenario = self.scenario()?;
        let mut params = self.scenario.params.clone();
        if let Some(extent) = &self.lattice.extent {
            let keys: &[&str] = if scenario.params.iter().any(|p| p.name == "sites") {
                &["sites"]
            } else if scenario.params.iter().any(|p| p.name == "lx") {
                &["lx", "ly"]
            } else {
                &[]
            };
            if extent.len() != keys.len() {
                return Err(Error::Config(format!(
                    "lattice.extent: scenario `{}` takes {} extent value(s), got {}",
                    scenario.name,
                    keys.len(),
                    extent.len()
                )));
            }
            for (k, v) in keys.iter().zip(extent) {
                params.insert(k.to_string(), *v as f64);
            }
        }
        scenario.resolve(&params)
    }

    pub fn filter_params(&self) -> Result<FilterParams> {
        let gap = match self.filter.gap {
            Some(g) => g,
            None => self.scenario()?.declared_gap.max(self.effective_gate()?),
        };
        let gap = if gap > 0.0 { gap } else { 1.0 };
        let p = FilterParams {
            gap,
            order: self.filter.order,
            eta: self.filter.eta,
            tol: self.filter.tol,
            clamp: self.filter.clamp,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn effective_gate(&self) -> Result<f64> {
        Ok(self.checks.gap_gate.unwrap_or(self.scenario()?.declared_gap))
    }

    /// Configured checks, or the scenario default set, sorted and deduplicated.
    pub fn check_set(&self) -> Result<Vec<CheckKind>> {
        let scenario = self.scenario()?;
        let mut set = if self.checks.run.is_empty() {
            if scenario.declared_gap > 0.0 {
                let mut v = vec![
                    CheckKind::Filter,
                    CheckKind::Transport,
                    CheckKind::OdIdentities,
                    CheckKind::ParallelTransport,
                    CheckKind::DerivativeSwitch,
                ];
                if scenario.symmetry.is_some() {
                    v.push(CheckKind::Goldstone);
                }
                v
            } else {
                vec![CheckKind::LrProfile, CheckKind::Norms]
            }
        } else {
            self.checks.run.clone()
        };
        set.sort();
        set.dedup();
        Ok(set)
    }

    /// Structural validation beyond the schema.
    pub fn validate(&self) -> Result<()> {
        self.scenario_params()?;
        self.filter_params()?;
        let g = &self.grids;
        if g.steps == 0 {
            return Err(Error::Config("grids.steps must be positive".into()));
        }
        if let Some(p) = g.probes.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Config(format!(
                "grids.probes entries must lie in [0, 1], got {p}"
            )));
        }
        if let Some(t) = g.times.iter().find(|t| !t.is_finite() || **t < 0.0) {
            return Err(Error::Config(format!(
                "grids.times entries must be finite and >= 0, got {t}"
            )));
        }
        if !(self.checks.transport_tol > 0.0) {
            return Err(Error::Config("checks.transport_tol must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_toml_parses() {
        let c = Config::from_toml_str("[scenario]\nname = \"hopping-gauge\"\n").unwrap();
        assert_eq!(c.grids.steps, 64);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_fields_report_location() {
        let err = Config::from_toml_str("[scenario]\nname = \"lr-chain\"\n[grids]\nstep = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("step") && msg.contains("line"), "{msg}");
    }

    #[test]
    fn json_and_toml_agree() {
        let c = Config::for_scenario(find_scenario("kitaev-trivial-path").unwrap());
        let t = Config::from_toml_str(&c.to_toml().unwrap()).unwrap();
        let j = Config::from_json_str(&c.to_json().unwrap()).unwrap();
        assert_eq!(t, c);
        assert_eq!(j, c);
    }
}
