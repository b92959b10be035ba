//! Experiment orchestration, manifests and atomic output.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::checks::{run_check, Artifact, CheckResult, Context};
use super::config::{CheckKind, Config};
use super::scenarios::Params;
use crate::error::{Error, Result};
use crate::filter::build_filter;
use crate::specflow::{gap_gate, PDOT_STEP};

pub const SOFTWARE: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Debug, Serialize)]
pub struct FilterSummary {
    pub gap: f64,
    pub order: usize,
    pub eta: f64,
    pub tol: f64,
    pub clamp: bool,
    pub cutoff: f64,
    pub norm_constant: f64,
    pub coefficients: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub software: String,
    /// SHA-256 over the software version and the fully resolved inputs.
    pub input_hash: String,
    pub seed: u64,
    pub scenario: String,
    pub scenario_params: Params,
    pub experimental: bool,
    /// `analytic` or `finite-difference`.
    pub derivative: String,
    pub gap_gate: f64,
    pub filter: FilterSummary,
    pub config: Config,
    pub checks: Vec<CheckResult>,
    pub artifacts: Vec<String>,
    pub passed: bool,
    pub started: String,
    pub wall_seconds: f64,
}

pub struct RunOutcome {
    pub manifest: RunManifest,
    pub artifacts: Vec<Artifact>,
    /// Where the run was written, if it was.
    pub dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct HashedInputs<'a> {
    software: &'a str,
    config: &'a Config,
    params: &'a Params,
    checks: &'a [CheckKind],
}

/// Hex SHA-256 of the resolved inputs.
pub fn input_hash(config: &Config) -> Result<String> {
    let params = config.scenario_params()?;
    let checks = config.check_set()?;
    let bytes = serde_json::to_vec(&HashedInputs {
        software: SOFTWARE,
        config,
        params: &params,
        checks: &checks,
    })?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Run every configured check. Gated checks only start once the spectrum
/// has cleared the gap gate on the transport grid and at every probe point;
/// otherwise the gate error is returned and nothing else runs.
pub fn run_experiment(config: &Config) -> Result<RunOutcome> {
    let clock = Instant::now();
    let started = chrono::Utc::now().format("%Y-%m-%dT%H:%M:%S%.3fZ").to_string();
    config.validate()?;
    let scenario = config.scenario()?;
    let params = config.scenario_params()?;
    let family = scenario.build(&params)?;
    let filter = build_filter(config.filter_params()?)?;
    let gate = config.effective_gate()?;
    let checks = config.check_set()?;

    if gate > 0.0 && checks.iter().any(|c| c.is_gated()) {
        let (a, b) = family.interval();
        let steps = config.grids.steps;
        let mut points: Vec<f64> = (0..=steps).map(|j| a + (b - a) * j as f64 / steps as f64).collect();
        for f in &config.grids.probes {
            let s = a + (b - a) * f;
            points.extend([s - PDOT_STEP, s, s + PDOT_STEP]);
        }
        gap_gate(&family, &points, gate)?;
    }

    let derivative = if family.has_analytic_derivative() || family.is_constant() {
        "analytic"
    } else {
        "finite-difference"
    };
    let ctx = Context {
        config,
        scenario,
        family,
        filter: filter.clone(),
        gate,
    };
    let mut results = Vec::with_capacity(checks.len());
    let mut artifacts = Vec::new();
    for kind in &checks {
        let (result, mut files) = run_check(&ctx, *kind)?;
        results.push(result);
        artifacts.append(&mut files);
    }
    let passed = results.iter().all(|r| r.passed);
    let manifest = RunManifest {
        software: SOFTWARE.to_string(),
        input_hash: input_hash(config)?,
        seed: config.seed,
        scenario: scenario.name.to_string(),
        scenario_params: params,
        experimental: scenario.experimental,
        derivative: derivative.to_string(),
        gap_gate: gate,
        filter: FilterSummary {
            gap: filter.gap(),
            order: filter.order(),
            eta: filter.params().eta,
            tol: filter.params().tol,
            clamp: filter.params().clamp,
            cutoff: filter.cutoff(),
            norm_constant: filter.norm_constant(),
            coefficients: filter.coefficients().to_vec(),
        },
        config: config.clone(),
        checks: results,
        artifacts: artifacts.iter().map(|a| a.name.clone()).collect(),
        passed,
        started,
        wall_seconds: clock.elapsed().as_secs_f64(),
    };
    Ok(RunOutcome {
        manifest,
        artifacts,
        dir: None,
    })
}

impl RunOutcome {
    /// Write `manifest.json` and the CSVs to `<root>/<scenario>/<timestamp>/`.
    /// Files are assembled in a hidden staging directory that is renamed into
    /// place, so a reader never sees a partial run.
    pub fn write(&mut self, root: &Path) -> Result<PathBuf> {
        let parent = root.join(&self.manifest.scenario);
        std::fs::create_dir_all(&parent)?;
        let staging = tempfile::Builder::new().prefix(".partial-").tempdir_in(&parent)?;
        for a in &self.artifacts {
            std::fs::write(staging.path().join(&a.name), &a.contents)?;
        }
        let mut manifest = serde_json::to_vec_pretty(&self.manifest)?;
        manifest.push(b'\n');
        std::fs::write(staging.path().join("manifest.json"), manifest)?;

        let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string();
        let mut target = parent.join(&stamp);
        let mut k = 1;
        while target.exists() {
            target = parent.join(format!("{stamp}-{k}"));
            k += 1;
        }
        let staged = staging.keep();
        std::fs::rename(&staged, &target).map_err(|e| {
            let _ = std::fs::remove_dir_all(&staged);
            Error::Io(e)
        })?;
        self.dir = Some(target.clone());
        Ok(target)
    }
}
