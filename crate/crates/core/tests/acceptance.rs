//! Acceptance suite. Runs with `harness = false`: one line per criterion,
//! nonzero exit status if any criterion fails or exceeds its time budget.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use specflow_core::harness::{
    find_scenario, function_estimate_violations, run_experiment, CheckKind, CheckResult, Config, RunOutcome,
};

struct Verdict {
    passed: bool,
    detail: String,
}

fn config(scenario: &str, sites: usize, checks: &[CheckKind]) -> Config {
    let mut c = Config::for_scenario(find_scenario(scenario).unwrap());
    c.lattice.extent = Some(vec![sites]);
    c.checks.run = checks.to_vec();
    c
}

fn run(c: &Config) -> Result<RunOutcome, String> {
    run_experiment(c).map_err(|e| e.to_string())
}

fn check(out: &RunOutcome, kind: CheckKind) -> Result<&CheckResult, String> {
    out.manifest
        .checks
        .iter()
        .find(|c| c.name == kind.name())
        .ok_or_else(|| format!("check {} missing", kind.name()))
}

fn metric(c: &CheckResult, name: &str) -> Result<f64, String> {
    c.metrics
        .get(name)
        .copied()
        .ok_or_else(|| format!("{}: metric {name} missing", c.name))
}

/// Collects `value ≤ tol` comparisons into one verdict.
struct Bounds {
    passed: bool,
    parts: Vec<String>,
}

impl Bounds {
    fn new() -> Self {
        Bounds {
            passed: true,
            parts: Vec::new(),
        }
    }

    fn at_most(&mut self, name: &str, value: f64, tol: f64) -> &mut Self {
        let ok = value <= tol;
        self.passed &= ok;
        self.parts
            .push(format!("{name}={value:.3e}{}{tol:.0e}", if ok { "<=" } else { ">" }));
        self
    }

    fn at_least(&mut self, name: &str, value: f64, min: f64) -> &mut Self {
        let ok = value >= min;
        self.passed &= ok;
        self.parts
            .push(format!("{name}={value:.3}{}{min}", if ok { ">=" } else { "<" }));
        self
    }

    fn flag(&mut self, name: &str, ok: bool) -> &mut Self {
        self.passed &= ok;
        self.parts.push(format!("{name}={ok}"));
        self
    }

    fn verdict(&self) -> Verdict {
        Verdict {
            passed: self.passed,
            detail: self.parts.join(" "),
        }
    }
}

fn od_identities() -> Result<Vec<Verdict>, String> {
    let mut c = config("kitaev-trivial-path", 6, &[CheckKind::OdIdentities]);
    c.grids.samples = 20;
    c.grids.probes = vec![0.5];
    let out = run(&c)?;
    let od = check(&out, CheckKind::OdIdentities)?;
    let mut blocks = Bounds::new();
    blocks.at_most("ground_blocks", metric(od, "ground_blocks")?, 1e-6);
    let mut split = Bounds::new();
    split.at_most("split", metric(od, "split_residual")?, 1e-7);
    Ok(vec![blocks.verdict(), split.verdict()])
}

fn transport_equivalence() -> Result<Vec<Verdict>, String> {
    let mut c = config("kitaev-trivial-path", 8, &[CheckKind::Transport]);
    c.grids.steps = 64;
    c.filter.order = 6;
    c.checks.convergence = true;
    c.checks.transport_tol = 1e-3;
    let out = run(&c)?;
    let t = check(&out, CheckKind::Transport)?;
    let mut b = Bounds::new();
    b.at_most("max_error", metric(t, "max_transport_error")?, 1e-3)
        .at_least("reduction", metric(t, "reduction")?, 2.0);
    Ok(vec![b.verdict()])
}

fn parallel_transport() -> Result<Vec<Verdict>, String> {
    let mut c = config("kitaev-trivial-path", 6, &[CheckKind::ParallelTransport]);
    c.grids.samples = 20;
    c.grids.probes = vec![0.25, 0.5, 0.75];
    let out = run(&c)?;
    let p = check(&out, CheckKind::ParallelTransport)?;
    let diag = metric(p, "max_trace_diagonal")?;
    let reference = metric(p, "max_trace_reference")?;
    let mut b = Bounds::new();
    // per-point comparison happens inside the check; this is the global form
    b.at_most("tr(Pdot A^D)", diag, 1e-4 * reference + 1e-6)
        .flag("per_point", p.passed);
    Ok(vec![b.verdict()])
}

fn gauge_invariance() -> Result<Vec<Verdict>, String> {
    let mut c = config("hopping-gauge", 6, &[CheckKind::Goldstone]);
    c.grids.samples = 10;
    let out = run(&c)?;
    let g = check(&out, CheckKind::Goldstone)?;
    let mut c = config("constant-family", 6, &[CheckKind::Transport]);
    c.checks.convergence = false;
    let constant = run(&c)?;
    let t = check(&constant, CheckKind::Transport)?;
    let mut b = Bounds::new();
    b.at_most("[P,N]", metric(g, "charge_commutator")?, 1e-8)
        .at_most("invariance", metric(g, "invariance")?, 1e-6)
        .at_most("identity", metric(t, "identity_deviation")?, 1e-10);
    Ok(vec![b.verdict()])
}

fn commutator_bound() -> Result<Vec<Verdict>, String> {
    let mut c = config("lr-chain", 6, &[CheckKind::Norms]);
    c.grids.pairs = 50;
    let out = run(&c)?;
    let n = check(&out, CheckKind::Norms)?;
    let mut b = Bounds::new();
    b.at_most("violations", metric(n, "commutator_bound_violations")?, 0.0);
    b.parts
        .push(format!("max_ratio={:.3e}", metric(n, "max_commutator_bound_ratio")?));
    Ok(vec![b.verdict()])
}

fn filter_correctness() -> Result<Vec<Verdict>, String> {
    let c = config("kitaev-trivial-path", 6, &[CheckKind::Filter]);
    let out = run(&c)?;
    let f = check(&out, CheckKind::Filter)?;
    let mut b = Bounds::new();
    b.at_most("normalization", metric(f, "normalization_residual")?, 1e-8)
        .at_most("oddness", metric(f, "oddness_defect")?, 0.0)
        .at_most("offgap", metric(f, "offgap_residual")?, 1e-6);
    Ok(vec![b.verdict()])
}

fn function_estimate() -> Result<Vec<Verdict>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let violations = function_estimate_violations(&mut rng, 10_000);
    let mut b = Bounds::new();
    b.at_most("violations", violations as f64, 0.0);
    Ok(vec![b.verdict()])
}

fn derivation() -> Result<Vec<Verdict>, String> {
    let mut c = config("kitaev-trivial-path", 6, &[CheckKind::Derivation]);
    c.grids.samples = 10;
    let out = run(&c)?;
    let d = check(&out, CheckKind::Derivation)?;
    let mut b = Bounds::new();
    b.at_most("reassembly", metric(d, "reassembly")?, 1e-12).at_most(
        "derivation",
        metric(d, "derivation_residual")?,
        1e-5,
    );
    Ok(vec![b.verdict()])
}

fn lr_profile() -> Result<Vec<Verdict>, String> {
    let c = config("lr-chain", 10, &[CheckKind::LrProfile]);
    let out = run(&c)?;
    let l = check(&out, CheckKind::LrProfile)?;
    let mut b = Bounds::new();
    b.at_most("t0_commutator", metric(l, "t0_disjoint_commutator")?, 0.0)
        .at_least("min_envelope_residual", metric(l, "min_envelope_residual")?, 0.0);
    Ok(vec![b.verdict()])
}

/// Criteria sharing one computation and one time budget.
type Group = (&'static [&'static str], u64, fn() -> Result<Vec<Verdict>, String>);

fn main() -> ExitCode {
    let groups: [Group; 9] = [
        (&["1 off-diagonal identity", "2 od-splitting"], 60, od_identities),
        (&["3 finite-volume automorphic equivalence"], 600, transport_equivalence),
        (&["4 parallel transport"], 120, parallel_transport),
        (&["5 gauge invariance and constant family"], 60, gauge_invariance),
        (&["6 commutator bound"], 120, commutator_bound),
        (&["7 filter correctness"], 10, filter_correctness),
        (&["8 function estimate"], 1, function_estimate),
        (&["9 derivation equality and telescoping"], 300, derivation),
        (&["10 light-cone profile"], 180, lr_profile),
    ];
    let only: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (names, budget, f) in groups {
        if only
            .as_ref()
            .is_some_and(|p| !names.iter().any(|n| n.contains(p.as_str())))
        {
            continue;
        }
        let clock = Instant::now();
        let result = f();
        let elapsed = clock.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let verdicts: Vec<(bool, String)> = match result {
            Ok(v) => v.into_iter().map(|v| (v.passed && in_time, v.detail)).collect(),
            Err(e) => names.iter().map(|_| (false, format!("error: {e}"))).collect(),
        };
        for (name, (ok, detail)) in names.iter().zip(verdicts) {
            if !ok {
                failed += 1;
            }
            println!(
                "[{}] C{name}: {detail} ({:.1}s of {budget}s{})",
                if ok { "PASS" } else { "FAIL" },
                elapsed.as_secs_f64(),
                if in_time { "" } else { ", over budget" }
            );
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion line(s) failed");
        ExitCode::FAILURE
    }
}
