//! The individual checks of a run.

use std::collections::BTreeMap;
use std::time::Instant;

use faer::{c64, Mat};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{CheckKind, Config};
use super::scenarios::{Scenario, Symmetry};
use crate::car::{max_abs, DenseOperator, MajoranaPolynomial};
use crate::dynamics::{
    diagonalize, fit_envelope, fmt_num, lr_commutator_profile, lr_envelope_inequality, write_profile_csv, Evolution,
};
use crate::error::{Error, Result};
use crate::filter::{verify_fourier_offgap, FilterFunction};
use crate::lattice::{LatticeSpec, SiteSet};
use crate::locality::{
    commutator_bound, liouvillian_norm_ratio, random_quasilocal, terms, Interaction, InteractionFamily,
};
use crate::specflow::{
    derivation_equality, derivative_switch_check, goldstone_check, inverse_liouvillian_op, od_decomposer,
    parallel_transport_check, transport, transport_convergence, FlowConfig, FlowRun, LocalizedInverse,
};

/// Outcome of one check as recorded in the manifest.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub metrics: BTreeMap<String, f64>,
    pub tolerances: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub seconds: f64,
}

/// A CSV file produced by a check.
#[derive(Clone, Debug)]
pub struct Artifact {
    pub name: String,
    pub contents: Vec<u8>,
}

/// Everything the checks share.
pub struct Context<'a> {
    pub config: &'a Config,
    pub scenario: &'static Scenario,
    pub family: InteractionFamily,
    pub filter: FilterFunction,
    pub gate: f64,
}

impl Context<'_> {
    fn lattice(&self) -> LatticeSpec {
        self.family.lattice()
    }

    fn probes(&self) -> Vec<f64> {
        let (a, b) = self.family.interval();
        self.config.grids.probes.iter().map(|f| a + (b - a) * f).collect()
    }

    fn seed(&self, kind: CheckKind) -> u64 {
        self.config.seed ^ (kind as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
    }
}

/// Seeded random dense operators over all modes.
pub fn sample_operators(lattice: LatticeSpec, seed: u64, count: usize) -> Vec<DenseOperator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| MajoranaPolynomial::random(&mut rng, lattice, lattice.all_modes(), 16, false).to_dense())
        .collect()
}

/// `N = Σ_x n_x` as an interaction.
pub fn number_interaction(lattice: LatticeSpec) -> Interaction {
    Interaction::from_terms(
        lattice,
        (0..lattice.num_sites()).map(|x| (SiteSet::single(x), terms::onsite(lattice, x, 1.0))),
    )
    .expect("on-site number terms")
}

struct Recorder {
    metrics: BTreeMap<String, f64>,
    tolerances: BTreeMap<String, f64>,
    passed: bool,
    notes: Vec<String>,
}

impl Recorder {
    fn new() -> Self {
        Recorder {
            metrics: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            passed: true,
            notes: Vec::new(),
        }
    }

    fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    /// Record `value ≤ tol` as an asserted metric.
    fn at_most(&mut self, name: &str, value: f64, tol: f64) {
        self.metric(name, value);
        self.tolerances.insert(name.to_string(), tol);
        if !(value <= tol) {
            self.passed = false;
            self.notes.push(format!("{name} = {value:.3e} exceeds {tol:.1e}"));
        }
    }

    fn finish(self, kind: CheckKind, started: Instant) -> CheckResult {
        CheckResult {
            name: kind.name().to_string(),
            passed: self.passed,
            metrics: self.metrics,
            tolerances: self.tolerances,
            note: if self.notes.is_empty() {
                None
            } else {
                Some(self.notes.join("; "))
            },
            seconds: started.elapsed().as_secs_f64(),
        }
    }
}

/// Run one check. Errors other than a gap-gate failure are recorded as a
/// failed check.
pub fn run_check(ctx: &Context<'_>, kind: CheckKind) -> Result<(CheckResult, Vec<Artifact>)> {
    let started = Instant::now();
    let outcome = match kind {
        CheckKind::Filter => filter_check(ctx),
        CheckKind::Transport => transport_check(ctx),
        CheckKind::OdIdentities => od_check(ctx),
        CheckKind::ParallelTransport => parallel_check(ctx),
        CheckKind::DerivativeSwitch => switch_check(ctx),
        CheckKind::Goldstone => goldstone(ctx),
        CheckKind::Derivation => derivation_check(ctx),
        CheckKind::LrProfile => lr_check(ctx),
        CheckKind::Norms => norms_check(ctx),
    };
    match outcome {
        Ok((rec, artifacts)) => Ok((rec.finish(kind, started), artifacts)),
        Err(e @ Error::GapGate { .. }) => Err(e),
        Err(e) => {
            let mut rec = Recorder::new();
            rec.passed = false;
            rec.notes.push(e.to_string());
            Ok((rec.finish(kind, started), Vec::new()))
        }
    }
}

type Outcome = Result<(Recorder, Vec<Artifact>)>;

fn filter_check(ctx: &Context<'_>) -> Outcome {
    let f = &ctx.filter;
    let mut rec = Recorder::new();
    rec.metric("gap", f.gap());
    rec.metric("order", f.order() as f64);
    rec.metric("eta", f.params().eta);
    rec.metric("cutoff", f.cutoff());
    rec.at_most("normalization_residual", f.normalization_residual(), 1e-8);
    rec.at_most("oddness_defect", f.oddness_defect(), 0.0);
    let check = two_level_offgap(f)?;
    rec.at_most("offgap_residual", check, 1e-6);
    rec.metric("decay_order", f.decay_order());
    Ok((rec, Vec::new()))
}

/// Off-gap identity on `H = 2g n₀` with the flip `A = a + a^†`.
pub fn two_level_offgap(filter: &FilterFunction) -> Result<f64> {
    let l = LatticeSpec::chain(1)?;
    let h = DenseOperator::number(l, 0).scale_real(2.0 * filter.gap());
    let flip = MajoranaPolynomial::majorana(l, 0).to_dense();
    Ok(verify_fourier_offgap(filter, &h, &flip)?.residual)
}

fn transport_csv(run: &FlowRun) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["s", "gap", "gen_norm", "transport_error", "quad_residual"])?;
    for j in 0..run.grid.len() {
        w.write_record([
            fmt_num(run.grid[j]),
            fmt_num(run.gaps[j]),
            fmt_num(run.generator_norms[j]),
            fmt_num(run.errors[j]),
            fmt_num(run.quad_changes[j]),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn transport_check(ctx: &Context<'_>) -> Outcome {
    let cfg = ctx.config;
    let flow = FlowConfig {
        steps: cfg.grids.steps,
        declared_gap: ctx.gate,
        extra_levels: 0,
        track_number: ctx.scenario.symmetry == Some(Symmetry::Number),
    };
    let mut rec = Recorder::new();
    let mut artifacts = Vec::new();
    let run = if cfg.checks.convergence {
        let conv = transport_convergence(&ctx.filter, &ctx.family, flow)?;
        rec.metric("fine_max_error", conv.fine.max_error);
        rec.metric("reduction", conv.reduction);
        rec.tolerances.insert("reduction_min".into(), 2.0);
        if !conv.converging {
            rec.passed = false;
            rec.notes.push(format!(
                "refinement reduced the error only {:.3}x (fine error {:.3e})",
                conv.reduction, conv.fine.max_error
            ));
        }
        artifacts.push(Artifact {
            name: "transport_fine.csv".into(),
            contents: transport_csv(&conv.fine)?,
        });
        conv.coarse
    } else {
        transport(&ctx.filter, &ctx.family, flow)?
    };
    artifacts.insert(
        0,
        Artifact {
            name: "transport.csv".into(),
            contents: transport_csv(&run)?,
        },
    );
    let tol = if ctx.family.is_constant() {
        1e-10
    } else {
        cfg.checks.transport_tol
    };
    rec.at_most("max_transport_error", run.max_error, tol);
    if ctx.family.is_constant() {
        rec.at_most("identity_deviation", run.identity_deviation, 1e-10);
    } else {
        rec.metric("identity_deviation", run.identity_deviation);
    }
    if !run.number_commutators.is_empty() {
        let max = run.number_commutators.iter().copied().fold(0.0, f64::max);
        rec.at_most("number_commutator", max, 1e-7);
    }
    rec.metric("max_generator_norm", run.max_generator_norm);
    rec.metric("max_panels", run.max_panels as f64);
    rec.metric("min_gap", run.gaps.iter().copied().fold(f64::INFINITY, f64::min));
    Ok((rec, artifacts))
}

fn od_check(ctx: &Context<'_>) -> Outcome {
    let samples = sample_operators(
        ctx.lattice(),
        ctx.seed(CheckKind::OdIdentities),
        ctx.config.grids.samples,
    );
    let mut rec = Recorder::new();
    let (mut blocks, mut split, mut adj) = (0.0f64, 0.0f64, 0.0f64);
    for s in ctx.probes() {
        let spec = diagonalize(&ctx.family.at(s).total_dense())?;
        let inv = od_decomposer(&ctx.filter, &spec)?;
        for a in &samples {
            let dec = inv.decompose(a);
            blocks = blocks.max(dec.ground_blocks(&spec).max());
            split = split.max(dec.split_residual);
            let herm = inv.decompose(&a.hermitian_part());
            let (d, od) = herm.adjoint_defects();
            adj = adj.max(d).max(od);
        }
    }
    rec.at_most("ground_blocks", blocks, 1e-6);
    rec.at_most("split_residual", split, 1e-7);
    rec.at_most("adjoint_defect", adj, 1e-8);
    Ok((rec, Vec::new()))
}

fn parallel_check(ctx: &Context<'_>) -> Outcome {
    let samples = sample_operators(
        ctx.lattice(),
        ctx.seed(CheckKind::ParallelTransport),
        ctx.config.grids.samples,
    );
    let mut rec = Recorder::new();
    let (mut diag, mut reference) = (0.0f64, 0.0f64);
    let mut all = true;
    for s in ctx.probes() {
        let r = parallel_transport_check(&ctx.filter, &ctx.family, s, &samples)?;
        diag = diag.max(r.diagonal);
        reference = reference.max(r.reference);
        all &= r.passed;
    }
    rec.metric("max_trace_diagonal", diag);
    rec.metric("max_trace_reference", reference);
    rec.tolerances.insert("relative".into(), 1e-4);
    rec.tolerances.insert("absolute".into(), 1e-6);
    if !all {
        rec.passed = false;
        rec.notes
            .push("|tr(Pdot A^D)| above 1e-4 max|tr(Pdot A)| + 1e-6".into());
    }
    Ok((rec, Vec::new()))
}

fn switch_check(ctx: &Context<'_>) -> Outcome {
    let samples = sample_operators(
        ctx.lattice(),
        ctx.seed(CheckKind::DerivativeSwitch),
        ctx.config.grids.samples,
    );
    let mut rec = Recorder::new();
    let mut worst = 0.0f64;
    for s in ctx.probes() {
        worst = worst.max(derivative_switch_check(&ctx.family, s, &samples)?.max_residual);
    }
    rec.at_most("max_residual", worst, 1e-5);
    Ok((rec, Vec::new()))
}

fn goldstone(ctx: &Context<'_>) -> Outcome {
    let mut rec = Recorder::new();
    let Some(Symmetry::Number) = ctx.scenario.symmetry else {
        rec.passed = false;
        rec.notes
            .push(format!("scenario `{}` declares no symmetry", ctx.scenario.name));
        return Ok((rec, Vec::new()));
    };
    let samples = sample_operators(ctx.lattice(), ctx.seed(CheckKind::Goldstone), ctx.config.grids.samples);
    let sym = number_interaction(ctx.lattice());
    let phases: Vec<f64> = (0..8).map(|k| std::f64::consts::PI * k as f64 / 4.0).collect();
    let (mut hyp, mut inv, mut charge) = (0.0f64, 0.0f64, 0.0f64);
    for s in ctx.probes() {
        let r = goldstone_check(&ctx.family.at(s), &sym, &phases, &samples)?;
        hyp = hyp.max(r.hypothesis);
        inv = inv.max(r.invariance);
        charge = charge.max(r.charge_commutator);
    }
    rec.metric("hypothesis", hyp);
    rec.at_most("invariance", inv, 1e-6);
    rec.at_most("charge_commutator", charge, 1e-8);
    Ok((rec, Vec::new()))
}

fn derivation_check(ctx: &Context<'_>) -> Outcome {
    let mut rec = Recorder::new();
    let s = ctx.probes().first().copied().unwrap_or(ctx.family.interval().0);
    let h = ctx.family.at(s);
    let phi = ctx.family.derivative_at(s);
    let samples = sample_operators(ctx.lattice(), ctx.seed(CheckKind::Derivation), ctx.config.grids.samples);
    let local = LocalizedInverse::new(&ctx.filter, &h)?;
    let gens = local.generators(&h, &phi)?;
    let check = derivation_equality(&ctx.filter, &h, &phi, &gens, &samples)?;
    rec.at_most("reassembly", check.reassembly, 1e-12);
    rec.at_most("derivation_residual", check.max_residual, 1e-5);
    let n = ctx.lattice().hilbert_dim();
    let mut bulk_sum = Mat::<c64>::zeros(n, n);
    for g in &gens {
        bulk_sum += g.bulk.to_dense().mat();
    }
    let direct = inverse_liouvillian_op(&ctx.filter, local.spectral(), &phi.total_dense())?;
    rec.at_most("interaction_form", max_abs((&bulk_sum - &direct).as_ref()), 1e-5);
    Ok((rec, Vec::new()))
}

/// `A` on site 0 (even), one probe `B_d` on each site `d ≥ 1`.
pub fn lr_operators(lattice: LatticeSpec, seed: u64) -> (MajoranaPolynomial, Vec<(usize, MajoranaPolynomial)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let site_modes = |x: usize| lattice.modes_of(SiteSet::single(x));
    let r = MajoranaPolynomial::random(&mut rng, lattice, site_modes(0), 4, true);
    let a = &MajoranaPolynomial::number(lattice, 0) + &(&r + &r.adjoint()).scale_real(0.5);
    let probes = (1..lattice.num_sites())
        .map(|d| {
            let b = MajoranaPolynomial::random(&mut rng, lattice, site_modes(d), 4, false);
            let b = &b + &MajoranaPolynomial::majorana(lattice, lattice.majorana(d, 0, 0));
            (lattice.distance(0, d), b)
        })
        .collect();
    (a, probes)
}

fn lr_check(ctx: &Context<'_>) -> Outcome {
    let mut rec = Recorder::new();
    let (a, probes) = lr_operators(ctx.lattice(), ctx.seed(CheckKind::LrProfile));
    let evolution = Evolution::from_family(&ctx.family)?;
    let samples = lr_commutator_profile(&evolution, &a, &probes, &ctx.config.grids.times)?;
    let at_zero = samples
        .iter()
        .filter(|s| s.t == 0.0 && s.distance > 0)
        .map(|s| s.commutator_norm)
        .fold(0.0, f64::max);
    rec.at_most("t0_disjoint_commutator", at_zero, 0.0);
    let env = fit_envelope(&samples);
    let min_residual = samples
        .iter()
        .map(|s| env.bound(s.t, s.distance, s.scale) - s.commutator_norm)
        .fold(f64::INFINITY, f64::min);
    rec.metric("min_envelope_residual", min_residual);
    rec.tolerances.insert("min_envelope_residual".into(), 0.0);
    if !(min_residual >= 0.0) {
        rec.passed = false;
        rec.notes
            .push(format!("envelope residual {min_residual:.3e} is negative"));
    }
    rec.metric("envelope_C", env.big_c);
    rec.metric("envelope_c", env.c);
    rec.metric("envelope_nu", env.nu);
    rec.metric("envelope_p", env.p);
    let mut buf = Vec::new();
    write_profile_csv(&mut buf, &samples, &env)?;
    Ok((
        rec,
        vec![Artifact {
            name: "lr_profile.csv".into(),
            contents: buf,
        }],
    ))
}

/// `(pair, ν, m, lhs, rhs)` of one commutator-bound evaluation.
type BoundRow = (usize, f64, f64, f64, f64);

fn norms_check(ctx: &Context<'_>) -> Outcome {
    let mut rec = Recorder::new();
    let lattice = ctx.lattice();
    let n = lattice.num_sites();
    let seed = ctx.seed(CheckKind::Norms);
    let pairs = ctx.config.grids.pairs;
    let rows = crate::par::try_map_range(pairs, |i| -> Result<Vec<BoundRow>> {
        let y = i % n;
        let x = (3 * i + 1) % n;
        let a = random_quasilocal(lattice, seed.wrapping_add(2 * i as u64), y, 3.0, true)?;
        let b = random_quasilocal(lattice, seed.wrapping_add(2 * i as u64 + 1), x, 3.0, false)?;
        let mut out = Vec::with_capacity(9);
        for nu in [0.0, 1.0, 2.0] {
            for m in [0.0, 1.0, 2.0] {
                let r = commutator_bound(&a, y, &b, x, nu, m)?;
                out.push((i, nu, m, r.lhs, r.rhs));
            }
        }
        Ok(out)
    })?;
    let rows: Vec<_> = rows.into_iter().flatten().collect();
    let violations = rows.iter().filter(|r| !(r.3 <= r.4)).count();
    rec.at_most("commutator_bound_violations", violations as f64, 0.0);
    rec.metric(
        "max_commutator_bound_ratio",
        rows.iter().map(|r| r.3 / r.4).fold(0.0, f64::max),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let fe_violations = function_estimate_violations(&mut rng, 10_000);
    rec.at_most("function_estimate_violations", fe_violations as f64, 0.0);

    let (s0, _) = ctx.family.interval();
    let phi = ctx.family.at(s0);
    let mut ratio = 0.0f64;
    for i in 0..4 {
        let x = (i * n) / 4;
        let a = random_quasilocal(lattice, seed.wrapping_add(1000 + i as u64), x, 6.0, true)?;
        for nu in [0.0, 1.0, 2.0] {
            ratio = ratio.max(liouvillian_norm_ratio(&phi, &a, nu, x)?);
        }
    }
    rec.metric("liouvillian_norm_ratio", ratio);

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["pair", "nu", "m", "lhs", "rhs"])?;
    for r in &rows {
        w.write_record([r.0.to_string(), fmt_num(r.1), fmt_num(r.2), fmt_num(r.3), fmt_num(r.4)])?;
    }
    let contents = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok((
        rec,
        vec![Artifact {
            name: "commutator_bound.csv".into(),
            contents,
        }],
    ))
}

/// Draw `(x, n, t, ν)` and count failures of the light-cone function estimate.
pub fn function_estimate_violations<R: rand::Rng>(rng: &mut R, count: usize) -> usize {
    (0..count)
        .filter(|_| {
            let x = rng.random_range(0.0..1e4);
            let n = rng.random_range(1.0..100.0);
            let t = rng.random_range(1e-3..20.0);
            let nu = rng.random_range(0.0..8.0);
            !lr_envelope_inequality(x, n, t, nu)
        })
        .count()
}
