use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use specflow_core::filter::{build_filter, FilterParams};
use specflow_core::harness::{
    find_scenario, list_scenarios, run_experiment, two_level_offgap, CheckKind, Config, RunOutcome,
};
use specflow_core::{par, Error};

const EXIT_CONFIG: u8 = 1;
const EXIT_GAP_GATE: u8 = 2;
const EXIT_CHECK_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "specflow", version, about = "Spectral-flow workbench for lattice fermions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML or JSON experiment config.
    config: PathBuf,
    /// Worker threads (default: logical cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output root (default: `[output] dir` of the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the manifest without writing files.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured check.
    Run(RunArgs),
    /// Build a filter and report its self-checks as JSON.
    CheckFilter {
        #[arg(long)]
        gap: f64,
        #[arg(long, default_value_t = 6)]
        order: usize,
        #[arg(long, default_value_t = 0.9)]
        eta: f64,
        /// Keep a gap above 1 instead of clamping it.
        #[arg(long)]
        no_clamp: bool,
    },
    /// Light-cone commutator profile only.
    LrProfile(RunArgs),
    /// Ground-state transport only.
    Transport(RunArgs),
    /// Norm inequalities only.
    Norms(RunArgs),
    /// List the built-in scenarios.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Show a scenario as a ready-to-run config.
    Describe {
        name: String,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args, None),
        Command::LrProfile(args) => run(args, Some(CheckKind::LrProfile)),
        Command::Transport(args) => run(args, Some(CheckKind::Transport)),
        Command::Norms(args) => run(args, Some(CheckKind::Norms)),
        Command::CheckFilter {
            gap,
            order,
            eta,
            no_clamp,
        } => check_filter(gap, order, eta, !no_clamp),
        Command::List { json } => list(json),
        Command::Describe { name, json } => describe(&name, json),
    };
    match result {
        Ok(code) => code,
        Err(e) => report(e),
    }
}

fn report(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::GapGate { spectrum, .. } => {
            eprintln!("lowest energies:");
            for (i, ev) in spectrum.iter().enumerate() {
                eprintln!("  E[{i:2}] = {ev:+.12e}");
            }
            ExitCode::from(EXIT_GAP_GATE)
        }
        _ => ExitCode::from(EXIT_CONFIG),
    }
}

fn load(path: &Path) -> Result<Config, Error> {
    let mut config = Config::load(path)?;
    config.apply_env()?;
    Ok(config)
}

fn run(args: RunArgs, only: Option<CheckKind>) -> Result<ExitCode, Error> {
    let mut config = load(&args.config)?;
    if let Some(kind) = only {
        config.checks.run = vec![kind];
    }
    par::init_pool(args.jobs);
    let mut outcome = run_experiment(&config)?;
    print_summary(&outcome);
    if args.dry_run {
        println!("{}", serde_json::to_string_pretty(&outcome.manifest)?);
    } else {
        let root = args.out.unwrap_or_else(|| config.output.dir.clone());
        let dir = outcome.write(&root)?;
        println!("wrote {}", dir.display());
    }
    Ok(if outcome.manifest.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK_FAILED)
    })
}

fn print_summary(outcome: &RunOutcome) {
    let m = &outcome.manifest;
    println!("scenario {}  seed {}  hash {}", m.scenario, m.seed, &m.input_hash[..16]);
    for c in &m.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        let metrics: Vec<String> = c.metrics.iter().map(|(k, v)| format!("{k}={v:.3e}")).collect();
        println!("{status} {:<20} {:>8.2}s  {}", c.name, c.seconds, metrics.join(" "));
        if let Some(note) = &c.note {
            println!("     {note}");
        }
    }
}

fn check_filter(gap: f64, order: usize, eta: f64, clamp: bool) -> Result<ExitCode, Error> {
    let filter = build_filter(FilterParams {
        gap,
        order,
        eta,
        clamp,
        ..FilterParams::default()
    })
    .map_err(|e| Error::Config(e.to_string()))?;
    let normalization = filter.normalization_residual();
    let offgap = two_level_offgap(&filter)?;
    let oddness = filter.oddness_defect();
    let report = json!({
        "g": filter.gap(),
        "N": filter.order(),
        "eta": eta,
        "T": filter.cutoff(),
        "normalization_residual": normalization,
        "offgap_residual": offgap,
        "oddness_defect": oddness,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    let ok = normalization <= 1e-8 && offgap <= 1e-6 && oddness == 0.0;
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK_FAILED)
    })
}

fn list(as_json: bool) -> Result<ExitCode, Error> {
    if as_json {
        println!("{}", serde_json::to_string_pretty(list_scenarios())?);
    } else {
        for s in list_scenarios() {
            let flag = if s.experimental { " [experimental]" } else { "" };
            println!("{:<20} {}{flag}", s.name, s.summary);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn describe(name: &str, as_json: bool) -> Result<ExitCode, Error> {
    let scenario = find_scenario(name)?;
    let config = Config::for_scenario(scenario);
    if as_json {
        let out = json!({ "scenario": scenario, "config": config });
        println!("{}", serde_json::to_string_pretty(&out)?);
        return Ok(ExitCode::SUCCESS);
    }
    println!("# {}: {}", scenario.name, scenario.summary);
    if scenario.experimental {
        println!("# experimental");
    }
    let gate = if scenario.declared_gap > 0.0 {
        scenario.declared_gap.to_string()
    } else {
        "none".to_string()
    };
    println!("# default gap gate: {gate}");
    if let Some(sym) = scenario.symmetry {
        println!("# symmetry: {sym:?}");
    }
    println!("# parameters:");
    for p in scenario.params {
        println!("#   {:<6} = {:<6}  {}", p.name, p.default, p.meaning);
    }
    println!();
    print!("{}", config.to_toml()?);
    Ok(ExitCode::SUCCESS)
}
