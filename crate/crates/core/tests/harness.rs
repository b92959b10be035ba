use specflow_core::harness::{find_scenario, list_scenarios, run_experiment, CheckKind, Config, SEED_ENV};
use specflow_core::Error;

fn config(name: &str) -> Config {
    Config::for_scenario(find_scenario(name).unwrap())
}

fn small_kitaev() -> Config {
    let mut c = config("kitaev-trivial-path");
    c.lattice.extent = Some(vec![4]);
    c.grids.steps = 8;
    c.checks.convergence = false;
    c
}

#[test]
fn listing_is_sorted_and_complete() {
    let names: Vec<&str> = list_scenarios().iter().map(|s| s.name).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    for n in ["constant-family", "kitaev-trivial-path", "lr-chain", "hopping-gauge"] {
        assert!(names.contains(&n), "{n}");
    }
    assert!(list_scenarios().iter().any(|s| s.experimental));
}

#[test]
fn unknown_scenarios_get_a_suggestion() {
    match find_scenario("kitaev") {
        Err(Error::UnknownScenario { suggestion, .. }) => {
            assert_eq!(suggestion.as_deref(), Some("kitaev-trivial-path"))
        }
        other => panic!("{other:?}"),
    }
    match find_scenario("lr-chian") {
        Err(Error::UnknownScenario { suggestion, .. }) => assert_eq!(suggestion.as_deref(), Some("lr-chain")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn described_configs_round_trip() {
    for s in list_scenarios() {
        let c = Config::for_scenario(s);
        let toml = c.to_toml().unwrap();
        assert_eq!(Config::from_toml_str(&toml).unwrap(), c, "{}", s.name);
        let json = c.to_json().unwrap();
        assert_eq!(Config::from_json_str(&json).unwrap(), c, "{}", s.name);
        c.validate().unwrap();
    }
}

#[test]
fn config_errors_name_the_offending_field() {
    let text = "seed = 1\n[scenario]\nname = \"lr-chain\"\n[grids]\nstepz = 4\n";
    let msg = Config::from_toml_str(text).unwrap_err().to_string();
    assert!(msg.contains("stepz"), "{msg}");
    assert!(msg.contains("line 5"), "{msg}");

    let mut c = config("lr-chain");
    c.scenario.params.insert("sitez".into(), 4.0);
    let msg = c.validate().unwrap_err().to_string();
    assert!(msg.contains("sitez") && msg.contains("sites"), "{msg}");

    let mut c = config("lr-chain");
    c.lattice.extent = Some(vec![3, 3]);
    assert!(matches!(c.validate(), Err(Error::Config(_))));

    let mut c = config("lr-chain");
    c.grids.probes = vec![1.5];
    assert!(matches!(c.validate(), Err(Error::Config(_))));
}

#[test]
fn seed_comes_from_the_environment() {
    let mut c = config("constant-family");
    std::env::set_var(SEED_ENV, "4242");
    c.apply_env().unwrap();
    assert_eq!(c.seed, 4242);
    std::env::set_var(SEED_ENV, "not-a-seed");
    assert!(matches!(c.apply_env(), Err(Error::Config(_))));
    std::env::remove_var(SEED_ENV);
}

#[test]
fn default_check_sets() {
    let gated = config("hopping-gauge").check_set().unwrap();
    assert!(gated.contains(&CheckKind::Goldstone));
    assert!(gated.contains(&CheckKind::Transport));
    let ungated = config("lr-chain").check_set().unwrap();
    assert_eq!(ungated, vec![CheckKind::LrProfile, CheckKind::Norms]);
}

#[test]
fn closing_gap_stops_before_any_check() {
    let mut c = small_kitaev();
    // μ runs from 3.5 through the transition at 2|J| down to 0
    c.scenario.params.insert("mu1".into(), -3.5);
    match run_experiment(&c) {
        Err(Error::GapGate {
            gap,
            declared,
            spectrum,
            ..
        }) => {
            assert!(gap < declared);
            assert!(!spectrum.is_empty());
        }
        Err(e) => panic!("unexpected error {e}"),
        Ok(_) => panic!("gate should have failed"),
    }
}

#[test]
fn constant_family_passes_everything() {
    let mut c = config("constant-family");
    c.lattice.extent = Some(vec![4]);
    c.grids.steps = 8;
    c.grids.samples = 4;
    c.checks.run = vec![
        CheckKind::Filter,
        CheckKind::Transport,
        CheckKind::OdIdentities,
        CheckKind::ParallelTransport,
        CheckKind::DerivativeSwitch,
        CheckKind::Goldstone,
    ];
    let out = run_experiment(&c).unwrap();
    for check in &out.manifest.checks {
        assert!(check.passed, "{check:?}");
    }
    assert!(out.manifest.passed);
    assert_eq!(out.manifest.checks.len(), 6);
}

#[test]
fn runs_are_deterministic_and_written_atomically() {
    let mut c = small_kitaev();
    c.checks.run = vec![CheckKind::Transport, CheckKind::OdIdentities];
    c.grids.samples = 3;
    let mut first = run_experiment(&c).unwrap();
    let second = run_experiment(&c).unwrap();
    assert_eq!(first.manifest.input_hash, second.manifest.input_hash);
    assert_eq!(first.artifacts.len(), second.artifacts.len());
    for (a, b) in first.artifacts.iter().zip(&second.artifacts) {
        assert_eq!(a.name, b.name);
        assert_eq!(a.contents, b.contents, "{}", a.name);
    }
    assert!(first.manifest.passed, "{:?}", first.manifest.checks);

    let root = tempfile::tempdir().unwrap();
    let dir = first.write(root.path()).unwrap();
    assert!(dir.starts_with(root.path().join("kitaev-trivial-path")));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["input_hash"], first.manifest.input_hash.as_str());
    assert_eq!(manifest["seed"], 0);
    for a in &first.artifacts {
        assert_eq!(std::fs::read(dir.join(&a.name)).unwrap(), a.contents);
    }
    let leftovers: Vec<_> = std::fs::read_dir(root.path().join("kitaev-trivial-path"))
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with(".partial-"))
        .collect();
    assert!(leftovers.is_empty());

    let mut reseeded = c.clone();
    reseeded.seed = 7;
    assert_ne!(
        specflow_core::harness::input_hash(&reseeded).unwrap(),
        first.manifest.input_hash
    );
}
