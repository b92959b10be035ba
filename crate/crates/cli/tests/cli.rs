use std::path::Path;
use std::process::{Command, Output};

fn specflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specflow"))
        .args(args)
        .env_remove("SPECFLOW_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const CONSTANT: &str = r#"
seed = 3

[scenario]
name = "constant-family"

[lattice]
extent = [4]

[grids]
steps = 8
samples = 4

[checks]
run = ["filter", "transport", "goldstone"]
"#;

#[test]
fn list_prints_every_scenario() {
    let o = specflow(&["list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in ["constant-family", "kitaev-trivial-path", "lr-chain"] {
        assert!(text.contains(name), "{text}");
    }
    let o = specflow(&["list", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.as_array().unwrap().len() >= 5);
}

#[test]
fn describe_emits_a_runnable_config() {
    let o = specflow(&["describe", "lr-chain"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("[scenario]"));
    let o = specflow(&["describe", "lr-chian"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("did you mean `lr-chain`"), "{}", stderr(&o));
}

#[test]
fn check_filter_reports_json() {
    let o = specflow(&["check-filter", "--gap", "0.8", "--order", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["g"], 0.8);
    assert_eq!(v["N"], 4);
    assert!(v["normalization_residual"].as_f64().unwrap() <= 1e-8);
    assert!(v["offgap_residual"].as_f64().unwrap() <= 1e-6);
    assert_eq!(v["oddness_defect"], 0.0);
    let o = specflow(&["check-filter", "--gap=-1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn run_writes_manifest_and_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", CONSTANT);
    let out = dir.path().join("out");
    let o = specflow(&["run", &cfg, "--out", out.to_str().unwrap(), "--jobs", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}\n{}", stdout(&o), stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("PASS filter"), "{text}");
    let runs: Vec<_> = std::fs::read_dir(out.join("constant-family")).unwrap().collect();
    assert_eq!(runs.len(), 1);
    let run = runs.into_iter().next().unwrap().unwrap().path();
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["passed"], true);
    assert!(run.join("transport.csv").exists());
}

#[test]
fn dry_run_writes_nothing_and_env_seed_wins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", CONSTANT);
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_specflow"))
        .args(["transport", &cfg, "--dry-run", "--out", out.to_str().unwrap()])
        .env("SPECFLOW_SEED", "99")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("\"seed\": 99"));
    assert!(!out.exists());
}

#[test]
fn closing_gap_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "k.toml",
        r#"
[scenario]
name = "kitaev-trivial-path"
params = { sites = 4, mu1 = -3.5 }

[grids]
steps = 8
"#,
    );
    let o = specflow(&["run", &cfg, "--dry-run"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("gap gate failed"));
    assert!(stderr(&o).contains("E[ 0]"));
}

#[test]
fn bad_configs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        "[scenario]\nname = \"lr-chain\"\n[checks]\nrun = [\"bogus\"]\n",
    );
    let o = specflow(&["run", &cfg, "--dry-run"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("bad.toml") && err.contains("line 4"), "{err}");

    let cfg = write_config(dir.path(), "typo.json", r#"{"scenario": {"name": "kitaev-trivial"}}"#);
    let o = specflow(&["run", &cfg, "--dry-run"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("kitaev-trivial-path"), "{}", stderr(&o));

    let o = specflow(&["run", "/nonexistent/config.toml"]);
    assert_eq!(o.status.code(), Some(1));
}
