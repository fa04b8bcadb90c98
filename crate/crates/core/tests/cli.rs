use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gibbsfluct::cli::{load_samples, run_analysis, simulate, ExperimentConfig, MANIFEST};
use gibbsfluct::estimators::SampleSet;

const STRAUSS: &str = r#"
[model]
type = "pair"
z = 1.0
beta = 1.0
potential = { kind = "strauss", range = 0.2 }

[window]
side = 2.0
dim = 2

[sampler]
seed = 17
n_samples = 40
n_chains = 3
burn_in = 2000
thin = 20

[analysis]
probes_per_axis = 4
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gibbsfluct"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn gibbsfluct")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("experiment.toml");
    fs::write(&path, text).unwrap();
    path
}

fn simulate_into(config: &Path, out: &Path) {
    let o = run(&["simulate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn simulate_is_byte_identical_across_runs_and_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), STRAUSS);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    simulate_into(&cfg, &a);
    let o = run(&["--threads", "1", "simulate", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let (ta, tb) = (tree(&a), tree(&b));
    assert_eq!(ta.len(), 1 + 3 * 40 * 2, "manifest plus csv and sidecar per snapshot");
    assert!(ta == tb, "sample directories differ");
}

#[test]
fn seed_override_changes_samples_and_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), STRAUSS);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    simulate_into(&cfg, &a);
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap(), "--seed", "99"]);
    assert_eq!(o.status.code(), Some(0));
    let (m, _, _) = load_samples(&b).unwrap();
    assert_eq!(m.resolved.sampler.seed, 99);
    assert!(tree(&a) != tree(&b));
}

#[test]
fn analysis_from_disk_matches_in_process_analysis_bit_for_bit() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), STRAUSS);
    let out = tmp.path().join("samples");
    simulate_into(&cfg, &out);

    let resolved = ExperimentConfig::parse(STRAUSS).unwrap().resolve().unwrap();
    let in_process = SampleSet::from_runs(simulate(&resolved).unwrap()).unwrap();
    let expected = run_analysis(&resolved, &in_process).unwrap();

    let (manifest, _, loaded) = load_samples(&out).unwrap();
    assert_eq!(manifest.resolved, resolved);
    let from_disk = run_analysis(&manifest.resolved, &loaded).unwrap();
    assert_eq!(serde_json::to_string(&from_disk).unwrap(), serde_json::to_string(&expected).unwrap());

    let o = run(&["analyze", "--samples", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("analysis").join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 17);
    for f in ["variance.csv", "structure_factor.csv", "gnz.csv", "a2.csv"] {
        assert!(out.join("analysis").join(f).is_file(), "{f} missing");
    }
}

#[test]
fn missing_or_inconsistent_inputs_exit_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["analyze", "--samples", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains(MANIFEST));

    let o = run(&["simulate", "--config", tmp.path().join("nope.toml").to_str().unwrap(), "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));

    let cfg = write_config(tmp.path(), &STRAUSS.replace("beta = 1.0", "beta = 1.0\ntypo = 3"));
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("typo"));

    // a deleted snapshot no longer matches the manifest
    let cfg = write_config(tmp.path(), STRAUSS);
    let out = tmp.path().join("s");
    simulate_into(&cfg, &out);
    fs::remove_file(out.join("chain_001").join("snap_00003.csv")).unwrap();
    assert!(load_samples(&out).is_err());
    let o = run(&["analyze", "--samples", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bounds_subcommands_print_reference_values() {
    let o = run(&["bounds", "c-d", "--dim", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("c_d"), "{}", stdout(&o));
    let o = run(&["bounds", "--json", "c-d", "--dim", "2"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["entries"][0]["value"].as_f64().unwrap() - 1.0 / 36.0).abs() < 1e-12);

    let o = run(&["bounds", "--json", "beta-critical", "--z", "1", "--K", "1", "--dim", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let value = v["entries"][0]["value"].as_f64().unwrap();
    assert!((value - 0.0270368).abs() < 1e-6, "{value}");

    let o = run(&["bounds", "integrability", "--model", "riesz", "--dim", "2", "--s", "1.5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("non-integrable"), "{}", stdout(&o));
    let o = run(&["bounds", "--json", "integrability", "--model", "riesz", "--dim", "2", "--s", "1.5"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["integrability"]["verdict"], "non_integrable");
}

#[test]
fn check_commands_accept_a_correct_sample_set() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), STRAUSS);
    let out = tmp.path().join("s");
    simulate_into(&cfg, &out);
    let o = run(&["gnz-check", "--samples", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS"));
    let o = run(&["verify-assumptions", "--samples", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn shipped_configs_resolve() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "toml") {
            let text = fs::read_to_string(&p).unwrap();
            ExperimentConfig::parse(&text).and_then(|c| c.resolve()).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
    }
    assert!(n >= 5);
}
