use std::path::Path;
use std::process::{Command, Output};

fn fplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fplab")).args(args).output().expect("spawn fplab")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("override.toml");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL_EIGEN: &str = r#"
seeds = [0]
samples = 16

[model]
widths = [1, 64, 1]

[knobs]
top = 6
"#;

#[test]
fn list_names_every_experiment() {
    let out = fplab(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in fplab_experiments::names() {
        assert!(text.contains(name), "{name} missing from list");
    }
    assert!(text.contains("Fig. onelayer"));
}

#[test]
fn describe_prints_loadable_defaults() {
    let out = fplab(&["describe", "fp-1d"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let table = fplab_io::parse_toml_table(&text).unwrap();
    assert_eq!(table["name"].as_str(), Some("fp-1d"));
}

#[test]
fn unknown_experiment_is_an_error() {
    let out = fplab(&["describe", "no-such-experiment"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("fp-1d"), "valid names listed: {err}");
}

#[test]
fn run_writes_records_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_EIGEN);
    let runs = dir.path().join("runs");
    let out = fplab(&["run", "ntk-eigen", "--config", &cfg, "--out", runs.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let written = std::fs::read_to_string(runs.join("ntk-eigen/summary.txt")).unwrap();
    assert_eq!(stdout, written);
    assert!(runs.join("ntk-eigen/config.toml").exists());
}

#[test]
fn failed_check_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL_EIGEN}min_spearman = 1.5\n"));
    let runs = dir.path().join("runs");
    let out = fplab(&["run", "ntk-eigen", "--config", &cfg, "--out", runs.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(runs.join("ntk-eigen/summary.txt").exists());
}

#[test]
fn bad_overrides_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let runs = dir.path().join("runs");
    let cfg = write_config(dir.path(), "[knobs]\nno_such_knob = 3\n");
    let out = fplab(&["run", "ntk-eigen", "--config", &cfg, "--out", runs.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let missing = dir.path().join("absent.toml");
    let out = fplab(&["run", "ntk-eigen", "--config", missing.to_str().unwrap(), "--out", runs.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let out = fplab(&["run", "ntk-eigen", "--seed-count", "0", "--out", runs.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
