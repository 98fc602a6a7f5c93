use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SMALL_MC: &str = r#"{
  "schedule": { "total_duration_s": 0.05 },
  "engine": { "trajectories": 200 }
}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sympcool"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn error_body(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let v: Value = serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("{e}: {text}"));
    v["error"].clone()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn monte_carlo_output_does_not_depend_on_thread_count() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL_MC);
    let mut csvs = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("t{threads}"));
        let r = run(&["suppress", "--config", s(&cfg), "--backend", "mc", "--seed", "3", "--threads", threads, "--out", s(&out)]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        csvs.push(fs::read(out.join("suppress.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn same_seed_reruns_are_byte_identical_and_other_seeds_differ() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL_MC);
    let go = |seed: &str, tag: &str| {
        let out = dir.path().join(tag);
        let r = run(&["suppress", "--config", s(&cfg), "--backend", "mc", "--seed", seed, "--out", s(&out)]);
        assert!(r.status.success());
        fs::read(out.join("suppress.csv")).unwrap()
    };
    let a = go("11", "a");
    assert_eq!(a, go("11", "b"));
    assert_ne!(a, go("12", "c"));
}

#[test]
fn replaying_a_manifest_reproduces_the_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL_MC);
    let first = dir.path().join("first");
    let r = run(&["suppress", "--config", s(&cfg), "--backend", "mc", "--seed", "5", "--out", s(&first)]);
    assert!(r.status.success());
    let manifest: Value = serde_json::from_slice(&fs::read(first.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "suppress");
    assert_eq!(manifest["seed"], 5);
    let again = dir.path().join("again");
    let r = run(&["replay", s(&first.join("manifest.json")), "--out", s(&again), "--threads", "2"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    for f in ["suppress.csv", "suppress.json"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn csv_outputs_use_bare_line_feeds() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o");
    let r = run(&["modes", "--out", s(&out)]);
    assert!(r.status.success());
    let bytes = fs::read(out.join("modes.csv")).unwrap();
    assert!(!bytes.contains(&b'\r'));
    assert_eq!(bytes.last(), Some(&b'\n'));
}

#[test]
fn modes_lists_every_ion_for_every_mode_on_both_axes() {
    let dir = TempDir::new().unwrap();
    for n in [1usize, 5] {
        let cfg = write_config(dir.path(), &format!("n{n}.json"), &format!(r#"{{"trap": {{"n_ions": {n}}}}}"#));
        let out = dir.path().join(format!("o{n}"));
        let r = run(&["modes", "--config", s(&cfg), "--out", s(&out)]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        let text = fs::read_to_string(out.join("modes.csv")).unwrap();
        assert_eq!(text.lines().count() - 1, 2 * n * n, "{text}");
        let modes: std::collections::BTreeSet<(&str, &str)> =
            text.lines().skip(1).map(|l| { let mut c = l.split(','); (c.next().unwrap(), c.next().unwrap()) }).collect();
        assert_eq!(modes.len(), 2 * n);
    }
}

#[test]
fn unknown_keys_are_rejected_with_their_path() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"trap": {"n_ion": 5}}"#);
    let r = run(&["modes", "--config", s(&cfg), "--out", s(&dir.path().join("o"))]);
    assert_eq!(r.status.code(), Some(2));
    let e = error_body(&r);
    assert_eq!(e["kind"], "unknown_key");
    assert_eq!(e["path"], "trap.n_ion");
    assert!(!dir.path().join("o").exists());
}

#[test]
fn wrong_units_are_reported_as_a_unit_mismatch() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"schedule": {"period_ms": 10}}"#);
    let r = run(&["suppress", "--config", s(&cfg)]);
    assert_eq!(r.status.code(), Some(2));
    let e = error_body(&r);
    assert_eq!(e["kind"], "unit_mismatch");
    assert_eq!(e["path"], "schedule.period_ms");
}

#[test]
fn zigzag_trap_is_refused_before_simulating() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"trap": {"radial_com_freq_hz": 750000.0}}"#);
    let r = run(&["cool", "--config", s(&cfg), "--out", s(&dir.path().join("o"))]);
    assert_eq!(r.status.code(), Some(2));
    let e = error_body(&r);
    assert_eq!(e["kind"], "zigzag_instability");
    assert_eq!(e["path"], "trap.radial_com_freq_hz");
}

#[test]
fn missing_config_file_is_an_io_error() {
    let r = run(&["modes", "--config", "/nonexistent/sympcool.json"]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn allan_reads_a_trace_file() {
    let dir = TempDir::new().unwrap();
    let mut trace = String::from("time_s,value\n");
    for i in 0..2000 {
        trace.push_str(&format!("{},{}\n", f64::from(i) * 1e-3, ((i * 7919) % 101) as f64 / 101.0 - 0.5));
    }
    let input = write_config(dir.path(), "trace.csv", &trace);
    let cfg = write_config(
        dir.path(),
        "c.json",
        &format!(r#"{{"allan": {{"input": {:?}, "taus_s": [0.002, 0.01, 0.1]}}}}"#, s(&input)),
    );
    let out = dir.path().join("o");
    let r = run(&["allan", "--config", s(&cfg), "--out", s(&out)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = fs::read_to_string(out.join("allan.csv")).unwrap();
    assert_eq!(text.lines().count(), 4, "{text}");
}
