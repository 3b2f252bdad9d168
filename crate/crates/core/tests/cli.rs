//! End-to-end runs of the `dirac-phase` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dirac_phase::cli::{parse_sweep_csv, FIT_HEADER, SUMMARY_HEADER, SWEEP_HEADER};

const BIN: &str = env!("CARGO_BIN_EXE_dirac-phase");

const SMALL: &str = "\
field = monopole
noise = ou
drift = precession
theta0 = 0.9553166181245093
T = 2
steps = 40
samples = 300
seed = 17
gamma = 1
epsilon = 0.05
bootstrap = 50
";

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn simulate(config: &str, out: &Path, workers: &str) -> Output {
    run(&["simulate", "--config", config, "--out-dir", out.to_str().unwrap(), "--workers", workers])
}

#[test]
fn simulate_is_byte_identical_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", SMALL);
    let outs: Vec<_> = [("a", "1"), ("b", "1"), ("c", "8")]
        .iter()
        .map(|(sub, w)| {
            let out = dir.path().join(sub);
            let o = simulate(&cfg, &out, w);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            (fs::read(out.join("ensemble.csv")).unwrap(), fs::read(out.join("summary.csv")).unwrap())
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
    assert_eq!(outs[0], outs[2]);

    let summary = String::from_utf8(outs[0].1.clone()).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some(SUMMARY_HEADER));
    assert!(lines.next().unwrap().starts_with("300,0,"));
    let ensemble = String::from_utf8(outs[0].0.clone()).unwrap();
    assert_eq!(ensemble.lines().count(), 301);
}

#[test]
fn different_seed_changes_the_ensemble() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.cfg", SMALL);
    let b = write(dir.path(), "b.cfg", &SMALL.replace("seed = 17", "seed = 18"));
    assert!(simulate(&a, &dir.path().join("a"), "1").status.success());
    assert!(simulate(&b, &dir.path().join("b"), "1").status.success());
    let read = |s: &str| fs::read(dir.path().join(s).join("ensemble.csv")).unwrap();
    assert_ne!(read("a"), read("b"));
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for (name, text) in [
        ("missing.cfg", SMALL.replace("steps = 40\n", "")),
        ("unknown.cfg", format!("{SMALL}colour = red\n")),
        ("negative.cfg", SMALL.replace("T = 2", "T = -2")),
        ("both.cfg", format!("{SMALL}D = 0.005\n")),
        ("nan.cfg", SMALL.replace("epsilon = 0.05", "epsilon = nan")),
    ] {
        let cfg = write(dir.path(), name, &text);
        let o = simulate(&cfg, &out, "1");
        assert_eq!(o.status.code(), Some(1), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(run(&["simulate", "--config", "/nonexistent/x.cfg", "--out-dir", "o"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["simulate"]).status.code(), Some(1));
    let cfg = write(dir.path(), "ok.cfg", SMALL);
    assert_eq!(simulate(&cfg, &out, "0").status.code(), Some(1));
}

#[test]
fn config_line_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", &SMALL.replace("steps = 40", "steps = forty"));
    let o = simulate(&cfg, &dir.path().join("o"), "1");
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 6"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn singular_run_aborts_with_two() {
    // zero noise on the polar axis: every trajectory sits on the string
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("drift = precession", "drift = trivial").replace("theta0 = 0.9553166181245093", "theta0 = 0").replace("epsilon = 0.05", "epsilon = 0");
    let cfg = write(dir.path(), "axis.cfg", &text);
    let o = simulate(&cfg, &dir.path().join("o"), "1");
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn sweep_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sweep.cfg", &SMALL.replace("drift = precession", "drift = trivial"));
    let out = dir.path().join("sweep");
    let o = run(&["sweep", "--config", &cfg, "--n-values", "2,4,8", "--out-dir", out.to_str().unwrap(), "--workers", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(text.starts_with(SWEEP_HEADER));
    let points = parse_sweep_csv(&text, "sweep.csv").unwrap();
    assert_eq!(points.iter().map(|p| p.n).collect::<Vec<_>>(), [2.0, 4.0, 8.0]);
    assert!(points.iter().all(|p| p.sigma > 0.0 && p.sigma_stderr > 0.0));

    let o = run(&["fit", "--sweep-csv", out.join("sweep.csv").to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_to_string(out.join("fit.csv")).unwrap().starts_with(FIT_HEADER));

    let o = run(&["sweep", "--config", &cfg, "--n-values", "4,2", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fit_recovers_synthetic_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = format!("{SWEEP_HEADER}\n");
    for n in [5.0, 10.0, 20.0, 50.0, 100.0, 200.0f64] {
        text.push_str(&format!("{n},{:.17e},1e-5\n", 0.003 * n.sqrt() + 0.001));
    }
    let sweep = write(dir.path(), "sweep.csv", &text);
    let out = dir.path().join("fit");
    let o = run(&["fit", "--sweep-csv", &sweep, "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fit = fs::read_to_string(out.join("fit.csv")).unwrap();
    let row: Vec<f64> = fit.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((row[0] - 0.003).abs() < 1e-12 && (row[1] - 0.001).abs() < 1e-12, "{fit}");

    let bad = write(dir.path(), "bad.csv", "N,sigma\n1,2\n");
    assert_eq!(run(&["fit", "--sweep-csv", &bad]).status.code(), Some(1));
}
