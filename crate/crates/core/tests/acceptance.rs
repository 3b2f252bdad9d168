//! Acceptance gate: every criterion at its stated tolerance, one line each.
//!
//! Criteria run one at a time so the runtime limits measure a quiet machine.
//! Each result line goes straight to stderr, past the harness capture.

use std::io::Write;
use std::sync::Mutex;

use dirac_phase::verify::{self, CriterionReport, VerifyOptions};

static SERIAL: Mutex<()> = Mutex::new(());

fn gate(run: impl FnOnce() -> dirac_phase::Result<Vec<CriterionReport>>) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let reports = run().expect("criterion ran to completion");
    let mut err = std::io::stderr().lock();
    for r in &reports {
        let mark = if r.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(err, "acceptance [{mark}] criterion {:>2}: {}", r.id, r.title);
    }
    drop(err);
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| r.to_string()).collect();
    assert!(failed.is_empty(), "\n{}", failed.join("\n"));
}

fn opts() -> VerifyOptions {
    VerifyOptions::default()
}

#[test]
fn criterion_01_02_wiener_uniform() {
    gate(|| Ok(verify::wiener_uniform(&opts())?.to_vec()));
}

#[test]
fn criterion_03_ou_uniform_scaling() {
    gate(|| Ok(vec![verify::ou_uniform_scaling(&opts())?]));
}

#[test]
fn criterion_04_monopole_wiener() {
    gate(|| Ok(vec![verify::monopole_wiener(&opts())?]));
}

#[test]
fn criterion_05_sqrt_law() {
    gate(|| Ok(vec![verify::sqrt_law(&opts())?.0]));
}

#[test]
fn criterion_06_transient() {
    gate(|| Ok(vec![verify::transient(&opts())?]));
}

#[test]
fn criterion_07_gauge_invariance() {
    gate(|| Ok(vec![verify::gauge_invariance()?]));
}

#[test]
fn criterion_08_geometry() {
    gate(|| Ok(vec![verify::geometry()?]));
}

#[test]
fn criterion_09_field_curl() {
    gate(|| Ok(vec![verify::field_curl()?]));
}

#[test]
fn criterion_10_determinism() {
    gate(|| Ok(vec![verify::determinism(&opts())?]));
}
