//! End-to-end acceptance gate: one test per criterion, each printing a
//! `criterion N: PASS`/`FAIL` line (visible with `--nocapture`).

use std::process::Command;

use bhchan::capacity::{capacity_cloner, optimize_coherent_information, ChannelPair};
use bhchan::verify::{run_suite, CheckResult, Tolerances};

fn report(n: usize, passed: bool) {
    println!("criterion {n}: {}", if passed { "PASS" } else { "FAIL" });
    assert!(passed, "criterion {n} failed");
}

fn suite_passes(name: &str) -> (bool, Vec<CheckResult>) {
    let checks = run_suite(name, &Tolerances::default()).expect("suite runs");
    (checks.iter().all(|c| c.passed), checks)
}

fn report_suite(n: usize, name: &str) {
    let (passed, checks) = suite_passes(name);
    println!("criterion {n}: {}", if passed { "PASS" } else { "FAIL" });
    for c in checks.iter().filter(|c| !c.passed) {
        println!("  failing: {} ({} vs {})", c.name, c.measured, c.tolerance);
    }
    assert!(passed, "criterion {n} failed");
}

/// Criterion 1: cloner capacities match log2((ℓ+1)/ℓ) and the optimum sits at
/// the maximally mixed input.
#[test]
fn criterion_01_cloner_capacities() {
    let mut ok = true;
    for ell in 1..=6usize {
        let pair = ChannelPair::from_cloner(ell);
        let result = optimize_coherent_information(&pair, 1e-8).unwrap();
        let closed = capacity_cloner(ell).unwrap();
        ok &= (result.value - closed).abs() <= 1e-6;
        ok &= result.optimizer_bloch_radius() <= 1e-3;
    }
    report(1, ok);
}

/// Criterion 2: numeric capacity curve matches the closed-form series within
/// 1e-4 at z ∈ {0.1,…,0.9}, with Q(0)=1 and a decreasing curve.
#[test]
fn criterion_02_capacity_curve() {
    report_suite(2, "capacity");
}

/// Criterion 3: dual-rail block weights and block maps match the closed
/// forms at z ∈ {0.25, 0.5} for ℓ ≤ 6.
#[test]
fn criterion_03_block_structure() {
    report_suite(3, "blocks");
}

/// Criterion 4: complements of the cloners are PPT with zero coherent
/// information.
#[test]
fn criterion_04_complement_entanglement_breaking() {
    report_suite(4, "ppt");
}

/// Criterion 5: the vacuum two-mode-squeezed channel has equal B/E marginals
/// and passes the symmetric-channel verdict.
#[test]
fn criterion_05_vacuum_symmetry() {
    report_suite(5, "symmetric");
}

/// Criterion 6: absorbing channel at g = 0.5 — block-1 depolarizing parameter
/// 2/3, boundary PPT, depolarizing block forms, and the matrix-exponential
/// oracle cross-check.
#[test]
fn criterion_06_absorbing_channel() {
    report_suite(6, "absorbing");
}

/// Criterion 7: ℓ = 2 clone fidelity equals 5/6 on random pure inputs.
#[test]
fn criterion_07_clone_fidelity() {
    report_suite(7, "clone");
}

/// Criterion 8: capacity of a probabilistic direct sum of cloners is the
/// weighted sum of the block capacities.
#[test]
fn criterion_08_direct_sum_lemma() {
    report_suite(8, "dsum");
}

/// Criterion 9: su(2) generator algebra plus trace-preservation and complete
/// positivity of every constructed channel.
#[test]
fn criterion_09_algebra_and_channel_axioms() {
    let (su2_ok, su2_checks) = suite_passes("su2");
    let (_, block_checks) = suite_passes("blocks");
    let axioms: Vec<&CheckResult> = block_checks
        .iter()
        .filter(|c| c.name.contains("trace-preserving") || c.name.contains("completely positive"))
        .collect();
    let ok = su2_ok && !axioms.is_empty() && axioms.iter().all(|c| c.passed);
    for c in su2_checks.iter().filter(|c| !c.passed) {
        println!("  failing: {}", c.name);
    }
    report(9, ok);
}

/// Criterion 10: `verify` and `capacity-curve` are byte-identical across two
/// consecutive runs.
#[test]
fn criterion_10_determinism() {
    let bin = env!("CARGO_BIN_EXE_bhchan");
    let run = |args: &[&str]| {
        let out = Command::new(bin).args(args).output().expect("binary runs");
        assert!(out.status.success(), "command {:?} failed", args);
        out.stdout
    };
    let verify_args = ["verify", "--suite", "su2", "--format", "json"];
    let curve_args =
        ["capacity-curve", "--z-min", "0.1", "--z-max", "0.3", "--steps", "2", "--tol", "1e-3"];
    let ok = run(&verify_args) == run(&verify_args) && run(&curve_args) == run(&curve_args);
    report(10, ok);
}
