//! End-to-end acceptance gate: one verdict line per shipped guarantee.
//!
//! The adversary/synchrony/committee-size matrix is expensive, so it runs
//! once and the row-based criteria (agreement, both fairness bounds, the
//! guarantee sweep) all read the same rows. The remaining criteria drive
//! their own focused harnesses. This target uses a plain `main` instead of
//! the libtest harness so the PASS/FAIL lines always reach the console, and
//! exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use dcn_core::suites::{
    aa_contract, aba_round_stats, agreement_unique, complexity_fit, crypto_properties,
    default_jobs, determinism, guarantees, matrix_rows, tightness, validity_async,
    validity_sync, SuiteOutcome,
};

/// Seeds per matrix cell (cell = committee size x strategy; the synchrony
/// mode rotates across seeds, except strategies that need the adversarial
/// scheduler, which stay pinned to it).
const MATRIX_SEEDS: usize = 200;
/// Seeds per tightness exhibit.
const TIGHTNESS_SEEDS: usize = 25;
/// Split-input binary-agreement runs for the phase-count statistics.
const ABA_TRIALS: usize = 10_000;
/// Seeds per point of the external-delay sweep behind the round-count fit.
const FIT_SEEDS: usize = 6;

fn report(no: u32, what: &str, outcomes: &[SuiteOutcome], elapsed: Duration) -> bool {
    let pass = outcomes.iter().all(|o| o.pass);
    let detail = outcomes
        .iter()
        .map(|o| format!("{}: {}", o.name, o.detail))
        .collect::<Vec<_>>()
        .join("; ");
    println!(
        "criterion {no} {} — {what} — {detail} [{elapsed:.1?}]",
        if pass { "PASS" } else { "FAIL" },
    );
    pass
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        // Mimic the libtest listing shape so `cargo test -- --list` works.
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    // Respect name filters (`cargo test -p dcn-core some_name` hands the
    // filter to every test binary): only run when unfiltered or matched.
    let filters: Vec<&String> = args.iter().filter(|a| !a.starts_with('-')).collect();
    if !filters.is_empty() && !filters.iter().any(|f| "acceptance".contains(f.as_str())) {
        return ExitCode::SUCCESS;
    }

    let jobs = default_jobs();
    let mut passed = 0u32;
    let mut failed = 0u32;
    let mut tally = |ok: bool| if ok { passed += 1 } else { failed += 1 };

    let t = Instant::now();
    let rows = matrix_rows(MATRIX_SEEDS, jobs);
    println!(
        "matrix: {} instances ({} seeds per cell) in {:.1?}",
        rows.len(),
        MATRIX_SEEDS,
        t.elapsed(),
    );

    let t = Instant::now();
    tally(report(
        1,
        "every run agrees on one timestamp per transaction",
        &[agreement_unique(&rows)],
        t.elapsed(),
    ));

    let t = Instant::now();
    tally(report(
        2,
        "asynchronous runs stay within f ranks of the honest median",
        &[validity_async(&rows)],
        t.elapsed(),
    ));

    let t = Instant::now();
    tally(report(
        3,
        "synchronous runs stay within ceil(f/2) ranks, inside the asymmetric interval",
        &[validity_sync(&rows)],
        t.elapsed(),
    ));

    let t = Instant::now();
    tally(report(
        4,
        "both rank bounds are achieved with equality by targeted schedules",
        &[tightness(TIGHTNESS_SEEDS, jobs)],
        t.elapsed(),
    ));

    let t = Instant::now();
    tally(report(
        5,
        "liveness, integrity and fair timestamping hold; completion grows logarithmically in external delay",
        &[guarantees(&rows), complexity_fit(FIT_SEEDS, jobs)],
        t.elapsed(),
    ));

    let t = Instant::now();
    tally(report(
        6,
        "binary agreement decides quickly on split inputs",
        &[aba_round_stats(ABA_TRIALS, jobs)],
        t.elapsed(),
    ));

    let t = Instant::now();
    tally(report(
        7,
        "approximate agreement converges within the documented iteration bound",
        &[aa_contract(jobs)],
        t.elapsed(),
    ));

    let t = Instant::now();
    tally(report(
        8,
        "secret sharing and signatures behave under reconstruction, bias and forgery probes",
        &[crypto_properties()],
        t.elapsed(),
    ));

    let t = Instant::now();
    tally(report(
        9,
        "reruns with the same seed reproduce the event log byte for byte",
        &[determinism()],
        t.elapsed(),
    ));

    println!("acceptance: {passed}/{} criteria passed", passed + failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
