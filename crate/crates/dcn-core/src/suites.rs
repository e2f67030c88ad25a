//! Named experiment suites: batches of simulator runs (or standalone protocol
//! pumps) whose logs are fed to the checker and condensed into one pass/fail
//! verdict each, with the measured numbers in the detail string. The CLI
//! exposes them by name; the acceptance test runs them all.
//!
//! The core workload is the *matrix*: every committee size in {4, 7, 10}
//! crossed with every adversary strategy and many seeds, rotating through the
//! synchrony modes. Agreement/uniqueness, asynchronous and synchronous median
//! validity, and the full guarantee set are all evaluated over the same
//! matrix rows. The remaining suites are targeted: exact-tightness exhibits,
//! binary-agreement phase statistics, the approximate-agreement convergence
//! contract, crypto-layer properties, determinism, and the round-complexity
//! fit.

use crate::checker::{self, FlatRow};
use crate::protocol::messages::{Dest, Outbound, Payload};
use crate::protocol::pi_aa::{round_count, AaState};
use crate::protocol::pi_aba::{AbaState, SeededCoin};
use crate::sim::adversary::Strategy;
use crate::sim::config::{Mode, Scenario};
use crate::sim::kernel;
use crate::value::{ceil_log2, frac, Frac};
use crate::NodeId;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Verdict of one suite: `pass` plus the measurements backing it, and the
/// per-instance rows for export.
#[derive(Debug)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub rows: Vec<FlatRow>,
}

impl SuiteOutcome {
    fn new(name: &'static str, pass: bool, detail: String, rows: Vec<FlatRow>) -> Self {
        SuiteOutcome { name, pass, detail, rows }
    }
}

/// Order-preserving parallel map over a work list (work-stealing by index).
pub fn par_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let jobs = jobs.max(1).min(items.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots.into_iter().map(|s| s.into_inner().unwrap().expect("worker filled slot")).collect()
}

/// Default worker count for this machine.
pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1)
}

// ---------------------------------------------------------------------------
// The matrix: committee sizes x strategies x seeds, modes rotating.

/// Transactions per matrix run; each contributes one checked instance.
const MATRIX_TXS: u32 = 2;

fn mode_rotation(seed: usize) -> Mode {
    [Mode::Synchronous, Mode::AsyncRandom, Mode::AsyncAdversarial, Mode::SyncWindow][seed % 4]
}

fn cell_scenario(n: usize, strategy: Strategy, mode: Mode) -> Scenario {
    let mut sc = Scenario::baseline(n);
    sc.adversary.strategy = strategy;
    sc.synchrony.mode = mode;
    sc.workload.transactions = MATRIX_TXS;
    // Arrival scripts place one receipt per node at distinct offsets, which
    // needs the external window to fit n + f consecutive ticks.
    sc.synchrony.d_ext = sc.synchrony.d_ext.max((n + sc.committee.f) as i64);
    if mode == Mode::SyncWindow {
        // Long enough to cover the first instance's init window; later
        // instances see widened delays.
        sc.synchrony.window = 40;
    }
    if strategy == Strategy::DelayTargeted {
        sc.adversary.delay_kinds = vec!["init_ts".into(), "share_reveal".into()];
        sc.adversary.delay_senders = vec![0];
    }
    sc
}

/// Run the full matrix and return one row per (run, instance).
pub fn matrix_rows(seeds: usize, jobs: usize) -> Vec<FlatRow> {
    let mut cells: Vec<(usize, Strategy, Mode, u64)> = Vec::new();
    for &n in &[4usize, 7, 10] {
        for &st in Strategy::ALL {
            for s in 0..seeds {
                let mode = if st.needs_adversarial_scheduler() {
                    Mode::AsyncAdversarial
                } else {
                    mode_rotation(s)
                };
                cells.push((n, st, mode, s as u64));
            }
        }
    }
    par_map(&cells, jobs, |&(n, st, mode, seed)| {
        let sc = cell_scenario(n, st, mode);
        let out = kernel::run(&sc, seed).expect("matrix scenario validates");
        checker::check(out.log.records()).flat_rows()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Every completed instance agreed on a single timestamp and nothing was
/// certified or accepted twice.
pub fn agreement_unique(rows: &[FlatRow]) -> SuiteOutcome {
    let violations =
        rows.iter().filter(|r| !(r.agreement_ok && r.unique_ok && r.validator_ok)).count();
    let detail = format!(
        "{} instances across {} strategy/size/seed cells; {} agreement or uniqueness violations",
        rows.len(),
        rows.iter().map(|r| (r.n, r.strategy.as_str(), r.seed)).collect::<std::collections::BTreeSet<_>>().len(),
        violations
    );
    SuiteOutcome::new("agreement_unique", !rows.is_empty() && violations == 0, detail, Vec::new())
}

/// Under asynchronous scheduling, every completed instance's timestamp sits
/// within `f` ranks of the honest receipt median.
pub fn validity_async(rows: &[FlatRow]) -> SuiteOutcome {
    let async_rows: Vec<&FlatRow> = rows
        .iter()
        .filter(|r| (r.mode == "async_random" || r.mode == "async_adversarial") && r.completed)
        .collect();
    let violations = async_rows.iter().filter(|r| !r.fair_async_ok).count();
    let max_delta = async_rows.iter().filter_map(|r| r.achieved_delta).max().unwrap_or(0);
    let scenarios_present = ["scenario_a", "scenario_b", "scenario_c"]
        .iter()
        .all(|s| async_rows.iter().any(|r| r.strategy == *s));
    let detail = format!(
        "{} completed async instances; max achieved_delta = {max_delta}; {} beyond f; extremal scenarios present: {scenarios_present}",
        async_rows.len(),
        violations
    );
    SuiteOutcome::new(
        "validity_async",
        !async_rows.is_empty() && violations == 0 && scenarios_present,
        detail,
        Vec::new(),
    )
}

/// Whenever the log shows the synchrony window actually held, the timestamp
/// sits within ceil(f/2) ranks of the median, inside the asymmetric window.
pub fn validity_sync(rows: &[FlatRow]) -> SuiteOutcome {
    let held: Vec<&FlatRow> = rows.iter().filter(|r| r.sync_window_held && r.completed).collect();
    let violations = held.iter().filter(|r| !(r.sync_delta_ok && r.sync_interval_ok)).count();
    let max_delta = held.iter().filter_map(|r| r.achieved_delta).max().unwrap_or(0);
    let extremes_held = held.iter().any(|r| r.strategy == "extreme_timestamps");
    let detail = format!(
        "{} instances with a measured-held window; max achieved_delta = {max_delta}; {} outside the asymmetric bound; extreme-input runs included: {extremes_held}",
        held.len(),
        violations
    );
    SuiteOutcome::new(
        "validity_sync",
        !held.is_empty() && violations == 0 && extremes_held,
        detail,
        Vec::new(),
    )
}

/// The full guarantee set (liveness, integrity, agreement, uniqueness,
/// fairness, reveal gating, block order) over every matrix run.
pub fn guarantees(rows: &[FlatRow]) -> SuiteOutcome {
    let violations = rows.iter().filter(|r| !r.guarantees_ok).count();
    let incomplete = rows.iter().filter(|r| !r.completed).count();
    let detail = format!(
        "{} instances; {} incomplete; {} guarantee violations",
        rows.len(),
        incomplete,
        violations
    );
    SuiteOutcome::new(
        "guarantees",
        !rows.is_empty() && violations == 0 && incomplete == 0,
        detail,
        Vec::new(),
    )
}

// ---------------------------------------------------------------------------
// Tightness: adversaries that meet the fairness bounds with equality.

/// Crafted placements where the bounds are achieved exactly: a low-extreme
/// synchronous run pins `achieved_delta = ceil(f/2)` on every instance, and
/// the two blanket-delay asynchronous placements pin `achieved_delta = f`;
/// the aligned silent placement shows `delta = 0` is reachable too.
pub fn tightness(seeds: usize, jobs: usize) -> SuiteOutcome {
    struct Exhibit {
        label: &'static str,
        strategy: Strategy,
        mode: Mode,
        magnitude: Option<i64>,
        expect: fn(f: i64) -> i64,
    }
    let exhibits = [
        Exhibit {
            label: "sync low-extreme",
            strategy: Strategy::ExtremeTimestamps,
            mode: Mode::Synchronous,
            magnitude: Some(-1_000_000),
            expect: |f| (f + 1) / 2,
        },
        Exhibit {
            label: "async delayed-low",
            strategy: Strategy::ScenarioB,
            mode: Mode::AsyncAdversarial,
            magnitude: None,
            expect: |f| f,
        },
        Exhibit {
            label: "async delayed-high",
            strategy: Strategy::ScenarioC,
            mode: Mode::AsyncAdversarial,
            magnitude: None,
            expect: |f| f,
        },
        Exhibit {
            label: "aligned silent",
            strategy: Strategy::ScenarioA,
            mode: Mode::AsyncRandom,
            magnitude: None,
            expect: |_| 0,
        },
    ];

    let mut work: Vec<(usize, usize, u64)> = Vec::new();
    for &n in &[4usize, 7] {
        for (e, _) in exhibits.iter().enumerate() {
            for s in 0..seeds {
                work.push((n, e, s as u64));
            }
        }
    }
    let results = par_map(&work, jobs, |&(n, e, seed)| {
        let ex = &exhibits[e];
        let mut sc = Scenario::baseline(n);
        sc.adversary.strategy = ex.strategy;
        sc.synchrony.mode = ex.mode;
        sc.workload.transactions = MATRIX_TXS;
        if let Some(m) = ex.magnitude {
            sc.adversary.magnitude = m;
        }
        let out = kernel::run(&sc, seed).expect("tightness scenario validates");
        checker::check(out.log.records()).flat_rows()
    });

    let mut pass = true;
    let mut lines = Vec::new();
    for &n in &[4usize, 7] {
        let f = ((n - 1) / 3) as i64;
        for (e, ex) in exhibits.iter().enumerate() {
            let rows: Vec<&FlatRow> = work
                .iter()
                .zip(&results)
                .filter(|((wn, we, _), _)| *wn == n && *we == e)
                .flat_map(|(_, rows)| rows)
                .collect();
            let want = (ex.expect)(f);
            let exact = rows
                .iter()
                .all(|r| r.completed && r.guarantees_ok && r.achieved_delta == Some(want));
            pass &= exact && !rows.is_empty();
            lines.push(format!(
                "{} n={n}: delta == {want} on {}/{} instances",
                ex.label,
                rows.iter().filter(|r| r.achieved_delta == Some(want)).count(),
                rows.len()
            ));
        }
    }
    let rows: Vec<FlatRow> = results.into_iter().flatten().collect();
    SuiteOutcome::new("tightness", pass, lines.join("; "), rows)
}

// ---------------------------------------------------------------------------
// Binary agreement phase statistics (standalone pump).

fn expand(queue: &mut Vec<(NodeId, NodeId, Payload)>, n: usize, from: NodeId, outs: Vec<Outbound>) {
    for ob in outs {
        match ob.dest {
            Dest::All => {
                for to in 0..n {
                    queue.push((from, to, ob.payload.clone()));
                }
            }
            Dest::Node(to) => queue.push((from, to, ob.payload)),
        }
    }
}

/// One randomized-delivery binary-agreement run with split inputs; returns
/// the largest phase at which any node decided.
fn aba_pump(seed: u64) -> u32 {
    let (n, f) = (4usize, 1usize);
    let mut inst = [0u8; 32];
    inst[..8].copy_from_slice(&seed.to_le_bytes());
    let coin = SeededCoin { seed: seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1) };
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut nodes: Vec<AbaState> = (0..n).map(|_| AbaState::new(inst, n, f)).collect();
    let mut queue: Vec<(NodeId, NodeId, Payload)> = Vec::new();
    for v in 0..n {
        let outs = nodes[v].start(v >= n / 2, &coin);
        expand(&mut queue, n, v, outs);
    }
    while !queue.is_empty() {
        let i = rng.gen_range(0..queue.len());
        let (from, to, payload) = queue.swap_remove(i);
        let outs = match payload {
            Payload::AbaBval { phase, bit, .. } => nodes[to].on_bval(from, phase, bit, &coin),
            Payload::AbaAux { phase, bit, .. } => nodes[to].on_aux(from, phase, bit, &coin),
            Payload::AbaTerm { bit, .. } => nodes[to].on_term(from, bit),
            _ => unreachable!("binary agreement emits only its own message kinds"),
        };
        expand(&mut queue, n, to, outs);
    }
    let decisions: Vec<bool> = nodes.iter().map(|s| s.decided().expect("pump decides")).collect();
    assert!(decisions.windows(2).all(|w| w[0] == w[1]), "divergent decisions");
    nodes.iter().map(|s| s.decided_phase()).max().unwrap()
}

/// Phases-to-decision over many seeded split-input runs: the empirical
/// stand-in for constant expected round complexity.
pub fn aba_round_stats(trials: usize, jobs: usize) -> SuiteOutcome {
    let seeds: Vec<u64> = (0..trials as u64).collect();
    let phases = par_map(&seeds, jobs, |&s| aba_pump(s));
    let max = *phases.iter().max().unwrap_or(&0);
    let mean = phases.iter().map(|&p| p as f64).sum::<f64>() / phases.len().max(1) as f64;
    let detail =
        format!("{} split-input runs at n=4: mean decision phase {mean:.3}, max {max}", trials);
    SuiteOutcome::new("aba_rounds", mean <= 4.0 && max <= 20 && !phases.is_empty(), detail, Vec::new())
}

// ---------------------------------------------------------------------------
// Approximate agreement contract (standalone pump + analytic bound).

const EPSILON: (i128, i128) = (49, 100);

fn epsilon() -> Frac {
    Frac::new(EPSILON.0, EPSILON.1)
}

/// One randomized-delivery approximate-agreement run: three honest nodes with
/// inputs {0, spread/2, spread} plus one byzantine origin injecting
/// out-of-range values every round. Returns honest outputs and the executed
/// round count.
fn aa_pump(spread: i64, seed: u64) -> (Vec<Frac>, u32) {
    let (n, f) = (4usize, 1usize);
    let byz: NodeId = 3;
    let mut inst = [0u8; 32];
    inst[..8].copy_from_slice(&spread.to_le_bytes());
    inst[8..16].copy_from_slice(&seed.to_le_bytes());
    let rounds = round_count(spread, epsilon());
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ (spread as u64) << 17);
    let mut nodes: Vec<AaState> =
        (0..3).map(|v| AaState::new(inst, n, f, v, rounds)).collect();
    let mut queue: Vec<(NodeId, NodeId, Payload)> = Vec::new();
    let inputs = [frac(0), frac(spread / 2), frac(spread)];
    for v in 0..3 {
        let outs = nodes[v].start(inputs[v].clone());
        expand(&mut queue, 3, v, outs);
    }
    // The byzantine origin floods every round with values far outside the
    // honest hull; reliable broadcast forces per-round consistency, and the
    // trimming step must keep honest values inside [0, spread] anyway.
    for round in 1..=rounds {
        let value = if round % 2 == 0 { frac(3 * spread + 7) } else { frac(-2 * spread - 7) };
        for to in 0..3usize {
            queue.push((
                byz,
                to,
                Payload::AaSend { inst, round, origin: byz, value: value.clone() },
            ));
        }
    }
    while !queue.is_empty() {
        let i = rng.gen_range(0..queue.len());
        let (from, to, payload) = queue.swap_remove(i);
        let outs = match payload {
            Payload::AaSend { round, origin, value, .. } => {
                nodes[to].on_send(from, round, origin, value)
            }
            Payload::AaEcho { round, origin, value, .. } => {
                nodes[to].on_echo(from, round, origin, value)
            }
            Payload::AaReady { round, origin, value, .. } => {
                nodes[to].on_ready(from, round, origin, value)
            }
            Payload::AaWitness { round, ref senders, .. } => {
                nodes[to].on_witness(from, round, senders)
            }
            _ => unreachable!("approximate agreement emits only its own message kinds"),
        };
        expand(&mut queue, 3, to, outs);
    }
    let outputs: Vec<Frac> =
        nodes.iter().map(|s| s.output().expect("fixed schedule completes")).collect();
    (outputs, rounds)
}

/// Convergence and containment at sampled spreads, plus the analytic
/// iteration bound over every spread in 1..=2^14 (the schedule length is
/// exactly ceil(log2(spread / epsilon)) + 3, the documented constant).
pub fn aa_contract(jobs: usize) -> SuiteOutcome {
    // Iteration bound, checked for every spread.
    let eps = epsilon();
    let mut bound_violations = 0usize;
    let mut max_rounds = 0u32;
    for s in 1..=(1i64 << 14) {
        let rounds = round_count(s, eps);
        let bound = ceil_log2(frac(s) / eps) + 3;
        if rounds > bound {
            bound_violations += 1;
        }
        max_rounds = max_rounds.max(rounds);
    }

    // Executed runs at sampled spreads: small values exhaustively, then the
    // neighborhoods of every power of two, then seeded random picks.
    let mut spreads: Vec<i64> = (1..=256).collect();
    for k in 8..=14 {
        let p = 1i64 << k;
        spreads.extend([p - 1, p, p + 1]);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(0xaa);
    spreads.extend((0..192).map(|_| rng.gen_range(257..=(1i64 << 14))));
    spreads.sort_unstable();
    spreads.dedup();

    let results = par_map(&spreads, jobs, |&s| {
        let (outputs, rounds) = aa_pump(s, s as u64);
        let lo = frac(0);
        let hi = frac(s);
        let contained = outputs.iter().all(|v| *v >= lo && *v <= hi);
        let mut gap_ok = true;
        for a in &outputs {
            for b in &outputs {
                let d = if a >= b { a - b } else { b - a };
                gap_ok &= d < epsilon();
            }
        }
        (contained, gap_ok, rounds)
    });
    let run_violations =
        results.iter().filter(|(contained, gap_ok, _)| !contained || !gap_ok).count();
    let detail = format!(
        "{} pumped spreads: {} convergence/containment violations; iteration bound ceil(log2(s/eps))+3 holds for all 16384 spreads ({} violations, max schedule {max_rounds} rounds)",
        spreads.len(),
        run_violations,
        bound_violations
    );
    SuiteOutcome::new(
        "aa_contract",
        run_violations == 0 && bound_violations == 0,
        detail,
        Vec::new(),
    )
}

// ---------------------------------------------------------------------------
// Crypto-layer properties.

/// Secret-sharing round-trip for every (n, k) with n <= 10 over all
/// k-subsets, a chi-square uniformity check on below-threshold shares, and a
/// forgery fuzz over the signing API.
pub fn crypto_properties() -> SuiteOutcome {
    use crate::crypto::{reconstruct, split, SignerRegistry};
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    let mut rng = ChaCha20Rng::seed_from_u64(0xc0ffee);

    // Exhaustive round-trip: every k-subset of shares reconstructs.
    let mut subset_failures = 0usize;
    let mut subsets_checked = 0usize;
    for n in 1..=10usize {
        for k in 1..=n {
            let mut secret = vec![0u8; 9];
            rng.fill_bytes(&mut secret);
            let shares = split(&secret, n, k, &mut rng).expect("valid parameters");
            for mask in 0u32..(1 << n) {
                if mask.count_ones() as usize != k {
                    continue;
                }
                let subset: Vec<_> = (0..n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| shares[i].clone())
                    .collect();
                subsets_checked += 1;
                if reconstruct(&subset, k).ok().as_deref() != Some(&secret[..]) {
                    subset_failures += 1;
                }
            }
            // Below threshold, reconstruction must refuse outright.
            if k > 1 && reconstruct(&shares[..k - 1], k).is_ok() {
                subset_failures += 1;
            }
        }
    }

    // Uniformity of a below-threshold share byte: with k = 2, one share
    // reveals nothing, so its byte must be uniform over fresh splits.
    let trials = 10_000usize;
    let mut counts = [0u64; 256];
    let secret = [0x5au8];
    for _ in 0..trials {
        let shares = split(&secret, 4, 2, &mut rng).expect("valid parameters");
        counts[shares[0].data[0] as usize] += 1;
    }
    let expected = trials as f64 / 256.0;
    let stat: f64 =
        counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let chi = ChiSquared::new(255.0).expect("valid dof");
    let p_value = 1.0 - chi.cdf(stat);

    // Forgery fuzz: tampered messages, signers, aggregates, and user
    // envelopes must all fail verification; honest paths must all pass.
    let reg = SignerRegistry::new(0xfeed, 7, 2);
    let mut forgeries = 0usize;
    let mut honest_failures = 0usize;
    let ops = 100_000usize;
    for i in 0..ops {
        let mut msg = [0u8; 24];
        rng.fill_bytes(&mut msg);
        match i % 5 {
            0 => {
                let v = rng.gen_range(0..7);
                let p = reg.partial_sign(v, &msg);
                if !reg.partial_verify(&msg, &p) {
                    honest_failures += 1;
                }
                let mut bad = msg;
                bad[rng.gen_range(0..bad.len())] ^= 1 << rng.gen_range(0..8);
                if reg.partial_verify(&bad, &p) {
                    forgeries += 1;
                }
            }
            1 => {
                let v = rng.gen_range(0..7);
                let mut p = reg.partial_sign(v, &msg);
                p.signer = (v + 1 + rng.gen_range(0..6)) % 7;
                if reg.partial_verify(&msg, &p) {
                    forgeries += 1;
                }
            }
            2 => {
                let partials: Vec<_> = (0..3).map(|v| reg.partial_sign(v, &msg)).collect();
                match reg.combine(&msg, &partials) {
                    Ok(sig) => {
                        if !reg.verify(&msg, &sig) {
                            honest_failures += 1;
                        }
                        let mut bad = sig.clone();
                        bad.tag[rng.gen_range(0..32)] ^= 0x80;
                        if reg.verify(&msg, &bad) {
                            forgeries += 1;
                        }
                        let mut short = sig;
                        short.signers.pop();
                        if reg.verify(&msg, &short) {
                            forgeries += 1;
                        }
                    }
                    Err(_) => honest_failures += 1,
                }
            }
            3 => {
                let mut partials: Vec<_> = (0..3).map(|v| reg.partial_sign(v, &msg)).collect();
                partials[rng.gen_range(0..3)].tag[rng.gen_range(0..32)] ^= 1;
                if reg.combine(&msg, &partials).is_ok() {
                    forgeries += 1;
                }
            }
            _ => {
                let u = rng.gen_range(0..64u64);
                let s = reg.user_sign(u, &msg);
                if !reg.user_verify(&msg, &s) {
                    honest_failures += 1;
                }
                let mut bad = s.clone();
                bad.user ^= 1;
                if reg.user_verify(&msg, &bad) {
                    forgeries += 1;
                }
                let mut wrong = s;
                wrong.tag[0] ^= 0xff;
                if reg.user_verify(&msg, &wrong) {
                    forgeries += 1;
                }
            }
        }
    }

    let pass = subset_failures == 0 && p_value > 0.001 && forgeries == 0 && honest_failures == 0;
    let detail = format!(
        "{subsets_checked} share subsets round-tripped ({subset_failures} failures); below-threshold byte chi-square p = {p_value:.4}; {ops} signing ops: {forgeries} forgeries, {honest_failures} honest-path failures"
    );
    SuiteOutcome::new("crypto", pass, detail, Vec::new())
}

// ---------------------------------------------------------------------------
// Determinism.

/// Identical (scenario, seed) pairs produce byte-identical log digests;
/// changing the seed changes the digest.
pub fn determinism() -> SuiteOutcome {
    let mut cases: Vec<(Scenario, u64)> = Vec::new();
    let sync = Scenario::baseline(4);
    cases.push((sync, 42));
    let mut equiv = Scenario::baseline(4);
    equiv.adversary.strategy = Strategy::EquivocateInitTimestamps;
    equiv.synchrony.mode = Mode::AsyncRandom;
    cases.push((equiv, 42));
    let mut b7 = Scenario::baseline(7);
    b7.adversary.strategy = Strategy::ScenarioB;
    b7.synchrony.mode = Mode::AsyncAdversarial;
    cases.push((b7, 9));

    let mut pass = true;
    let mut digests = Vec::new();
    for (sc, seed) in &cases {
        let a = kernel::run(sc, *seed).expect("scenario validates").digest;
        let b = kernel::run(sc, *seed).expect("scenario validates").digest;
        let c = kernel::run(sc, seed + 1).expect("scenario validates").digest;
        pass &= a == b && a != c;
        digests.push(a[..8].to_string());
    }
    let detail = format!(
        "{} scenarios replayed byte-identically (digests {}); seed change diverges",
        cases.len(),
        digests.join(", ")
    );
    SuiteOutcome::new("determinism", pass, detail, Vec::new())
}

// ---------------------------------------------------------------------------
// Round-complexity fit.

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 =
        xs.iter().zip(ys).map(|(x, y)| (y - (slope * x + intercept)).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    (slope, intercept, r2)
}

/// Sweep the external delivery bound over powers of two and fit the measured
/// message-step count against `log2(2 + d_ext)`: completion is logarithmic
/// in the delivery bound because the agreement schedule is.
pub fn complexity_fit(seeds: usize, jobs: usize) -> SuiteOutcome {
    let points: Vec<i64> = (0..=14).map(|k| 1i64 << k).collect();
    let mut work: Vec<(i64, u64)> = Vec::new();
    for &d in &points {
        for s in 0..seeds {
            work.push((d, s as u64));
        }
    }
    let results = par_map(&work, jobs, |&(d, seed)| {
        let mut sc = Scenario::baseline(4);
        sc.synchrony.d_ext = d;
        sc.workload.transactions = MATRIX_TXS;
        let out = kernel::run(&sc, seed).expect("sweep scenario validates");
        checker::check(out.log.records()).flat_rows()
    });

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut all_ok = true;
    let mut rows_out = Vec::new();
    for &d in &points {
        let rows: Vec<&FlatRow> = work
            .iter()
            .zip(&results)
            .filter(|((wd, _), _)| *wd == d)
            .flat_map(|(_, rows)| rows)
            .collect();
        all_ok &= rows.iter().all(|r| r.completed && r.guarantees_ok);
        let mean = rows.iter().filter_map(|r| r.pipeline_rounds).map(|r| r as f64).sum::<f64>()
            / rows.len().max(1) as f64;
        xs.push(((2 + d) as f64).log2());
        ys.push(mean);
    }
    for rows in results {
        rows_out.extend(rows);
    }
    let (slope, intercept, r2) = linear_fit(&xs, &ys);
    let detail = format!(
        "rounds ~= {slope:.2} * log2(2 + d_ext) + {intercept:.2}, R^2 = {r2:.3} over d_ext in 1..16384 ({} runs, all completed: {all_ok})",
        work.len()
    );
    SuiteOutcome::new("complexity", all_ok && slope > 0.0 && r2 >= 0.8, detail, rows_out)
}

// ---------------------------------------------------------------------------
// Name registry for the CLI.

pub const SUITE_NAMES: &[&str] =
    &["matrix", "tightness", "aba_rounds", "aa_contract", "crypto", "determinism", "complexity"];

/// Run a suite by name. `seeds = None` takes each suite's default scale.
/// `matrix` yields four outcomes (all evaluated over one shared set of runs);
/// the rest yield one.
pub fn run_suite(name: &str, seeds: Option<usize>, jobs: usize) -> Option<Vec<SuiteOutcome>> {
    match name {
        "matrix" => {
            let rows = matrix_rows(seeds.unwrap_or(200), jobs);
            let mut outcomes = vec![
                agreement_unique(&rows),
                validity_async(&rows),
                validity_sync(&rows),
                guarantees(&rows),
            ];
            // Attach the rows once, on the first outcome, for export.
            outcomes[0].rows = rows;
            Some(outcomes)
        }
        "tightness" => Some(vec![tightness(seeds.unwrap_or(25), jobs)]),
        "aba_rounds" => Some(vec![aba_round_stats(seeds.unwrap_or(10_000), jobs)]),
        "aa_contract" => Some(vec![aa_contract(jobs)]),
        "crypto" => Some(vec![crypto_properties()]),
        "determinism" => Some(vec![determinism()]),
        "complexity" => Some(vec![complexity_fit(seeds.unwrap_or(6), jobs)]),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_preserves_order() {
        let items: Vec<u64> = (0..100).collect();
        let out = par_map(&items, 8, |&x| x * 3);
        assert_eq!(out, items.iter().map(|x| x * 3).collect::<Vec<_>>());
    }

    #[test]
    fn small_matrix_passes_every_row_based_suite() {
        let rows = matrix_rows(4, default_jobs());
        // 3 sizes x 11 strategies x 4 seeds x 2 transactions.
        assert_eq!(rows.len(), 3 * 11 * 4 * 2);
        for s in [agreement_unique(&rows), validity_async(&rows), validity_sync(&rows), guarantees(&rows)] {
            assert!(s.pass, "{}: {}", s.name, s.detail);
        }
    }

    #[test]
    fn tightness_exhibits_hit_bounds_exactly() {
        let s = tightness(3, default_jobs());
        assert!(s.pass, "{}", s.detail);
    }

    #[test]
    fn aba_phase_statistics_stay_low() {
        let s = aba_round_stats(300, default_jobs());
        assert!(s.pass, "{}", s.detail);
    }

    #[test]
    fn aa_pump_converges_and_contains_under_injection() {
        for spread in [1i64, 49, 1000, 16384] {
            let (outputs, rounds) = aa_pump(spread, 5);
            assert_eq!(rounds, round_count(spread, epsilon()));
            for v in &outputs {
                assert!(*v >= frac(0) && *v <= frac(spread), "escaped hull at {spread}");
            }
            for a in &outputs {
                for b in &outputs {
                    let d = if a >= b { a - b } else { b - a };
                    assert!(d < epsilon(), "gap {d} at spread {spread}");
                }
            }
        }
    }

    #[test]
    fn schedule_length_meets_documented_bound_for_all_spreads() {
        let eps = epsilon();
        for s in 1..=(1i64 << 14) {
            assert!(round_count(s, eps) <= ceil_log2(frac(s) / eps) + 3);
        }
    }

    #[test]
    fn determinism_suite_passes() {
        let s = determinism();
        assert!(s.pass, "{}", s.detail);
    }

    #[test]
    fn complexity_fit_is_logarithmic() {
        let s = complexity_fit(3, default_jobs());
        assert!(s.pass, "{}", s.detail);
    }

    #[test]
    fn crypto_suite_passes() {
        let s = crypto_properties();
        assert!(s.pass, "{}", s.detail);
    }
}
