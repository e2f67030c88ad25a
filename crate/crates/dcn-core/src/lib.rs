//! Core library for a decentralized clock network: a permissioned committee of
//! `n` nodes (at most `f` byzantine, `n > 3f`) that assigns every submitted
//! transaction a single agreed timestamp close to the median of the times at
//! which honest nodes actually received it.
//!
//! The crate has three layers:
//!
//! * [`protocol`] — the node-side state machines: timestamp selection
//!   (`pi_init`), approximate agreement over exact rationals (`pi_aa`),
//!   randomized binary agreement (`pi_aba`), their composition into timestamp
//!   agreement (`pi_ta`), and the transaction submission pipeline ([`node`]).
//! * [`sim`] — a deterministic discrete-event simulator that runs a committee
//!   under configurable synchrony assumptions and adversary strategies and
//!   produces a structured event log.
//! * [`checker`] — a post-hoc verifier that reads *only* the event log and
//!   checks agreement, median validity, liveness, and order fairness.
//!
//! Everything is deterministic given a scenario configuration and a seed:
//! same inputs, byte-identical event log.

pub mod checker;
pub mod crypto;
pub mod protocol;
pub mod sim;
pub mod suites;
pub mod value;

/// Committee member identifier, dense in `0..n`.
pub type NodeId = usize;

/// A clock reading or timestamp, in integer ticks. Local readings may be
/// negative under skewed clocks, and byzantine nodes may claim arbitrary
/// values, so this is signed.
pub type Tick = i64;

/// Identifier of one timestamp-agreement instance: the commitment hash
/// `h = H(tx, nonce)` from the user's submission envelope.
pub type InstanceId = [u8; 32];

/// Render an instance id the way logs and reports do (first 8 bytes, hex).
pub fn short_id(id: &InstanceId) -> String {
    id[..8].iter().map(|b| format!("{b:02x}")).collect()
}
