//! Deterministic discrete-event simulation of a committee running the
//! protocol under configurable synchrony and adversaries.
//!
//! Everything observable is derived from `(scenario, seed)`: randomness
//! comes from per-purpose seeded streams, container iteration is ordered,
//! and event ties break on sequence numbers — identical runs produce
//! byte-identical event logs.

pub mod adversary;
pub mod clock;
pub mod config;
pub mod kernel;
pub mod log;
pub mod mempool;
