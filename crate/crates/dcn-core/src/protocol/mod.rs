//! Node-side protocol state machines.
//!
//! Each machine is a pure, message-driven struct: feed it deliveries, get
//! back messages to send. Nothing here knows about the simulator, clocks, or
//! scheduling — that separation is what lets the same code run under every
//! synchrony model and makes unit tests plain message-pushing.
//!
//! Pipeline for one submitted transaction (instance `h`):
//!
//! 1. [`pi_init`] — each node broadcasts its receipt timestamp and selects a
//!    median-position estimate from what arrives.
//! 2. [`pi_aa`] — approximate agreement narrows the estimates to within
//!    `epsilon < 1/2` of each other.
//! 3. [`pi_ta`] — rounds the agreed value to two adjacent integer candidates
//!    and runs [`pi_aba`] (binary agreement) on the parity bit to pick one.
//! 4. [`node`] — threshold-signs `(h, tau)`, reveals the user's transaction
//!    shares only after the signature exists, reconstructs, and submits.

pub mod messages;
pub mod node;
pub mod pi_aa;
pub mod pi_aba;
pub mod pi_init;
pub mod pi_ta;
pub mod rbc;

pub use messages::{Dest, Outbound, Payload};
