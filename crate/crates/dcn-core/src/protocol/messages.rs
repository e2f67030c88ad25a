//! Wire messages exchanged between nodes.
//!
//! One flat enum covers every stage of the pipeline; all variants carry the
//! instance id so concurrent transactions interleave freely. Messages are
//! in-memory values (the simulator moves them), so they hold exact rationals
//! directly rather than a serialized encoding.

use crate::crypto::{PartialSig, Share, UserSig};
use crate::value::Frac;
use crate::{InstanceId, NodeId, Tick};

/// Messages a node can emit. `origin` on the reliable-broadcast variants
/// names the node whose value is being relayed, not the immediate sender.
#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    /// Stage 1: sender's local receipt timestamp for the instance.
    InitTs { inst: InstanceId, ts: Tick },
    /// Approximate agreement: reliable-broadcast SEND of `origin`'s value
    /// for `round`.
    AaSend { inst: InstanceId, round: u32, origin: NodeId, value: Frac },
    /// Reliable-broadcast ECHO of a SEND.
    AaEcho { inst: InstanceId, round: u32, origin: NodeId, value: Frac },
    /// Reliable-broadcast READY; delivery happens on a quorum of these.
    AaReady { inst: InstanceId, round: u32, origin: NodeId, value: Frac },
    /// Witness report: the sender has delivered round-`round` values from
    /// exactly these origins.
    AaWitness { inst: InstanceId, round: u32, senders: Vec<NodeId> },
    /// Binary agreement: binary-value broadcast of `bit` for `phase`.
    AbaBval { inst: InstanceId, phase: u32, bit: bool },
    /// Binary agreement: auxiliary vote for `phase`.
    AbaAux { inst: InstanceId, phase: u32, bit: bool },
    /// Binary agreement: sender has decided `bit`. Lets peers decide from
    /// f+1 matching certificates and halt once n-f confirm, so deciders
    /// never strand laggards.
    AbaTerm { inst: InstanceId, bit: bool },
    /// Partial threshold signature over `(inst, tau)`.
    SigPartial { inst: InstanceId, tau: Tick, partial: PartialSig },
    /// Reveal of the user's secret share, gated on the combined signature.
    ShareReveal { inst: InstanceId, share: Share, usig: UserSig },
}

impl Payload {
    pub fn instance(&self) -> &InstanceId {
        match self {
            Payload::InitTs { inst, .. }
            | Payload::AaSend { inst, .. }
            | Payload::AaEcho { inst, .. }
            | Payload::AaReady { inst, .. }
            | Payload::AaWitness { inst, .. }
            | Payload::AbaBval { inst, .. }
            | Payload::AbaAux { inst, .. }
            | Payload::AbaTerm { inst, .. }
            | Payload::SigPartial { inst, .. }
            | Payload::ShareReveal { inst, .. } => inst,
        }
    }

    /// Every tag `kind` can return, for validating delay policies.
    pub const KINDS: &'static [&'static str] = &[
        "init_ts", "aa_send", "aa_echo", "aa_ready", "aa_witness", "aba_bval", "aba_aux",
        "aba_term", "sig_partial", "share_reveal",
    ];

    /// Short kind tag for logs and delay policies.
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::InitTs { .. } => "init_ts",
            Payload::AaSend { .. } => "aa_send",
            Payload::AaEcho { .. } => "aa_echo",
            Payload::AaReady { .. } => "aa_ready",
            Payload::AaWitness { .. } => "aa_witness",
            Payload::AbaBval { .. } => "aba_bval",
            Payload::AbaAux { .. } => "aba_aux",
            Payload::AbaTerm { .. } => "aba_term",
            Payload::SigPartial { .. } => "sig_partial",
            Payload::ShareReveal { .. } => "share_reveal",
        }
    }
}

/// Where an outbound message goes. `All` includes the sender itself; the
/// transport must loop a copy back (self-delivery is immediate and cannot be
/// delayed by the scheduler).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dest {
    All,
    Node(NodeId),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outbound {
    pub dest: Dest,
    pub payload: Payload,
}

impl Outbound {
    pub fn all(payload: Payload) -> Self {
        Outbound { dest: Dest::All, payload }
    }

    pub fn to(node: NodeId, payload: Payload) -> Self {
        Outbound { dest: Dest::Node(node), payload }
    }
}
