//! Mempool and block assembly: the destination of the submission pipeline.
//! The pool admits the first valid (tx, tau, sigma) per instance, orders
//! admitted transactions by agreed timestamp, and an independent validator
//! re-checks a built block from scratch — signatures, ordering, boundary,
//! and duplicates — the way a non-committee observer would.

use crate::crypto::sig::{SignerRegistry, ThresholdSig};
use crate::protocol::node::tau_sig_msg;
use crate::{InstanceId, Tick};
use std::collections::BTreeMap;

/// One admitted transaction with its agreement certificate.
#[derive(Debug, Clone)]
pub struct PoolEntry {
    pub inst: InstanceId,
    pub tau: Tick,
    pub tx: Vec<u8>,
    pub sigma: ThresholdSig,
}

#[derive(Debug, Default)]
pub struct Mempool {
    entries: BTreeMap<InstanceId, PoolEntry>,
}

impl Mempool {
    pub fn new() -> Mempool {
        Mempool::default()
    }

    /// Admit a submission: the certificate must verify against the agreed
    /// timestamp and the instance must be new. Later duplicates (every node
    /// submits the same certified result) are rejected without harm.
    pub fn submit(
        &mut self,
        reg: &SignerRegistry,
        inst: InstanceId,
        tau: Tick,
        tx: Vec<u8>,
        sigma: ThresholdSig,
    ) -> bool {
        if self.entries.contains_key(&inst) {
            return false;
        }
        if !reg.verify(&tau_sig_msg(&inst, tau), &sigma) {
            return false;
        }
        self.entries.insert(inst, PoolEntry { inst, tau, tx, sigma });
        true
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, inst: &InstanceId) -> bool {
        self.entries.contains_key(inst)
    }

    /// Assemble the block: admitted entries ordered by (tau, instance id).
    /// The instance id tiebreak keeps equal-timestamp blocks deterministic.
    pub fn build_block(&self) -> Vec<PoolEntry> {
        let mut block: Vec<PoolEntry> = self.entries.values().cloned().collect();
        block.sort_by(|a, b| (a.tau, a.inst).cmp(&(b.tau, b.inst)));
        block
    }
}

/// Re-check a block as an outside validator: every certificate verifies,
/// timestamps are non-decreasing, every timestamp lies strictly after the
/// previous block's maximum, and no instance repeats.
pub fn validator_check(reg: &SignerRegistry, block: &[PoolEntry], prev_max_tau: Tick) -> bool {
    let mut last = prev_max_tau;
    let mut seen = BTreeMap::new();
    let mut first = true;
    for e in block {
        if !reg.verify(&tau_sig_msg(&e.inst, e.tau), &e.sigma) {
            return false;
        }
        if first {
            if e.tau <= prev_max_tau {
                return false;
            }
            first = false;
        } else if e.tau < last {
            return false;
        }
        last = e.tau;
        if seen.insert(e.inst, ()).is_some() {
            return false;
        }
    }
    true
}
