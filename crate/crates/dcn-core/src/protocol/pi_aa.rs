//! Stage 2: approximate agreement on the timestamp estimates.
//!
//! Nodes iteratively exchange values until all honest values sit within
//! `epsilon` of each other. Each round:
//!
//! 1. reliably broadcast your current value ([`crate::protocol::rbc`]), so
//!    an equivocator cannot show different round values to different nodes;
//! 2. after delivering values from `n - f` origins, broadcast a witness
//!    report naming them;
//! 3. a reporter becomes a witness once everything it reported is also in
//!    your own delivered set;
//! 4. with `n - f` delivered values *and* `n - f` witnesses, take a snapshot,
//!    drop the `f` lowest and `f` highest entries, and move to the midpoint
//!    of what remains.
//!
//! The witness step forces any two honest snapshots for the same round to
//! share at least `n - f` entries, so their kept ranges intersect; midpoints
//! of intersecting subranges of the honest hull are at most half the hull
//! apart, which halves the honest diameter every round and keeps every value
//! inside the honest input hull.
//!
//! Because the diameter halves unconditionally, a round count fixed up front
//! suffices: inputs are local receipt medians, and receipt spread is bounded
//! by the same external-delivery assumption that sizes the stage-1 wait
//! timer. [`round_count`] turns that bound into `R = 1 + ceil(log2(4B/eps))`,
//! which leaves the final diameter at most `epsilon / 4`; every node runs
//! exactly `R` rounds and outputs its round-`R` update. Nodes keep serving
//! echoes, readies, and witness checks after finishing so that slow nodes
//! always complete too.

use std::collections::{BTreeMap, BTreeSet};

use crate::protocol::messages::{Outbound, Payload};
use crate::protocol::rbc::Rbc;
use crate::value::{ceil_log2, frac, midpoint, Frac};
use crate::{InstanceId, NodeId};

/// Margin factor in the round count: the final diameter is driven to
/// `epsilon / MARGIN` rather than `epsilon`, absorbing the rounding step's
/// sensitivity to values near a half-integer boundary.
pub const MARGIN: i64 = 4;

/// Rounds needed to shrink an input spread of at most `bound` ticks to
/// `epsilon / MARGIN`, starting from one mandatory exchange round.
pub fn round_count(bound: i64, epsilon: Frac) -> u32 {
    let b = frac(bound.max(1));
    1 + ceil_log2(b * frac(MARGIN) / epsilon)
}

#[derive(Clone, Debug)]
pub struct AaState {
    inst: InstanceId,
    n: usize,
    f: usize,
    me: NodeId,
    rounds_total: u32,
    /// Round currently being collected (1-based); `rounds_total + 1` once
    /// finished.
    round: u32,
    value: Frac,
    started: bool,
    output: Option<Frac>,
    rbc: BTreeMap<(u32, NodeId), Rbc<Frac>>,
    delivered: BTreeMap<u32, BTreeMap<NodeId, Frac>>,
    /// Rounds for which our witness report has been sent.
    reported: BTreeSet<u32>,
    /// Reports whose sender sets we have not yet fully delivered.
    pending_reports: BTreeMap<u32, BTreeMap<NodeId, BTreeSet<NodeId>>>,
    witnesses: BTreeMap<u32, BTreeSet<NodeId>>,
}

impl AaState {
    pub fn new(inst: InstanceId, n: usize, f: usize, me: NodeId, rounds_total: u32) -> Self {
        AaState {
            inst,
            n,
            f,
            me,
            rounds_total: rounds_total.max(1),
            round: 1,
            value: frac(0),
            started: false,
            output: None,
            rbc: BTreeMap::new(),
            delivered: BTreeMap::new(),
            reported: BTreeSet::new(),
            pending_reports: BTreeMap::new(),
            witnesses: BTreeMap::new(),
        }
    }

    pub fn output(&self) -> Option<Frac> {
        self.output.clone()
    }

    pub fn rounds_total(&self) -> u32 {
        self.rounds_total
    }

    /// Begin with this node's stage-1 estimate.
    pub fn start(&mut self, input: Frac) -> Vec<Outbound> {
        if self.started {
            return Vec::new();
        }
        self.started = true;
        self.value = input;
        let mut out = vec![self.send_for_round(1)];
        out.extend(self.try_advance());
        out
    }

    pub fn on_send(&mut self, from: NodeId, round: u32, origin: NodeId, value: Frac) -> Vec<Outbound> {
        // A SEND is only accepted from its claimed origin; everything else
        // would let one byzantine node open RBC slots for another.
        if from != origin || !self.round_in_range(round) {
            return Vec::new();
        }
        let step = self.slot(round, origin).on_send(value);
        self.apply_rbc_step(round, origin, step.echo, step.ready, step.delivered)
    }

    pub fn on_echo(&mut self, from: NodeId, round: u32, origin: NodeId, value: Frac) -> Vec<Outbound> {
        if !self.round_in_range(round) {
            return Vec::new();
        }
        let step = self.slot(round, origin).on_echo(from, value);
        self.apply_rbc_step(round, origin, step.echo, step.ready, step.delivered)
    }

    pub fn on_ready(&mut self, from: NodeId, round: u32, origin: NodeId, value: Frac) -> Vec<Outbound> {
        if !self.round_in_range(round) {
            return Vec::new();
        }
        let step = self.slot(round, origin).on_ready(from, value);
        self.apply_rbc_step(round, origin, step.echo, step.ready, step.delivered)
    }

    pub fn on_witness(&mut self, from: NodeId, round: u32, senders: &[NodeId]) -> Vec<Outbound> {
        if !self.round_in_range(round) || senders.len() < self.n - self.f {
            return Vec::new();
        }
        let known = self.witnesses.entry(round).or_default().contains(&from)
            || self.pending_reports.get(&round).is_some_and(|m| m.contains_key(&from));
        if known {
            // First report per reporter wins; repeats are ignored.
            return Vec::new();
        }
        let set: BTreeSet<NodeId> = senders.iter().copied().filter(|&s| s < self.n).collect();
        if set.len() != senders.len() {
            return Vec::new();
        }
        let covered = {
            let have = self.delivered.entry(round).or_default();
            set.iter().all(|s| have.contains_key(s))
        };
        if covered {
            self.witnesses.entry(round).or_default().insert(from);
        } else {
            self.pending_reports.entry(round).or_default().insert(from, set);
        }
        self.try_advance()
    }

    fn round_in_range(&self, round: u32) -> bool {
        round >= 1 && round <= self.rounds_total
    }

    fn slot(&mut self, round: u32, origin: NodeId) -> &mut Rbc<Frac> {
        let (n, f) = (self.n, self.f);
        self.rbc.entry((round, origin)).or_insert_with(|| Rbc::new(n, f))
    }

    fn send_for_round(&self, round: u32) -> Outbound {
        Outbound::all(Payload::AaSend {
            inst: self.inst,
            round,
            origin: self.me,
            value: self.value.clone(),
        })
    }

    fn apply_rbc_step(
        &mut self,
        round: u32,
        origin: NodeId,
        echo: Option<Frac>,
        ready: Option<Frac>,
        delivered: Option<Frac>,
    ) -> Vec<Outbound> {
        let mut out = Vec::new();
        if let Some(v) = echo {
            out.push(Outbound::all(Payload::AaEcho { inst: self.inst, round, origin, value: v }));
        }
        if let Some(v) = ready {
            out.push(Outbound::all(Payload::AaReady { inst: self.inst, round, origin, value: v }));
        }
        if let Some(v) = delivered {
            out.extend(self.handle_delivery(round, origin, v));
        }
        out
    }

    fn handle_delivery(&mut self, round: u32, origin: NodeId, value: Frac) -> Vec<Outbound> {
        let mut out = Vec::new();
        self.delivered.entry(round).or_default().insert(origin, value);

        // Pending reports may now be fully covered.
        if let Some(pending) = self.pending_reports.get_mut(&round) {
            let have = &self.delivered[&round];
            let ready: Vec<NodeId> = pending
                .iter()
                .filter(|(_, set)| set.iter().all(|s| have.contains_key(s)))
                .map(|(&w, _)| w)
                .collect();
            for w in ready {
                pending.remove(&w);
                self.witnesses.entry(round).or_default().insert(w);
            }
        }

        if self.delivered[&round].len() >= self.n - self.f && self.reported.insert(round) {
            let senders: Vec<NodeId> = self.delivered[&round].keys().copied().collect();
            out.push(Outbound::all(Payload::AaWitness { inst: self.inst, round, senders }));
        }

        out.extend(self.try_advance());
        out
    }

    fn try_advance(&mut self) -> Vec<Outbound> {
        let mut out = Vec::new();
        if !self.started {
            return out;
        }
        while self.round <= self.rounds_total {
            let quorum = self.n - self.f;
            let have = self.delivered.get(&self.round).map_or(0, |m| m.len());
            let wit = self.witnesses.get(&self.round).map_or(0, |w| w.len());
            if have < quorum || wit < quorum {
                break;
            }
            // Snapshot is a superset of every accepted witness's report, so
            // any two honest snapshots share >= n - f entries.
            let mut values: Vec<Frac> = self.delivered[&self.round].values().cloned().collect();
            values.sort_unstable();
            let kept = &values[self.f..values.len() - self.f];
            self.value = midpoint(*kept.first().unwrap(), *kept.last().unwrap());
            self.round += 1;
            if self.round <= self.rounds_total {
                out.push(self.send_for_round(self.round));
            } else {
                self.output = Some(self.value.clone());
            }
        }
        out
    }
}
