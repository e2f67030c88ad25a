//! Stage 4: the per-node submission pipeline around timestamp agreement.
//!
//! For each instance a node:
//!
//! 1. runs [`TaState`](crate::protocol::pi_ta::TaState) to agree on the
//!    integer timestamp `tau`;
//! 2. broadcasts a partial threshold signature over `(instance, tau)` and
//!    combines `f + 1` matching, verified partials into `sigma`;
//! 3. only after holding `sigma` reveals its share of the user's transaction
//!    — before the certificate exists, fewer than `f + 1` honest shares are
//!    in flight, so nobody (including any `f` colluders) can read the
//!    transaction body and front-run it;
//! 4. collects `f + 1` user-signed shares with distinct indices,
//!    reconstructs `tx || nonce`, recomputes the instance hash, and submits
//!    `(tx, tau, sigma)` to the mempool — or aborts the instance if the
//!    reconstruction does not hash back to the instance id.

use std::collections::BTreeMap;

use crate::crypto::{
    digest, instance_hash, reconstruct, Digest32, PartialSig, Share, SignerRegistry, ThresholdSig,
    UserSig,
};
use crate::protocol::messages::{Outbound, Payload};
use crate::protocol::pi_aba::CommonCoin;
use crate::protocol::pi_ta::{TaConfig, TaState};
use crate::value::Frac;
use crate::{InstanceId, NodeId, Tick};

/// Message bound by a partial/threshold signature on an agreed timestamp.
pub fn tau_sig_msg(inst: &InstanceId, tau: Tick) -> Digest32 {
    digest("dcn/tausig/v1", &[inst, &tau.to_le_bytes()])
}

/// Message bound by the user's signature on one share.
pub fn share_sig_msg(inst: &InstanceId, share: &Share) -> Digest32 {
    digest("dcn/sharesig/v1", &[inst, &[share.index], &share.data])
}

/// Observable milestones, reported to the harness for logging and checking.
#[derive(Clone, Debug, PartialEq)]
pub enum NodeEvent {
    InitOutput { tau_mu: Tick },
    AaOutput { value: Frac, rounds: u32 },
    AbaDecided { bit: bool, phases: u32 },
    TaOutput { tau: Tick },
    SigmaCombined { tau: Tick },
    ShareRevealed,
    Reconstructed { ok: bool },
    /// Ready to hand `(tx, tau, sigma)` to the mempool.
    Submit { tx: Vec<u8>, tau: Tick, sigma: ThresholdSig },
}

/// Everything a handler call wants the harness to do.
#[derive(Clone, Debug, Default)]
pub struct NodeStep {
    pub out: Vec<Outbound>,
    pub events: Vec<(InstanceId, NodeEvent)>,
    /// Arm the stage-1 timer at this local tick.
    pub timer_due: Option<Tick>,
}

#[derive(Clone, Debug, Default)]
struct InstanceProgress {
    reported_init: bool,
    reported_aa: bool,
    reported_aba: bool,
    reported_ta: bool,
    sent_partial: bool,
    revealed: bool,
    reconstructed: bool,
    submitted: bool,
    aborted: bool,
}

#[derive(Clone, Debug)]
pub struct ProtocolNode {
    pub id: NodeId,
    cfg: TaConfig,
    ta: BTreeMap<InstanceId, TaState>,
    /// This node's copy of the user's share, held until `sigma` exists.
    envelope: BTreeMap<InstanceId, (Share, UserSig)>,
    /// First verified partial per signer; tau recorded alongside because
    /// peers may have agreed before we did.
    partials: BTreeMap<InstanceId, BTreeMap<NodeId, (Tick, PartialSig)>>,
    sigma: BTreeMap<InstanceId, (Tick, ThresholdSig)>,
    /// Verified revealed shares by share index (first wins).
    reveals: BTreeMap<InstanceId, BTreeMap<u8, Share>>,
    recovered: BTreeMap<InstanceId, Vec<u8>>,
    progress: BTreeMap<InstanceId, InstanceProgress>,
}

impl ProtocolNode {
    pub fn new(id: NodeId, cfg: TaConfig) -> Self {
        ProtocolNode {
            id,
            cfg,
            ta: BTreeMap::new(),
            envelope: BTreeMap::new(),
            partials: BTreeMap::new(),
            sigma: BTreeMap::new(),
            reveals: BTreeMap::new(),
            recovered: BTreeMap::new(),
            progress: BTreeMap::new(),
        }
    }

    /// The user's submission arrived. `ts` is the receipt timestamp to
    /// broadcast — honest callers pass the local time `now`; byzantine
    /// wrappers may lie.
    #[allow(clippy::too_many_arguments)]
    pub fn on_user_submit(
        &mut self,
        inst: InstanceId,
        share: Share,
        usig: UserSig,
        ts: Tick,
        now: Tick,
        reg: &SignerRegistry,
        coin: &dyn CommonCoin,
    ) -> NodeStep {
        let mut step = NodeStep::default();
        self.envelope.entry(inst).or_insert((share, usig));
        let out = self.ta_entry(inst).on_user_receipt(inst, ts, now, coin);
        if !out.is_empty() {
            step.out = out;
            step.timer_due = Some(now + self.cfg.wait);
        }
        self.post_process(inst, reg, &mut step);
        step
    }

    pub fn on_message(
        &mut self,
        from: NodeId,
        payload: &Payload,
        now: Tick,
        reg: &SignerRegistry,
        coin: &dyn CommonCoin,
    ) -> NodeStep {
        let inst = *payload.instance();
        let mut step = NodeStep::default();
        match payload {
            Payload::SigPartial { tau, partial, .. } => {
                self.handle_partial(inst, from, *tau, partial, reg)
            }
            Payload::ShareReveal { share, usig, .. } => self.handle_reveal(inst, share, usig, reg),
            other => {
                step.out = self.ta_entry(inst).on_message(from, other, now, coin);
            }
        }
        self.post_process(inst, reg, &mut step);
        step
    }

    pub fn on_timer(
        &mut self,
        inst: InstanceId,
        now: Tick,
        reg: &SignerRegistry,
        coin: &dyn CommonCoin,
    ) -> NodeStep {
        let mut step = NodeStep { out: self.ta_entry(inst).on_timer(now, coin), ..Default::default() };
        self.post_process(inst, reg, &mut step);
        step
    }

    pub fn tau(&self, inst: &InstanceId) -> Option<Tick> {
        self.ta.get(inst).and_then(|t| t.output())
    }

    fn ta_entry(&mut self, inst: InstanceId) -> &mut TaState {
        let (id, cfg) = (self.id, self.cfg);
        self.ta.entry(inst).or_insert_with(|| TaState::new(inst, id, cfg))
    }

    fn handle_partial(
        &mut self,
        inst: InstanceId,
        from: NodeId,
        tau: Tick,
        partial: &PartialSig,
        reg: &SignerRegistry,
    ) {
        // Each node broadcasts only its own partial; accepting relayed ones
        // would let a byzantine node replay an honest partial under a
        // different tau claim.
        if partial.signer != from {
            return;
        }
        if !reg.partial_verify(&tau_sig_msg(&inst, tau), partial) {
            return;
        }
        self.partials
            .entry(inst)
            .or_default()
            .entry(partial.signer)
            .or_insert((tau, partial.clone()));
    }

    fn handle_reveal(&mut self, inst: InstanceId, share: &Share, usig: &UserSig, reg: &SignerRegistry) {
        if !reg.user_verify(&share_sig_msg(&inst, share), usig) {
            return;
        }
        self.reveals
            .entry(inst)
            .or_default()
            .entry(share.index)
            .or_insert_with(|| share.clone());
    }

    /// Advance the pipeline after any handler: report newly reached stages,
    /// then fire each one-shot action whose precondition just became true.
    /// Loops because one action can enable the next within the same call
    /// (e.g. our own partial completes the combine threshold).
    fn post_process(&mut self, inst: InstanceId, reg: &SignerRegistry, step: &mut NodeStep) {
        loop {
            let before = (step.events.len(), step.out.len());
            self.report_stages(inst, reg, step);
            self.try_combine(inst, reg, step);
            self.try_reveal(inst, step);
            self.try_reconstruct(inst, reg, step);
            self.try_submit(inst, step);
            if (step.events.len(), step.out.len()) == before {
                return;
            }
        }
    }

    fn report_stages(&mut self, inst: InstanceId, reg: &SignerRegistry, step: &mut NodeStep) {
        let Some(ta) = self.ta.get(&inst) else { return };
        let (tau_mu, tau_aa, aa_rounds) = (ta.tau_mu(), ta.tau_aa(), ta.aa_rounds());
        let (aba_bit, aba_phases, tau) = (ta.aba_decided(), ta.aba_phases(), ta.output());
        let id = self.id;
        let prog = self.progress.entry(inst).or_default();

        if let Some(v) = tau_mu {
            if !prog.reported_init {
                prog.reported_init = true;
                step.events.push((inst, NodeEvent::InitOutput { tau_mu: v }));
            }
        }
        if let Some(v) = tau_aa {
            if !prog.reported_aa {
                prog.reported_aa = true;
                step.events.push((inst, NodeEvent::AaOutput { value: v, rounds: aa_rounds }));
            }
        }
        if let (Some(bit), Some(phases)) = (aba_bit, aba_phases) {
            if !prog.reported_aba {
                prog.reported_aba = true;
                step.events.push((inst, NodeEvent::AbaDecided { bit, phases }));
            }
        }
        if let Some(t) = tau {
            if !prog.reported_ta {
                prog.reported_ta = true;
                step.events.push((inst, NodeEvent::TaOutput { tau: t }));
            }
            if !prog.sent_partial {
                prog.sent_partial = true;
                let partial = reg.partial_sign(id, &tau_sig_msg(&inst, t));
                step.out.push(Outbound::all(Payload::SigPartial { inst, tau: t, partial }));
            }
        }
    }

    fn try_combine(&mut self, inst: InstanceId, reg: &SignerRegistry, step: &mut NodeStep) {
        if self.sigma.contains_key(&inst) {
            return;
        }
        let Some(my_tau) = self.tau(&inst) else { return };
        let Some(stored) = self.partials.get(&inst) else { return };
        let matching: Vec<PartialSig> = stored
            .values()
            .filter(|(t, _)| *t == my_tau)
            .map(|(_, p)| p.clone())
            .collect();
        if matching.len() < reg.threshold() {
            return;
        }
        let sigma = reg
            .combine(&tau_sig_msg(&inst, my_tau), &matching)
            .expect("verified matching partials above threshold must combine");
        self.sigma.insert(inst, (my_tau, sigma));
        step.events.push((inst, NodeEvent::SigmaCombined { tau: my_tau }));
    }

    fn try_reveal(&mut self, inst: InstanceId, step: &mut NodeStep) {
        // Front-running gate: the share leaves this node only after the
        // timestamp certificate exists.
        if !self.sigma.contains_key(&inst) {
            return;
        }
        let prog = self.progress.entry(inst).or_default();
        if prog.revealed {
            return;
        }
        let Some((share, usig)) = self.envelope.get(&inst) else { return };
        prog.revealed = true;
        step.out.push(Outbound::all(Payload::ShareReveal {
            inst,
            share: share.clone(),
            usig: usig.clone(),
        }));
        step.events.push((inst, NodeEvent::ShareRevealed));
    }

    fn try_reconstruct(&mut self, inst: InstanceId, reg: &SignerRegistry, step: &mut NodeStep) {
        let prog = self.progress.entry(inst).or_default();
        if prog.reconstructed || prog.aborted {
            return;
        }
        let Some(shares) = self.reveals.get(&inst) else { return };
        if shares.len() < reg.threshold() {
            return;
        }
        let subset: Vec<Share> = shares.values().take(reg.threshold()).cloned().collect();
        let ok = match reconstruct(&subset, reg.threshold()) {
            Ok(bytes) if bytes.len() >= 16 => {
                let (tx, nonce) = bytes.split_at(bytes.len() - 16);
                let nonce: [u8; 16] = nonce.try_into().unwrap();
                if instance_hash(tx, &nonce) == inst {
                    self.recovered.insert(inst, tx.to_vec());
                    true
                } else {
                    false
                }
            }
            _ => false,
        };
        let prog = self.progress.entry(inst).or_default();
        if ok {
            prog.reconstructed = true;
        } else {
            prog.aborted = true;
        }
        step.events.push((inst, NodeEvent::Reconstructed { ok }));
    }

    fn try_submit(&mut self, inst: InstanceId, step: &mut NodeStep) {
        let prog = self.progress.entry(inst).or_default();
        if prog.submitted || prog.aborted || !prog.reconstructed {
            return;
        }
        let Some((tau, sigma)) = self.sigma.get(&inst) else { return };
        let Some(tx) = self.recovered.get(&inst) else { return };
        prog.submitted = true;
        step.events.push((
            inst,
            NodeEvent::Submit { tx: tx.clone(), tau: *tau, sigma: sigma.clone() },
        ));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::split;
    use crate::protocol::messages::Dest;
    use crate::protocol::pi_aa::round_count;
    use crate::protocol::pi_aba::SeededCoin;
    use crate::value::parse_frac;
    use rand::rngs::StdRng;
    use rand::SeedableRng;
    use std::collections::VecDeque;

    struct World {
        nodes: Vec<ProtocolNode>,
        reg: SignerRegistry,
        coin: SeededCoin,
        queue: VecDeque<(NodeId, Outbound)>,
        events: Vec<(NodeId, InstanceId, NodeEvent)>,
    }

    impl World {
        fn new(n: usize, f: usize, spread: i64) -> Self {
            let cfg = TaConfig {
                n,
                f,
                wait: 0,
                aa_rounds: round_count(spread, parse_frac("49/100").unwrap()),
            };
            World {
                nodes: (0..n).map(|v| ProtocolNode::new(v, cfg)).collect(),
                reg: SignerRegistry::new(11, n, f),
                coin: SeededCoin { seed: 5 },
                queue: VecDeque::new(),
                events: Vec::new(),
            }
        }

        fn submit_all(&mut self, inst: InstanceId, signed: &[(Share, UserSig)], receipts: &[Tick]) {
            let reg = self.reg.clone();
            let coin = self.coin;
            for v in 0..self.nodes.len() {
                let (share, usig) = signed[v].clone();
                let step = self.nodes[v]
                    .on_user_submit(inst, share, usig, receipts[v], receipts[v], &reg, &coin);
                self.absorb(v, step);
            }
        }

        fn absorb(&mut self, v: NodeId, step: NodeStep) {
            for ob in step.out {
                self.queue.push_back((v, ob));
            }
            for (inst, ev) in step.events {
                self.events.push((v, inst, ev));
            }
            // wait=0 in these tests: the timer would fire at `now`, and the
            // pipeline re-evaluates on every later delivery anyway.
        }

        fn drain(&mut self) {
            let reg = self.reg.clone();
            let coin = self.coin;
            let n = self.nodes.len();
            let mut steps = 0usize;
            while let Some((from, ob)) = self.queue.pop_front() {
                steps += 1;
                assert!(steps < 4_000_000, "world did not quiesce");
                let targets: Vec<NodeId> = match ob.dest {
                    Dest::All => (0..n).collect(),
                    Dest::Node(v) => vec![v],
                };
                for to in targets {
                    let step = self.nodes[to].on_message(from, &ob.payload, 1_000, &reg, &coin);
                    self.absorb(to, step);
                }
            }
        }
    }

    fn make_instance(
        reg: &SignerRegistry,
        user: u64,
        tx: &[u8],
        nonce: [u8; 16],
        n: usize,
        k: usize,
    ) -> (InstanceId, Vec<(Share, UserSig)>) {
        let mut payload = tx.to_vec();
        payload.extend_from_slice(&nonce);
        let mut rng = StdRng::seed_from_u64(77);
        let shares = split(&payload, n, k, &mut rng).unwrap();
        let inst = instance_hash(tx, &nonce);
        let signed = shares
            .into_iter()
            .map(|s| {
                let usig = reg.user_sign(user, &share_sig_msg(&inst, &s));
                (s, usig)
            })
            .collect();
        (inst, signed)
    }

    #[test]
    fn pipeline_submits_identical_certificates_everywhere() {
        let (n, f) = (4, 1);
        let mut w = World::new(n, f, 16);
        let tx = b"pay alice 5".to_vec();
        let (inst, signed) = make_instance(&w.reg, 9, &tx, [0xA5; 16], n, f + 1);
        w.submit_all(inst, &signed, &[100, 104, 108, 112]);
        w.drain();

        let mut taus = Vec::new();
        for (_, ev_inst, ev) in
            w.events.iter().filter(|(_, _, e)| matches!(e, NodeEvent::Submit { .. }))
        {
            assert_eq!(ev_inst, &inst);
            if let NodeEvent::Submit { tx: got_tx, tau, sigma } = ev {
                assert_eq!(got_tx, &tx);
                assert!(w.reg.verify(&tau_sig_msg(&inst, *tau), sigma));
                taus.push(*tau);
            }
        }
        assert_eq!(taus.len(), n, "every node submits");
        taus.dedup();
        assert_eq!(taus, vec![104], "one agreed timestamp: the rank-2 receipt");
    }

    #[test]
    fn reveal_never_precedes_certificate() {
        let (n, f) = (4, 1);
        let mut w = World::new(n, f, 16);
        let (inst, signed) = make_instance(&w.reg, 2, b"tx body", [1; 16], n, f + 1);
        w.submit_all(inst, &signed, &[50, 50, 50, 50]);
        w.drain();
        // Per node, SigmaCombined must appear before ShareRevealed in the
        // absorbed event order.
        for v in 0..n {
            let order: Vec<&NodeEvent> = w
                .events
                .iter()
                .filter(|(who, _, _)| *who == v)
                .map(|(_, _, e)| e)
                .collect();
            let sigma_at = order
                .iter()
                .position(|e| matches!(e, NodeEvent::SigmaCombined { .. }))
                .expect("sigma");
            let reveal_at = order
                .iter()
                .position(|e| matches!(e, NodeEvent::ShareRevealed))
                .expect("reveal");
            assert!(sigma_at < reveal_at, "node {v}: reveal before certificate");
        }
    }

    #[test]
    fn mismatched_shares_abort_instead_of_submitting() {
        let (n, f) = (4, 1);
        let mut w = World::new(n, f, 16);
        // The user commits to one transaction but hands out shares of a
        // different payload; reconstruction then fails the hash check.
        let tx = b"claimed tx".to_vec();
        let nonce = [7u8; 16];
        let inst = instance_hash(&tx, &nonce);
        let mut rng = StdRng::seed_from_u64(3);
        let mut other = b"actual different payload".to_vec();
        other.extend_from_slice(&nonce);
        let shares = split(&other, n, f + 1, &mut rng).unwrap();
        let signed: Vec<(Share, UserSig)> = shares
            .into_iter()
            .map(|s| {
                let usig = w.reg.user_sign(4, &share_sig_msg(&inst, &s));
                (s, usig)
            })
            .collect();
        w.submit_all(inst, &signed, &[10, 10, 10, 10]);
        w.drain();
        assert!(w.events.iter().all(|(_, _, e)| !matches!(e, NodeEvent::Submit { .. })));
        let aborts = w
            .events
            .iter()
            .filter(|(_, _, e)| matches!(e, NodeEvent::Reconstructed { ok: false }))
            .count();
        assert_eq!(aborts, n, "every node aborts on the hash mismatch");
    }

    #[test]
    fn forged_partials_and_foreign_signers_are_rejected() {
        let (n, f) = (4, 1);
        let cfg = TaConfig { n, f, wait: 0, aa_rounds: 3 };
        let reg = SignerRegistry::new(11, n, f);
        let mut node = ProtocolNode::new(0, cfg);
        let inst = [2u8; 32];
        // Garbage tag.
        node.handle_partial(inst, 1, 5, &PartialSig { signer: 1, tag: [0u8; 32] }, &reg);
        // Valid partial but relayed by a different sender.
        let good = reg.partial_sign(2, &tau_sig_msg(&inst, 5));
        node.handle_partial(inst, 3, 5, &good, &reg);
        assert!(node.partials.get(&inst).is_none_or(|m| m.is_empty()));
        // The same partial from its real signer is stored.
        node.handle_partial(inst, 2, 5, &good, &reg);
        assert_eq!(node.partials[&inst].len(), 1);
    }

    #[test]
    fn unsigned_or_tampered_reveals_are_ignored() {
        let (n, f) = (4, 1);
        let cfg = TaConfig { n, f, wait: 0, aa_rounds: 3 };
        let reg = SignerRegistry::new(11, n, f);
        let mut node = ProtocolNode::new(0, cfg);
        let inst = [8u8; 32];
        let share = Share { index: 1, data: vec![1, 2, 3] };
        // Signature over a different share body.
        let other = Share { index: 1, data: vec![9, 9, 9] };
        let usig = reg.user_sign(1, &share_sig_msg(&inst, &other));
        node.handle_reveal(inst, &share, &usig, &reg);
        assert!(node.reveals.get(&inst).is_none_or(|m| m.is_empty()));
        // Correctly signed share is stored once, duplicates ignored.
        let good_sig = reg.user_sign(1, &share_sig_msg(&inst, &share));
        node.handle_reveal(inst, &share, &good_sig, &reg);
        node.handle_reveal(inst, &share, &good_sig, &reg);
        assert_eq!(node.reveals[&inst].len(), 1);
    }
}
