//! Adversary strategies and the compiled per-run plan the kernel consults.
//!
//! A strategy bundles three powers, all bounded by the fault budget and the
//! eventual-delivery rule (messages may be delayed to the flush horizon but
//! never dropped on the wire):
//!
//! * **node corruption** — up to f nodes run a byzantine behaviour instead of
//!   the protocol: staying silent, equivocating or forging values, or
//!   withholding their protocol messages; corrupted nodes that "behave
//!   honestly" still count against the budget,
//! * **scheduling** — targeted message classes or senders are slowed to the
//!   flush horizon (only meaningful under the adversarial scheduler),
//! * **arrival scripting** — the user's envelope reaches each node at a chosen
//!   offset within the external delivery bound, which fixes every node's init
//!   input; the three lower-bound scenarios are exactly such scripts.

use crate::crypto::sig::PartialSig;
use crate::protocol::Payload;
use crate::sim::config::{ConfigError, Scenario};
use crate::{NodeId, Tick};
use std::collections::BTreeSet;

/// Built-in adversary strategies selectable from a scenario document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Strategy {
    /// No corrupted behaviour; the corrupted set (if any) acts honestly.
    None,
    /// Corrupted nodes stop sending anything once active.
    Crash,
    /// Corrupted nodes send each recipient a different init timestamp.
    EquivocateInitTimestamps,
    /// Corrupted nodes broadcast the configured extreme value (sign included)
    /// as their init timestamp.
    ExtremeTimestamps,
    /// Corrupted nodes never reveal their transaction share.
    WithholdShares,
    /// Corrupted nodes accompany every real partial signature with forgeries:
    /// fabricated tags under their own name and under honest names.
    ForgePartialAttempts,
    /// Pure scheduling attack: slow the configured message kinds from the
    /// configured senders to the flush horizon.
    DelayTargeted,
    /// Lower-bound scenario (a): corrupted silent, honest arrival offsets
    /// f+1..n. Every honest view is exactly the honest values.
    ScenarioA,
    /// Lower-bound scenario (b): corrupted behave honestly with the top f
    /// arrival offsets n-f+1..n; every message from the f honest nodes holding
    /// the lowest offsets is slowed. Forces the output f ranks above the
    /// honest median.
    ScenarioB,
    /// Lower-bound scenario (c): corrupted behave honestly with offsets
    /// f+1..2f, below the honest offsets 2f+1..n+f; every message from the f
    /// honest nodes holding the highest offsets is slowed. Forces the output
    /// f ranks below the honest median.
    ScenarioC,
    /// Split the committee into a low group (offset 0) and a high group
    /// (offset d_ext) and slow just enough cross-group init timestamps that
    /// the two groups pick divergent medians — maximal approximate-agreement
    /// work without any corrupted behaviour.
    SplitViews,
}

impl Strategy {
    pub const ALL: &'static [Strategy] = &[
        Strategy::None,
        Strategy::Crash,
        Strategy::EquivocateInitTimestamps,
        Strategy::ExtremeTimestamps,
        Strategy::WithholdShares,
        Strategy::ForgePartialAttempts,
        Strategy::DelayTargeted,
        Strategy::ScenarioA,
        Strategy::ScenarioB,
        Strategy::ScenarioC,
        Strategy::SplitViews,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::None => "none",
            Strategy::Crash => "crash",
            Strategy::EquivocateInitTimestamps => "equivocate_init_timestamps",
            Strategy::ExtremeTimestamps => "extreme_timestamps",
            Strategy::WithholdShares => "withhold_shares",
            Strategy::ForgePartialAttempts => "forge_partial_attempts",
            Strategy::DelayTargeted => "delay_targeted",
            Strategy::ScenarioA => "scenario_a",
            Strategy::ScenarioB => "scenario_b",
            Strategy::ScenarioC => "scenario_c",
            Strategy::SplitViews => "split_views",
        }
    }

    pub fn from_name(s: &str) -> Option<Strategy> {
        Strategy::ALL.iter().copied().find(|st| st.name() == s)
    }

    pub fn names() -> Vec<&'static str> {
        Strategy::ALL.iter().map(|s| s.name()).collect()
    }

    /// Strategies that engineer message delays and therefore only make sense
    /// under the adversarial scheduler.
    pub fn needs_adversarial_scheduler(self) -> bool {
        matches!(
            self,
            Strategy::DelayTargeted | Strategy::ScenarioB | Strategy::ScenarioC | Strategy::SplitViews
        )
    }
}

/// What an active corrupted node does with its own outbound traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ByzBehavior {
    Honest,
    Silent,
    EquivocateInit,
    ExtremeInit,
    WithholdShares,
    ForgePartials,
}

/// Which messages the scheduler slows to the flush horizon.
#[derive(Debug, Clone)]
enum DelayPolicy {
    None,
    /// Every message from these senders.
    Senders(BTreeSet<NodeId>),
    /// Messages of these kinds from these senders ("user" targets envelopes).
    Targeted { kinds: BTreeSet<String>, senders: BTreeSet<NodeId> },
    /// Init timestamps along these (sender, recipient) pairs.
    InitPairs(BTreeSet<(NodeId, NodeId)>),
}

/// A strategy compiled against one scenario: everything the kernel needs to
/// answer "what does this send turn into" and "how slow is this edge".
#[derive(Debug, Clone)]
pub struct AdversaryPlan {
    corrupted: BTreeSet<NodeId>,
    behavior: ByzBehavior,
    activation: Tick,
    magnitude: i64,
    /// Per-node arrival offset of the user envelope, if the strategy scripts
    /// arrivals; offsets are global ticks after dispatch, all within d_ext.
    arrival_offsets: Option<Vec<Tick>>,
    delay: DelayPolicy,
}

impl AdversaryPlan {
    pub fn compile(sc: &Scenario) -> Result<AdversaryPlan, ConfigError> {
        let n = sc.committee.n;
        let f = sc.committee.f;
        let honest = sc.honest_nodes();
        let corrupted: BTreeSet<NodeId> = sc.adversary.corrupted.iter().copied().collect();
        let strategy = sc.adversary.strategy;

        let behavior = match strategy {
            Strategy::None
            | Strategy::DelayTargeted
            | Strategy::ScenarioB
            | Strategy::ScenarioC
            | Strategy::SplitViews => ByzBehavior::Honest,
            Strategy::Crash | Strategy::ScenarioA => ByzBehavior::Silent,
            Strategy::EquivocateInitTimestamps => ByzBehavior::EquivocateInit,
            Strategy::ExtremeTimestamps => ByzBehavior::ExtremeInit,
            Strategy::WithholdShares => ByzBehavior::WithholdShares,
            Strategy::ForgePartialAttempts => ByzBehavior::ForgePartials,
        };

        // Arrival scripts assign each node's init input by scheduling the
        // envelope's arrival offset; honest ids take consecutive offsets in
        // ascending id order so "the f lowest/highest holders" are known ids.
        let mut arrival_offsets = None;
        let mut delay = DelayPolicy::None;
        match strategy {
            Strategy::ScenarioA => {
                let mut offsets = vec![0; n];
                for (j, &v) in honest.iter().enumerate() {
                    offsets[v] = (f + 1 + j) as Tick;
                }
                arrival_offsets = Some(offsets);
            }
            Strategy::ScenarioB => {
                let mut offsets = vec![0; n];
                for (j, &v) in honest.iter().enumerate() {
                    offsets[v] = (1 + j) as Tick;
                }
                for (i, &v) in corrupted.iter().enumerate() {
                    offsets[v] = (n - f + 1 + i) as Tick;
                }
                arrival_offsets = Some(offsets);
                delay = DelayPolicy::Senders(honest.iter().take(f).copied().collect());
            }
            Strategy::ScenarioC => {
                let mut offsets = vec![0; n];
                for (j, &v) in honest.iter().enumerate() {
                    offsets[v] = (2 * f + 1 + j) as Tick;
                }
                for (i, &v) in corrupted.iter().enumerate() {
                    offsets[v] = (f + 1 + i) as Tick;
                }
                arrival_offsets = Some(offsets);
                delay = DelayPolicy::Senders(honest.iter().rev().take(f).copied().collect());
            }
            Strategy::SplitViews => {
                let low: Vec<NodeId> = (0..n.div_ceil(2)).collect();
                let high: Vec<NodeId> = (n.div_ceil(2)..n).collect();
                let mut offsets = vec![0; n];
                for &v in &high {
                    offsets[v] = sc.synchrony.d_ext;
                }
                arrival_offsets = Some(offsets);
                // Hide the f highest senders from the low group and the f
                // lowest senders from the high group; every view still reaches
                // the n-f quorum, but the two groups sort around different
                // medians.
                let mut pairs = BTreeSet::new();
                for &s in high.iter().rev().take(f) {
                    for &r in &low {
                        pairs.insert((s, r));
                    }
                }
                for &s in low.iter().take(f) {
                    for &r in &high {
                        pairs.insert((s, r));
                    }
                }
                delay = DelayPolicy::InitPairs(pairs);
            }
            Strategy::ExtremeTimestamps => {
                // Distinct consecutive honest receipts: with corrupted inputs
                // pinned at an extreme, the selection shifts by exactly
                // ceil(f/2) ranks (low extreme) or floor(f/2) (high), so a
                // run under this script exhibits the synchronous bound with
                // equality instead of merely staying under it.
                let mut offsets = vec![1; n];
                for (j, &v) in honest.iter().enumerate() {
                    offsets[v] = (1 + j) as Tick;
                }
                arrival_offsets = Some(offsets);
            }
            Strategy::DelayTargeted => {
                delay = DelayPolicy::Targeted {
                    kinds: sc.adversary.delay_kinds.iter().cloned().collect(),
                    senders: sc.adversary.delay_senders.iter().copied().collect(),
                };
            }
            _ => {}
        }

        if let Some(ref offsets) = arrival_offsets {
            let max = offsets.iter().copied().max().unwrap_or(0);
            if max > sc.synchrony.d_ext {
                return Err(ConfigError::Invalid {
                    path: "synchrony.d_ext",
                    msg: format!(
                        "{} scripts arrival offsets up to {max}; raise d_ext (currently {})",
                        strategy.name(),
                        sc.synchrony.d_ext
                    ),
                });
            }
        }

        Ok(AdversaryPlan {
            corrupted,
            behavior,
            activation: sc.adversary.adaptive_at.unwrap_or(0),
            magnitude: sc.adversary.magnitude,
            arrival_offsets,
            delay,
        })
    }

    pub fn corrupted(&self) -> &BTreeSet<NodeId> {
        &self.corrupted
    }

    pub fn is_corrupted(&self, v: NodeId) -> bool {
        self.corrupted.contains(&v)
    }

    /// True once `v`'s byzantine behaviour is switched on.
    pub fn active(&self, v: NodeId, now: Tick) -> bool {
        self.is_corrupted(v) && now >= self.activation
    }

    pub fn arrival_offsets(&self) -> Option<&[Tick]> {
        self.arrival_offsets.as_deref()
    }

    /// Should the scheduler slow this node-to-node edge to the flush horizon?
    pub fn delays(&self, from: NodeId, to: NodeId, kind: &str) -> bool {
        match &self.delay {
            DelayPolicy::None => false,
            DelayPolicy::Senders(s) => s.contains(&from),
            DelayPolicy::Targeted { kinds, senders } => {
                kinds.contains(kind) && senders.contains(&from)
            }
            DelayPolicy::InitPairs(p) => kind == "init_ts" && p.contains(&(from, to)),
        }
    }

    /// Should the user envelope to `node` be slowed? (Only the targeted
    /// policy's pseudo-kind "user" reaches envelopes; arrival scripts and the
    /// external bound stay authoritative otherwise.)
    pub fn delays_envelope(&self, node: NodeId) -> bool {
        match &self.delay {
            DelayPolicy::Targeted { kinds, senders } => {
                kinds.contains("user") && senders.contains(&node)
            }
            _ => false,
        }
    }

    /// What `from` (corrupted, active) actually sends to `to` in place of the
    /// honest `payload`. Empty means the message is suppressed; forgery
    /// strategies append fabricated payloads after the honest one.
    pub fn rewrite(&self, from: NodeId, to: NodeId, payload: &Payload) -> Vec<Payload> {
        match self.behavior {
            ByzBehavior::Honest => vec![payload.clone()],
            ByzBehavior::Silent => Vec::new(),
            ByzBehavior::EquivocateInit => match payload {
                Payload::InitTs { inst, .. } => {
                    let sign = if to % 2 == 0 { -1 } else { 1 };
                    let ts = sign * self.magnitude + to as i64;
                    vec![Payload::InitTs { inst: *inst, ts }]
                }
                other => vec![other.clone()],
            },
            ByzBehavior::ExtremeInit => match payload {
                Payload::InitTs { inst, .. } => {
                    vec![Payload::InitTs { inst: *inst, ts: self.magnitude }]
                }
                other => vec![other.clone()],
            },
            ByzBehavior::WithholdShares => match payload {
                Payload::ShareReveal { .. } => Vec::new(),
                other => vec![other.clone()],
            },
            ByzBehavior::ForgePartials => match payload {
                Payload::SigPartial { inst, tau, partial } => {
                    let mut junk_tag = [0xA5u8; 32];
                    junk_tag[0] = from as u8;
                    junk_tag[1] = to as u8;
                    vec![
                        payload.clone(),
                        // Fabricated tag under the sender's own name.
                        Payload::SigPartial {
                            inst: *inst,
                            tau: *tau,
                            partial: PartialSig { signer: partial.signer, tag: junk_tag },
                        },
                        // Impersonation of the recipient: signer != from must
                        // be rejected regardless of the tag.
                        Payload::SigPartial {
                            inst: *inst,
                            tau: tau + 1,
                            partial: PartialSig { signer: to, tag: junk_tag },
                        },
                    ]
                }
                other => vec![other.clone()],
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::config::{Mode, Scenario};

    fn scenario(n: usize, strategy: Strategy) -> Scenario {
        let mut sc = Scenario::baseline(n);
        sc.adversary.strategy = strategy;
        if strategy.needs_adversarial_scheduler() {
            sc.synchrony.mode = Mode::AsyncAdversarial;
        }
        sc.validate().unwrap();
        sc
    }

    #[test]
    fn names_round_trip() {
        for &s in Strategy::ALL {
            assert_eq!(Strategy::from_name(s.name()), Some(s));
        }
        assert_eq!(Strategy::from_name("nope"), None);
    }

    #[test]
    fn scenario_b_scripts_offsets_and_slows_lowest_holders() {
        // n = 7, f = 2: honest ids 0..4 get offsets 1..5, corrupted ids 5, 6
        // get 6 and 7; ids 0 and 1 (lowest holders) are slowed.
        let plan = AdversaryPlan::compile(&scenario(7, Strategy::ScenarioB)).unwrap();
        assert_eq!(plan.arrival_offsets().unwrap(), &[1, 2, 3, 4, 5, 6, 7]);
        assert!(plan.delays(0, 4, "aa_echo"));
        assert!(plan.delays(1, 2, "init_ts"));
        assert!(!plan.delays(2, 0, "init_ts"));
    }

    #[test]
    fn scenario_c_puts_corrupted_below_honest_range() {
        // n = 7, f = 2: corrupted ids 5, 6 take offsets 3, 4; honest ids 0..4
        // take 5..9; the two highest honest holders (ids 3, 4) are slowed.
        let plan = AdversaryPlan::compile(&scenario(7, Strategy::ScenarioC)).unwrap();
        assert_eq!(plan.arrival_offsets().unwrap(), &[5, 6, 7, 8, 9, 3, 4]);
        assert!(plan.delays(4, 0, "share_reveal"));
        assert!(plan.delays(3, 6, "init_ts"));
        assert!(!plan.delays(2, 1, "init_ts"));
    }

    #[test]
    fn split_views_hides_f_cross_senders_each_way() {
        let plan = AdversaryPlan::compile(&scenario(4, Strategy::SplitViews)).unwrap();
        assert_eq!(plan.arrival_offsets().unwrap(), &[0, 0, 10, 10]);
        // High sender 3 hidden from low ids, low sender 0 hidden from high.
        assert!(plan.delays(3, 0, "init_ts"));
        assert!(plan.delays(3, 1, "init_ts"));
        assert!(plan.delays(0, 2, "init_ts"));
        assert!(plan.delays(0, 3, "init_ts"));
        assert!(!plan.delays(2, 0, "init_ts"));
        assert!(!plan.delays(3, 0, "aa_send"));
    }

    #[test]
    fn arrival_script_must_fit_external_bound() {
        let mut sc = scenario(10, Strategy::ScenarioC);
        sc.synchrony.d_ext = 5; // script needs offsets up to n + f = 13
        let err = AdversaryPlan::compile(&sc).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { path: "synchrony.d_ext", .. }));
    }

    #[test]
    fn silent_behaviour_drops_everything_extreme_rewrites_init() {
        let inst = [7u8; 32];
        let silent = AdversaryPlan::compile(&scenario(4, Strategy::Crash)).unwrap();
        assert!(silent.rewrite(3, 0, &Payload::InitTs { inst, ts: 42 }).is_empty());

        let mut sc = scenario(4, Strategy::ExtremeTimestamps);
        sc.adversary.magnitude = -999;
        let extreme = AdversaryPlan::compile(&sc).unwrap();
        let out = extreme.rewrite(3, 1, &Payload::InitTs { inst, ts: 42 });
        assert_eq!(out, vec![Payload::InitTs { inst, ts: -999 }]);
        // Non-init traffic passes through unchanged.
        let aux = Payload::AbaAux { inst, phase: 1, bit: true };
        assert_eq!(extreme.rewrite(3, 1, &aux), vec![aux]);
    }

    #[test]
    fn adaptive_activation_gates_behaviour() {
        let mut sc = scenario(4, Strategy::Crash);
        sc.adversary.adaptive_at = Some(100);
        let plan = AdversaryPlan::compile(&sc).unwrap();
        assert!(!plan.active(3, 99));
        assert!(plan.active(3, 100));
        assert!(!plan.active(0, 100)); // honest nodes never activate
    }

    #[test]
    fn forgery_strategy_appends_bad_partials() {
        let plan = AdversaryPlan::compile(&scenario(4, Strategy::ForgePartialAttempts)).unwrap();
        let real = Payload::SigPartial {
            inst: [1u8; 32],
            tau: 50,
            partial: PartialSig { signer: 3, tag: [9u8; 32] },
        };
        let out = plan.rewrite(3, 2, &real);
        assert_eq!(out.len(), 3);
        assert_eq!(out[0], real);
        // One forgery impersonates the recipient.
        assert!(out.iter().any(|p| matches!(
            p,
            Payload::SigPartial { partial, .. } if partial.signer == 2
        )));
    }
}
