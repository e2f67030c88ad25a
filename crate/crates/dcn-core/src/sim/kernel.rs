//! Deterministic discrete-event kernel. Global time is an integer tick
//! counter; every node reads it only through its own (possibly skewed) clock.
//! All randomness — clock sampling, network delays, workload bytes, the
//! common coin, signing keys — flows from per-purpose streams derived from
//! the single run seed, and the event queue breaks tick ties by event class
//! (deliveries before timers) and then by creation order, so a (scenario,
//! seed) pair replays to a byte-identical event log.
//!
//! Corrupted nodes run the real node state machine wrapped in an outbound
//! intercept: the adversary plan may drop, rewrite, or amplify anything they
//! send once their behaviour is active. The scheduler may additionally slow
//! targeted traffic, but every queued message lands by the flush horizon —
//! delays are adversarial, delivery is not optional.

use crate::crypto::sig::SignerRegistry;
use crate::crypto::{digest, instance_hash, shamir};
use crate::protocol::node::{NodeEvent, NodeStep, ProtocolNode};
use crate::protocol::pi_aba::SeededCoin;
use crate::protocol::{Dest, Payload};
use crate::sim::adversary::AdversaryPlan;
use crate::sim::clock::ClockModel;
use crate::sim::config::{ConfigError, Mode, Scenario, UserModel};
use crate::sim::log::{inst_hex, EventLog, RecordKind};
use crate::sim::mempool::{validator_check, Mempool, PoolEntry};
use crate::value::format_frac;
use crate::{InstanceId, NodeId, Tick};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::collections::BinaryHeap;

/// Everything a finished run exposes: the log (sole checker input), its
/// digest, the built block, and the validator's independent verdict.
#[derive(Debug)]
pub struct RunOutput {
    pub log: EventLog,
    pub digest: String,
    pub block: Vec<PoolEntry>,
    pub validator_ok: bool,
}

/// Run one scenario to quiescence (or the hard horizon) under `seed`.
pub fn run(sc: &Scenario, seed: u64) -> Result<RunOutput, ConfigError> {
    sc.validate()?;
    let plan = AdversaryPlan::compile(sc)?;
    Kernel::build(sc, &plan, seed).drive(sc, &plan)
}

/// One planned transaction: the committed instance plus per-node envelopes.
struct TxPlan {
    inst: InstanceId,
    user: u64,
    dispatch: u64,
    /// Share and signature for each node; `None` when the user withholds.
    envelopes: Vec<Option<(shamir::Share, crate::crypto::sig::UserSig)>>,
}

enum What {
    UserArrive { node: NodeId, tx: usize },
    Deliver { from: NodeId, to: NodeId, payload: Payload, sent: u64 },
    Timer { node: NodeId, inst: InstanceId },
    FlushMark,
}

/// Heap element ordered by (tick, class, seq); `BinaryHeap` is a max-heap so
/// `Ord` is reversed to pop the earliest event first.
struct Ev {
    tick: u64,
    class: u8,
    seq: u64,
    what: What,
}

impl Ev {
    fn key(&self) -> (u64, u8, u64) {
        (self.tick, self.class, self.seq)
    }
}

impl PartialEq for Ev {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}
impl Eq for Ev {}
impl PartialOrd for Ev {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ev {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other.key().cmp(&self.key())
    }
}

const CLASS_DELIVER: u8 = 0;
const CLASS_TIMER: u8 = 1;

struct Kernel {
    nodes: Vec<ProtocolNode>,
    clocks: Vec<ClockModel>,
    reg: SignerRegistry,
    coin: SeededCoin,
    txs: Vec<TxPlan>,
    queue: BinaryHeap<Ev>,
    next_seq: u64,
    delays: ChaCha20Rng,
    log: EventLog,
    mempool: Mempool,
    flush_tick: u64,
    deferred: u32,
    last_tick: u64,
}

fn stream(seed: u64, label: &str) -> ChaCha20Rng {
    ChaCha20Rng::from_seed(digest("dcn/sim/rng/v1", &[&seed.to_le_bytes(), label.as_bytes()]))
}

fn small_seed(seed: u64, label: &str) -> u64 {
    let d = digest("dcn/sim/seed/v1", &[&seed.to_le_bytes(), label.as_bytes()]);
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

impl Kernel {
    fn build(sc: &Scenario, plan: &AdversaryPlan, seed: u64) -> Kernel {
        let n = sc.committee.n;
        let f = sc.committee.f;
        let mut log = EventLog::new();
        log.push(
            0,
            None,
            RecordKind::RunHeader {
                schema: crate::sim::config::SCHEMA_VERSION,
                n,
                f,
                mode: sc.synchrony.mode.name().to_string(),
                strategy: sc.adversary.strategy.name().to_string(),
                user_model: sc.workload.user_model.name().to_string(),
                seed,
                d_ext: sc.synchrony.d_ext,
                d_dcn: sc.synchrony.d_dcn,
                theta: format_frac(&sc.synchrony.theta),
                horizon: sc.synchrony.horizon,
                wait: sc.wait(),
                aa_rounds: sc.aa_rounds(),
                epsilon: format_frac(&sc.protocol.epsilon),
            },
        );

        let clocks = sample_clocks(sc, &mut stream(seed, "clocks"));
        for (v, c) in clocks.iter().enumerate() {
            log.push(
                0,
                Some(v),
                RecordKind::ClockParams { rate_num: c.rate_num, rate_den: c.rate_den, offset: c.offset },
            );
        }
        for &v in plan.corrupted() {
            log.push(0, Some(v), RecordKind::Corrupted { activation: plan_activation(sc) });
        }

        let cfg = sc.ta_config();
        let nodes = (0..n).map(|v| ProtocolNode::new(v, cfg)).collect();
        let reg = SignerRegistry::new(small_seed(seed, "registry"), n, f);
        let coin = SeededCoin { seed: small_seed(seed, "coin") };
        let txs = plan_workload(sc, &reg, &mut stream(seed, "workload"));

        Kernel {
            nodes,
            clocks,
            reg,
            coin,
            txs,
            queue: BinaryHeap::new(),
            next_seq: 0,
            delays: stream(seed, "delays"),
            log,
            mempool: Mempool::new(),
            flush_tick: (sc.synchrony.horizon / 2) as u64,
            deferred: 0,
            last_tick: 0,
        }
    }

    fn push(&mut self, tick: u64, class: u8, what: What) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Ev { tick, class, seq, what });
    }

    fn drive(mut self, sc: &Scenario, plan: &AdversaryPlan) -> Result<RunOutput, ConfigError> {
        // Seed the queue: the flush marker first (lowest seq at its tick),
        // then every envelope arrival.
        self.push(self.flush_tick, CLASS_DELIVER, What::FlushMark);
        for t in 0..self.txs.len() {
            let tx = &self.txs[t];
            self.log.push(
                tx.dispatch as Tick,
                None,
                RecordKind::UserDispatch {
                    inst: inst_hex(&tx.inst),
                    user: tx.user,
                    dispatch: tx.dispatch as Tick,
                },
            );
            for v in 0..sc.committee.n {
                if self.txs[t].envelopes[v].is_none() {
                    continue;
                }
                let offset = match plan.arrival_offsets() {
                    Some(off) => off[v] as u64,
                    None if plan.delays_envelope(v) => sc.synchrony.d_ext as u64,
                    None => self.delays.gen_range(0..=sc.synchrony.d_ext as u64),
                };
                let tick = self.txs[t].dispatch + offset;
                self.push(tick, CLASS_DELIVER, What::UserArrive { node: v, tx: t });
            }
        }

        let horizon = sc.synchrony.horizon as u64;
        while let Some(ev) = self.queue.pop() {
            if ev.tick > horizon {
                break;
            }
            self.last_tick = ev.tick;
            let g = ev.tick;
            match ev.what {
                What::UserArrive { node, tx } => {
                    let (inst, share, usig) = {
                        let plan_tx = &self.txs[tx];
                        let (share, usig) = plan_tx.envelopes[node].clone().expect("scheduled");
                        (plan_tx.inst, share, usig)
                    };
                    let local = self.clocks[node].local(g);
                    self.log.push(
                        g as Tick,
                        Some(node),
                        RecordKind::UserDeliver { inst: inst_hex(&inst), global: g as Tick, local },
                    );
                    let step = self.nodes[node].on_user_submit(
                        inst, share, usig, local, local, &self.reg, &self.coin,
                    );
                    if let Some(due) = step.timer_due {
                        let at = self.clocks[node].global_at_or_after(due, g);
                        self.push(at, CLASS_TIMER, What::Timer { node, inst });
                    }
                    self.process(sc, plan, node, g, step);
                }
                What::Deliver { from, to, payload, sent } => {
                    if let Payload::InitTs { inst, ts } = &payload {
                        self.log.push(
                            g as Tick,
                            Some(to),
                            RecordKind::InitTsDeliver {
                                inst: inst_hex(inst),
                                from,
                                ts: *ts,
                                sent: sent as Tick,
                                recv: g as Tick,
                            },
                        );
                    }
                    let local = self.clocks[to].local(g);
                    let step = self.nodes[to].on_message(from, &payload, local, &self.reg, &self.coin);
                    self.process(sc, plan, to, g, step);
                }
                What::Timer { node, inst } => {
                    let local = self.clocks[node].local(g);
                    let step = self.nodes[node].on_timer(inst, local, &self.reg, &self.coin);
                    self.process(sc, plan, node, g, step);
                }
                What::FlushMark => {
                    self.log.push(g as Tick, None, RecordKind::Flush { released: self.deferred });
                }
            }
        }

        let block = self.mempool.build_block();
        let end = self.last_tick as Tick;
        for (i, e) in block.iter().enumerate() {
            self.log.push(
                end,
                None,
                RecordKind::BlockEntry { position: i as u32, inst: inst_hex(&e.inst), tau: e.tau },
            );
        }
        let validator_ok = validator_check(&self.reg, &block, Tick::MIN);
        self.log.push(end, None, RecordKind::ValidatorVerdict { ok: validator_ok });
        let digest = self.log.digest_hex();
        Ok(RunOutput { log: self.log, digest, block, validator_ok })
    }

    /// Fan out a step: expand destinations, apply the byzantine intercept,
    /// schedule deliveries, and turn node events into log records.
    fn process(&mut self, sc: &Scenario, plan: &AdversaryPlan, v: NodeId, g: u64, step: NodeStep) {
        let byz_active = plan.active(v, g as Tick);
        for ob in step.out {
            let recipients: Vec<NodeId> = match ob.dest {
                Dest::All => (0..sc.committee.n).collect(),
                Dest::Node(r) => vec![r],
            };
            for r in recipients {
                if byz_active {
                    for p in plan.rewrite(v, r, &ob.payload) {
                        self.schedule_delivery(sc, plan, v, r, p, g);
                    }
                } else {
                    self.schedule_delivery(sc, plan, v, r, ob.payload.clone(), g);
                }
            }
        }
        for (inst, event) in step.events {
            self.record_event(v, g, inst, event);
        }
    }

    fn schedule_delivery(
        &mut self,
        sc: &Scenario,
        plan: &AdversaryPlan,
        from: NodeId,
        to: NodeId,
        payload: Payload,
        g: u64,
    ) {
        let tick = if from == to {
            g // loopback: immediate, never touched by the scheduler
        } else if sc.synchrony.mode == Mode::AsyncAdversarial
            && g < self.flush_tick
            && plan.delays(from, to, payload.kind())
        {
            self.deferred += 1;
            self.flush_tick
        } else {
            g + self.network_delay(sc, g)
        };
        self.push(tick, CLASS_DELIVER, What::Deliver { from, to, payload, sent: g });
    }

    fn network_delay(&mut self, sc: &Scenario, g: u64) -> u64 {
        let d = sc.synchrony.d_dcn as u64;
        match sc.synchrony.mode {
            Mode::Synchronous | Mode::AsyncAdversarial => self.delays.gen_range(1..=d),
            Mode::AsyncRandom => self.random_async_delay(d, sc.synchrony.tail as u64),
            Mode::SyncWindow => {
                if g < sc.synchrony.window as u64 {
                    self.delays.gen_range(1..=d)
                } else {
                    self.random_async_delay(d, sc.synchrony.tail as u64)
                }
            }
        }
    }

    fn random_async_delay(&mut self, d: u64, tail: u64) -> u64 {
        if self.delays.gen_bool(0.5) {
            self.delays.gen_range(1..=d)
        } else {
            self.delays.gen_range(d + 1..=(d * tail).max(d + 1))
        }
    }

    fn record_event(&mut self, v: NodeId, g: u64, inst: InstanceId, event: NodeEvent) {
        let tick = g as Tick;
        let inst_s = inst_hex(&inst);
        let kind = match event {
            NodeEvent::InitOutput { tau_mu } => RecordKind::InitOutput { inst: inst_s, tau_mu },
            NodeEvent::AaOutput { value, rounds } => {
                RecordKind::AaOutput { inst: inst_s, value: format_frac(&value), rounds }
            }
            NodeEvent::AbaDecided { bit, phases } => {
                RecordKind::AbaDecide { inst: inst_s, bit, phase: phases }
            }
            NodeEvent::TaOutput { tau } => RecordKind::TaOutput { inst: inst_s, tau },
            NodeEvent::SigmaCombined { tau } => RecordKind::SigmaCombined { inst: inst_s, tau },
            NodeEvent::ShareRevealed => RecordKind::ShareRevealed { inst: inst_s },
            NodeEvent::Reconstructed { ok } => RecordKind::Reconstructed { inst: inst_s, ok },
            NodeEvent::Submit { tx, tau, sigma } => {
                self.log.push(tick, Some(v), RecordKind::Submitted { inst: inst_s.clone(), tau });
                let accepted = self.mempool.submit(&self.reg, inst, tau, tx, sigma);
                RecordKind::MempoolAccept { inst: inst_s, tau, accepted }
            }
        };
        self.log.push(tick, Some(v), kind);
    }
}

fn plan_activation(sc: &Scenario) -> Tick {
    sc.adversary.adaptive_at.unwrap_or(0)
}

/// Sample each node's clock: rates spread across [1/theta, theta] (exactly 1
/// when theta is 1), integer offsets within the configured bound.
fn sample_clocks(sc: &Scenario, rng: &mut ChaCha20Rng) -> Vec<ClockModel> {
    let theta = sc.synchrony.theta;
    let off = sc.synchrony.offset_max;
    (0..sc.committee.n)
        .map(|_| {
            let rate = if theta == crate::value::frac(1) {
                crate::value::frac(1)
            } else {
                // rate = 1/theta + (k / K) * (theta - 1/theta), k uniform.
                const K: i128 = 1000;
                let k = rng.gen_range(0..=K);
                let lo = theta.recip();
                lo + num_rational::Ratio::new(k, K) * (theta - lo)
            };
            let offset = if off == 0 { 0 } else { rng.gen_range(-off..=off) };
            ClockModel {
                rate_num: i64::try_from(*rate.numer()).expect("clock rate fits"),
                rate_den: i64::try_from(*rate.denom()).expect("clock rate fits"),
                offset,
            }
        })
        .collect()
}

/// Build every transaction's instance and per-node envelopes up front.
fn plan_workload(sc: &Scenario, reg: &SignerRegistry, rng: &mut ChaCha20Rng) -> Vec<TxPlan> {
    let n = sc.committee.n;
    let k = sc.committee.f + 1;
    (0..sc.workload.transactions)
        .map(|i| {
            let user = (i % sc.workload.users) as u64;
            let len = 16 + rng.gen_range(0..32) as usize;
            let mut tx = vec![0u8; len];
            rng.fill_bytes(&mut tx);
            let mut nonce = [0u8; 16];
            rng.fill_bytes(&mut nonce);
            let inst = instance_hash(&tx, &nonce);
            let mut secret = tx.clone();
            secret.extend_from_slice(&nonce);

            let shares = match sc.workload.user_model {
                UserModel::Honest | UserModel::Withholding => {
                    shamir::split(&secret, n, k, rng).expect("split parameters valid")
                }
                UserModel::ContradictoryShares => {
                    // Two splits of unrelated secrets, interleaved by node
                    // parity: any k collected shares reconstruct bytes whose
                    // commitment cannot match `inst`.
                    let mut decoy_a = vec![0u8; secret.len()];
                    let mut decoy_b = vec![0u8; secret.len()];
                    rng.fill_bytes(&mut decoy_a);
                    rng.fill_bytes(&mut decoy_b);
                    let a = shamir::split(&decoy_a, n, k, rng).expect("split parameters valid");
                    let b = shamir::split(&decoy_b, n, k, rng).expect("split parameters valid");
                    a.into_iter()
                        .zip(b)
                        .enumerate()
                        .map(|(v, (sa, sb))| if v % 2 == 0 { sa } else { sb })
                        .collect()
                }
            };

            let envelopes = shares
                .into_iter()
                .enumerate()
                .map(|(v, share)| {
                    if sc.workload.user_model == UserModel::Withholding
                        && sc.workload.withhold_from.contains(&v)
                    {
                        return None;
                    }
                    let usig = reg.user_sign(user, &crate::protocol::node::share_sig_msg(&inst, &share));
                    Some((share, usig))
                })
                .collect();

            TxPlan { inst, user, dispatch: sc.dispatch_tick(i) as u64, envelopes }
        })
        .collect()
}
