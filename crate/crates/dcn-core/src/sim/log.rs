//! Structured event log: every run appends line-delimited records that the
//! checker consumes and the CLI exports. The log is the only channel between
//! a simulation and its verdict — the checker never peeks at kernel state —
//! and its serialized bytes are digested so reruns can be compared for
//! byte-identical determinism.

use crate::crypto::digest;
use crate::{InstanceId, NodeId, Tick};
use serde::Serialize;
use std::fmt::Write as _;

/// One log line. `node` is the acting node where one exists; mempool- and
/// block-level records leave it empty.
#[derive(Debug, Clone, Serialize)]
pub struct Record {
    pub tick: Tick,
    pub seq: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node: Option<NodeId>,
    #[serde(flatten)]
    pub kind: RecordKind,
}

/// Record payloads. Instance ids are full lowercase hex; exact rational
/// values are rendered as "p/q" strings.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecordKind {
    /// First record of every log: the run's identity and derived constants.
    RunHeader {
        schema: u32,
        n: usize,
        f: usize,
        mode: String,
        strategy: String,
        user_model: String,
        seed: u64,
        d_ext: Tick,
        d_dcn: Tick,
        theta: String,
        horizon: Tick,
        wait: Tick,
        aa_rounds: u32,
        epsilon: String,
    },
    /// Sampled clock of one node: local = floor(global * num / den) + offset.
    ClockParams { rate_num: i64, rate_den: i64, offset: Tick },
    /// Membership of the corrupted set and when its behaviour activates.
    Corrupted { activation: Tick },
    /// A user handed a transaction to the network at this global tick.
    UserDispatch { inst: String, user: u64, dispatch: Tick },
    /// The envelope reached a node; `local` is that node's clock reading,
    /// which becomes its init input.
    UserDeliver { inst: String, global: Tick, local: Tick },
    /// An init timestamp broadcast landed (kept even for duplicate senders);
    /// `sent`/`recv` are global ticks, for post-hoc synchrony measurement.
    InitTsDeliver { inst: String, from: NodeId, ts: Tick, sent: Tick, recv: Tick },
    /// A node latched its init selection.
    InitOutput { inst: String, tau_mu: Tick },
    /// A node finished its fixed approximate-agreement schedule.
    AaOutput { inst: String, value: String, rounds: u32 },
    /// A node decided the rounding parity (phase = decision phase).
    AbaDecide { inst: String, bit: bool, phase: u32 },
    /// A node holds the agreed integer timestamp.
    TaOutput { inst: String, tau: Tick },
    /// A node aggregated f+1 matching partial signatures.
    SigmaCombined { inst: String, tau: Tick },
    /// A node revealed its transaction share (strictly after sigma).
    ShareRevealed { inst: String },
    /// A node reconstructed the transaction; ok = commitment hash matched.
    Reconstructed { inst: String, ok: bool },
    /// A node handed (tx, tau, sigma) to the mempool.
    Submitted { inst: String, tau: Tick },
    /// The mempool's verdict on a submission (dedup + signature check).
    MempoolAccept { inst: String, tau: Tick, accepted: bool },
    /// One position of the built block, in block order.
    BlockEntry { position: u32, inst: String, tau: Tick },
    /// An independent validator re-checked the block.
    ValidatorVerdict { ok: bool },
    /// The scheduler flushed its delayed queue at the horizon midpoint.
    Flush { released: u32 },
}

/// Append-only log with a deterministic sequence number per record.
#[derive(Debug, Default)]
pub struct EventLog {
    records: Vec<Record>,
}

impl EventLog {
    pub fn new() -> EventLog {
        EventLog::default()
    }

    pub fn push(&mut self, tick: Tick, node: Option<NodeId>, kind: RecordKind) {
        let seq = self.records.len() as u64;
        self.records.push(Record { tick, seq, node, kind });
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    /// Line-delimited JSON, one record per line, in append order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    /// Hex digest of the serialized log; byte-identical reruns match here.
    pub fn digest_hex(&self) -> String {
        hex(&digest("dcn/log/v1", &[self.to_jsonl().as_bytes()]))
    }
}

/// Full lowercase hex of an instance id.
pub fn inst_hex(inst: &InstanceId) -> String {
    hex(inst)
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        write!(s, "{b:02x}").unwrap();
    }
    s
}
