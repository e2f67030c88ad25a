//! Scenario configuration: a versioned key-value document (TOML, `schema = 1`)
//! that fixes the committee, synchrony regime, adversary, workload, and
//! protocol parameters for one simulated run, plus the constants the protocol
//! derives from it (init wait duration, approximate-agreement input-spread
//! bound, and the fixed round count).
//!
//! ```toml
//! schema = 1
//!
//! [committee]
//! n = 4            # committee size, n > 3f
//! f = 1            # fault budget; defaults to floor((n-1)/3)
//!
//! [synchrony]
//! mode = "synchronous"   # synchronous | async_random | async_adversarial | sync_window
//! d_ext = 10       # bound on user -> node delivery (always enforced)
//! d_dcn = 5        # node -> node bound (enforced only while synchrony holds)
//! theta = "1"      # clock rate bound >= 1, rational "p/q"
//! offset_max = 0   # clock offsets drawn from [-offset_max, offset_max]
//! window = 0       # sync_window mode: ticks of synchrony before delays widen
//! tail = 10        # async_random: slow deliveries stretch to tail * d_dcn
//! horizon = 1000000 # hard flush horizon: every queued message lands by horizon/2
//!
//! [adversary]
//! strategy = "none"
//! corrupted = []   # node ids; defaults to the last f ids
//! magnitude = 1000000   # extreme-value magnitude for timestamp forgers
//! # adaptive_at = 500   # optional: corruption activates at this global tick
//! delay_kinds = ["init_ts"]  # delay_targeted: payload kinds to slow down
//! delay_senders = [0]        # delay_targeted: senders whose messages lag
//!
//! [workload]
//! transactions = 1
//! users = 1
//! user_model = "honest"  # honest | withholding | contradictory_shares
//! withhold_from = []     # withholding model: nodes that never get a share
//!
//! [protocol]
//! epsilon = "49/100"  # agreement tolerance, rational in (0, 1/2)
//! r_cap = 64          # reject configs whose derived round count exceeds this
//! ```

use crate::protocol::pi_aa;
use crate::protocol::pi_ta::TaConfig;
use crate::sim::adversary::Strategy;
use crate::value::{frac, parse_frac, Frac};
use crate::{NodeId, Tick};
use num_rational::Ratio;
use serde::Deserialize;
use thiserror::Error;

/// Version tag every scenario document must carry.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    /// Document did not parse as TOML at all.
    #[error("scenario document is not valid TOML: {0}")]
    Syntax(#[from] toml::de::Error),
    /// A field parsed but violates a constraint; `path` is the TOML key path.
    #[error("{path}: {msg}")]
    Invalid { path: &'static str, msg: String },
}

fn invalid(path: &'static str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { path, msg: msg.into() }
}

/// Network regime for node-to-node traffic. User-to-node deliveries always
/// land within `d_ext` ticks in every mode: that bound is the model assumption
/// the init wait timer and the fixed agreement round count are sized against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Every node-to-node delivery lands within [1, d_dcn] ticks.
    Synchronous,
    /// Delays drawn from [1, d_dcn] with a seeded heavy tail up to tail*d_dcn.
    AsyncRandom,
    /// The scheduler delays messages matching the adversary's policy as long
    /// as it can; everything still flushes by horizon/2 (delay, never drop).
    AsyncAdversarial,
    /// Synchronous during [0, window), async_random after.
    SyncWindow,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Synchronous => "synchronous",
            Mode::AsyncRandom => "async_random",
            Mode::AsyncAdversarial => "async_adversarial",
            Mode::SyncWindow => "sync_window",
        }
    }

    /// True for the modes whose node-to-node delays may exceed `d_dcn`.
    pub fn is_async(self) -> bool {
        matches!(self, Mode::AsyncRandom | Mode::AsyncAdversarial)
    }
}

/// How the transaction-submitting user behaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserModel {
    /// Sends every node its share of a consistently split transaction.
    Honest,
    /// Never sends shares to the nodes listed in `withhold_from`.
    Withholding,
    /// Sends validly signed shares that do not reconstruct the committed
    /// transaction, so reconstruction must fail the hash check and abort.
    ContradictoryShares,
}

impl UserModel {
    pub fn name(self) -> &'static str {
        match self {
            UserModel::Honest => "honest",
            UserModel::Withholding => "withholding",
            UserModel::ContradictoryShares => "contradictory_shares",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Committee {
    pub n: usize,
    pub f: usize,
}

#[derive(Debug, Clone)]
pub struct Synchrony {
    pub mode: Mode,
    pub d_ext: Tick,
    pub d_dcn: Tick,
    pub theta: Frac,
    pub offset_max: Tick,
    pub window: Tick,
    pub tail: Tick,
    pub horizon: Tick,
}

#[derive(Debug, Clone)]
pub struct AdversarySpec {
    pub strategy: Strategy,
    pub corrupted: Vec<NodeId>,
    pub magnitude: i64,
    /// Global tick at which the corrupted set switches from honest behaviour
    /// to its strategy; `None` means corrupted from the start.
    pub adaptive_at: Option<Tick>,
    pub delay_kinds: Vec<String>,
    pub delay_senders: Vec<NodeId>,
}

#[derive(Debug, Clone)]
pub struct Workload {
    pub transactions: u32,
    pub users: u32,
    pub user_model: UserModel,
    pub withhold_from: Vec<NodeId>,
}

#[derive(Debug, Clone)]
pub struct ProtocolParams {
    pub epsilon: Frac,
    pub r_cap: u32,
}

/// A fully validated scenario. Mutate fields freely when building scenarios
/// programmatically, then call [`Scenario::validate`] before running; derived
/// quantities are computed on demand so they can never go stale.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub committee: Committee,
    pub synchrony: Synchrony,
    pub adversary: AdversarySpec,
    pub workload: Workload,
    pub protocol: ProtocolParams,
}

// ---- raw (serde) layer ------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema: u32,
    committee: RawCommittee,
    #[serde(default)]
    synchrony: RawSynchrony,
    #[serde(default)]
    adversary: RawAdversary,
    #[serde(default)]
    workload: RawWorkload,
    #[serde(default)]
    protocol: RawProtocol,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCommittee {
    n: usize,
    f: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSynchrony {
    mode: Option<Mode>,
    d_ext: Option<Tick>,
    d_dcn: Option<Tick>,
    theta: Option<String>,
    offset_max: Option<Tick>,
    window: Option<Tick>,
    tail: Option<Tick>,
    horizon: Option<Tick>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAdversary {
    strategy: Option<String>,
    corrupted: Option<Vec<usize>>,
    magnitude: Option<i64>,
    adaptive_at: Option<Tick>,
    delay_kinds: Option<Vec<String>>,
    delay_senders: Option<Vec<usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWorkload {
    transactions: Option<u32>,
    users: Option<u32>,
    user_model: Option<UserModel>,
    withhold_from: Option<Vec<usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProtocol {
    epsilon: Option<String>,
    r_cap: Option<u32>,
}

// ---- construction and validation -------------------------------------------

impl Scenario {
    /// Defaults for a committee of `n` nodes: synchronous network, no
    /// adversary, one transaction. `f` defaults to the maximum tolerable
    /// floor((n-1)/3).
    pub fn baseline(n: usize) -> Scenario {
        let f = n.saturating_sub(1) / 3;
        Scenario {
            committee: Committee { n, f },
            synchrony: Synchrony {
                mode: Mode::Synchronous,
                d_ext: 10,
                d_dcn: 5,
                theta: frac(1),
                offset_max: 0,
                window: 0,
                tail: 10,
                horizon: 1_000_000,
            },
            adversary: AdversarySpec {
                strategy: Strategy::None,
                corrupted: (n - f..n).collect(),
                magnitude: 1_000_000,
                adaptive_at: None,
                delay_kinds: vec!["init_ts".to_string()],
                delay_senders: vec![0],
            },
            workload: Workload {
                transactions: 1,
                users: 1,
                user_model: UserModel::Honest,
                withhold_from: Vec::new(),
            },
            protocol: ProtocolParams { epsilon: parse_frac("49/100").unwrap(), r_cap: 64 },
        }
    }

    /// Parse and validate a `schema = 1` TOML document.
    pub fn from_toml(doc: &str) -> Result<Scenario, ConfigError> {
        let raw: RawScenario = toml::from_str(doc)?;
        if raw.schema != SCHEMA_VERSION {
            return Err(invalid(
                "schema",
                format!("unsupported schema version {} (expected {SCHEMA_VERSION})", raw.schema),
            ));
        }
        let mut sc = Scenario::baseline(raw.committee.n);
        sc.committee.n = raw.committee.n;
        if let Some(f) = raw.committee.f {
            sc.committee.f = f;
            // Regenerate the default corrupted set against the explicit f.
            sc.adversary.corrupted = (raw.committee.n.saturating_sub(f)..raw.committee.n).collect();
        }

        let syn = raw.synchrony;
        if let Some(m) = syn.mode {
            sc.synchrony.mode = m;
        }
        if let Some(v) = syn.d_ext {
            sc.synchrony.d_ext = v;
        }
        if let Some(v) = syn.d_dcn {
            sc.synchrony.d_dcn = v;
        }
        if let Some(ref s) = syn.theta {
            sc.synchrony.theta = parse_frac(s)
                .ok_or_else(|| invalid("synchrony.theta", format!("not a rational: {s:?}")))?;
        }
        if let Some(v) = syn.offset_max {
            sc.synchrony.offset_max = v;
        }
        if let Some(v) = syn.window {
            sc.synchrony.window = v;
        }
        if let Some(v) = syn.tail {
            sc.synchrony.tail = v;
        }
        if let Some(v) = syn.horizon {
            sc.synchrony.horizon = v;
        }

        let adv = raw.adversary;
        if let Some(ref s) = adv.strategy {
            sc.adversary.strategy = Strategy::from_name(s).ok_or_else(|| {
                invalid(
                    "adversary.strategy",
                    format!("unknown strategy {s:?}; valid: {}", Strategy::names().join(", ")),
                )
            })?;
        }
        if let Some(c) = adv.corrupted {
            sc.adversary.corrupted = c;
        }
        if let Some(m) = adv.magnitude {
            sc.adversary.magnitude = m;
        }
        sc.adversary.adaptive_at = adv.adaptive_at;
        if let Some(k) = adv.delay_kinds {
            sc.adversary.delay_kinds = k;
        }
        if let Some(s) = adv.delay_senders {
            sc.adversary.delay_senders = s;
        }

        let wl = raw.workload;
        if let Some(t) = wl.transactions {
            sc.workload.transactions = t;
        }
        if let Some(u) = wl.users {
            sc.workload.users = u;
        }
        if let Some(m) = wl.user_model {
            sc.workload.user_model = m;
        }
        if let Some(w) = wl.withhold_from {
            sc.workload.withhold_from = w;
        }

        let pr = raw.protocol;
        if let Some(ref e) = pr.epsilon {
            sc.protocol.epsilon = parse_frac(e)
                .ok_or_else(|| invalid("protocol.epsilon", format!("not a rational: {e:?}")))?;
        }
        if let Some(r) = pr.r_cap {
            sc.protocol.r_cap = r;
        }

        sc.validate()?;
        Ok(sc)
    }

    /// Check every constraint; call after mutating a scenario by hand.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let Committee { n, f } = self.committee;
        if n < 4 {
            return Err(invalid("committee.n", format!("committee too small: n = {n} < 4")));
        }
        if f == 0 || n <= 3 * f {
            return Err(invalid(
                "committee.f",
                format!("need 1 <= f and n > 3f, got n = {n}, f = {f}"),
            ));
        }

        let syn = &self.synchrony;
        if syn.d_ext < 1 {
            return Err(invalid("synchrony.d_ext", "must be >= 1"));
        }
        if syn.d_dcn < 1 {
            return Err(invalid("synchrony.d_dcn", "must be >= 1"));
        }
        if syn.theta < frac(1) {
            return Err(invalid("synchrony.theta", "clock rate bound must be >= 1"));
        }
        if syn.offset_max < 0 {
            return Err(invalid("synchrony.offset_max", "must be >= 0"));
        }
        if syn.tail < 1 {
            return Err(invalid("synchrony.tail", "must be >= 1"));
        }
        if syn.mode == Mode::SyncWindow && syn.window < 1 {
            return Err(invalid("synchrony.window", "sync_window mode needs window >= 1"));
        }
        if syn.window < 0 {
            return Err(invalid("synchrony.window", "must be >= 0"));
        }

        let adv = &self.adversary;
        let mut seen = vec![false; n];
        for &v in &adv.corrupted {
            if v >= n {
                return Err(invalid("adversary.corrupted", format!("node id {v} out of range")));
            }
            if seen[v] {
                return Err(invalid("adversary.corrupted", format!("node id {v} repeated")));
            }
            seen[v] = true;
        }
        if adv.corrupted.len() > f {
            return Err(invalid(
                "adversary.corrupted",
                format!("{} corruptions exceed the fault budget f = {f}", adv.corrupted.len()),
            ));
        }
        if adv.strategy != Strategy::None && adv.corrupted.is_empty() {
            return Err(invalid("adversary.corrupted", "strategy needs at least one corrupted node"));
        }
        if adv.strategy.needs_adversarial_scheduler() && syn.mode != Mode::AsyncAdversarial {
            return Err(invalid(
                "adversary.strategy",
                format!(
                    "{} engineers message delays and requires mode = \"async_adversarial\"",
                    adv.strategy.name()
                ),
            ));
        }
        if let Some(t) = adv.adaptive_at {
            if t < 0 {
                return Err(invalid("adversary.adaptive_at", "must be >= 0"));
            }
        }
        for k in &adv.delay_kinds {
            if !crate::protocol::Payload::KINDS.contains(&k.as_str()) && k != "user" {
                return Err(invalid(
                    "adversary.delay_kinds",
                    format!(
                        "unknown message kind {k:?}; valid: user, {}",
                        crate::protocol::Payload::KINDS.join(", ")
                    ),
                ));
            }
        }
        for &v in &adv.delay_senders {
            if v >= n {
                return Err(invalid("adversary.delay_senders", format!("node id {v} out of range")));
            }
        }

        let wl = &self.workload;
        if wl.transactions == 0 || wl.transactions > 64 {
            return Err(invalid("workload.transactions", "must be in 1..=64"));
        }
        if wl.users == 0 {
            return Err(invalid("workload.users", "must be >= 1"));
        }
        for &v in &wl.withhold_from {
            if v >= n {
                return Err(invalid("workload.withhold_from", format!("node id {v} out of range")));
            }
        }
        if wl.user_model == UserModel::Withholding && wl.withhold_from.is_empty() {
            return Err(invalid(
                "workload.withhold_from",
                "withholding user model needs at least one withheld node",
            ));
        }

        let pr = &self.protocol;
        if pr.epsilon <= frac(0) || pr.epsilon >= Ratio::new(1, 2) {
            return Err(invalid("protocol.epsilon", "must lie strictly inside (0, 1/2)"));
        }
        let rounds = self.aa_rounds();
        if rounds > pr.r_cap {
            return Err(invalid(
                "protocol.r_cap",
                format!("derived agreement round count {rounds} exceeds cap {}", pr.r_cap),
            ));
        }

        // The flush deadline (horizon/2) must leave room for the slowest
        // plausible pipeline: last dispatch, the init wait, then every
        // remaining stage taking a full d_dcn hop per step.
        let latest_dispatch = self.dispatch_tick(self.workload.transactions - 1);
        let stages = 3 * rounds as Tick + 40;
        let need = 2 * (latest_dispatch + self.wait() + stages * syn.d_dcn + syn.d_ext);
        if syn.horizon < need {
            return Err(invalid(
                "synchrony.horizon",
                format!("too small for this workload; need >= {need}, got {}", syn.horizon),
            ));
        }
        Ok(())
    }

    // ---- derived quantities --------------------------------------------------

    /// Local-clock ticks a node waits after the user message arrives before it
    /// is willing to pick a timestamp: ceil(theta * (d_ext + d_dcn)). A clock
    /// running at the fastest admissible rate still spans d_ext + d_dcn of
    /// global time.
    pub fn wait(&self) -> Tick {
        let s = &self.synchrony;
        ceil_to_tick(s.theta * frac(s.d_ext + s.d_dcn))
    }

    /// Bound on the spread of honest init timestamps for one instance, in
    /// local-clock ticks. Honest receipt readings differ by at most the
    /// delivery spread (d_ext, dilated by the fastest clock), twice the offset
    /// bound, one tick of floor rounding, and the rate drift two extremal
    /// clocks can accumulate by the flush horizon. Because every honest
    /// selection and every later agreement stage stays inside the honest input
    /// hull, this also bounds the spread of honest agreement inputs.
    pub fn aa_input_bound(&self) -> i64 {
        let s = &self.synchrony;
        let dilated = ceil_to_tick(s.theta * frac(s.d_ext));
        let drift = ceil_to_tick((s.theta - s.theta.recip()) * frac(s.horizon));
        dilated + 2 * s.offset_max + 1 + drift
    }

    /// Fixed number of approximate-agreement rounds every node runs.
    pub fn aa_rounds(&self) -> u32 {
        pi_aa::round_count(self.aa_input_bound(), self.protocol.epsilon)
    }

    /// Global tick at which transaction `index` is handed to the network.
    pub fn dispatch_tick(&self, index: u32) -> Tick {
        1 + index as Tick * (self.synchrony.d_ext + self.synchrony.d_dcn + 1)
    }

    /// Per-node protocol constants handed to the state machines.
    pub fn ta_config(&self) -> TaConfig {
        TaConfig {
            n: self.committee.n,
            f: self.committee.f,
            wait: self.wait(),
            aa_rounds: self.aa_rounds(),
        }
    }

    /// True if `v` is in the corrupted set (regardless of activation tick).
    pub fn is_corrupted(&self, v: NodeId) -> bool {
        self.adversary.corrupted.contains(&v)
    }

    /// Sorted honest node ids.
    pub fn honest_nodes(&self) -> Vec<NodeId> {
        (0..self.committee.n).filter(|v| !self.is_corrupted(*v)).collect()
    }
}

fn ceil_to_tick(v: Frac) -> Tick {
    Tick::try_from(-crate::value::floor_int(-v)).expect("derived duration fits a tick")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "schema = 1\n[committee]\nn = 4\n";

    #[test]
    fn minimal_document_gets_defaults() {
        let sc = Scenario::from_toml(MINIMAL).unwrap();
        assert_eq!(sc.committee.f, 1);
        assert_eq!(sc.synchrony.mode, Mode::Synchronous);
        assert_eq!(sc.adversary.corrupted, vec![3]);
        assert_eq!(sc.wait(), 15);
        // d_ext 10, perfect clocks: bound = 10 + 0 + 1 + 0 = 11.
        assert_eq!(sc.aa_input_bound(), 11);
        // 1 + ceil(log2(4 * 11 / (49/100))) = 1 + ceil(log2 89.79..) = 8.
        assert_eq!(sc.aa_rounds(), 8);
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let err = Scenario::from_toml("schema = 2\n[committee]\nn = 4\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { path: "schema", .. }));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let doc = "schema = 1\n[committee]\nn = 4\nbribe = true\n";
        assert!(matches!(Scenario::from_toml(doc), Err(ConfigError::Syntax(_))));
    }

    #[test]
    fn corruption_budget_enforced() {
        let doc = "schema = 1\n[committee]\nn = 4\n[adversary]\ncorrupted = [1, 2]\n";
        let err = Scenario::from_toml(doc).unwrap_err();
        match err {
            ConfigError::Invalid { path, msg } => {
                assert_eq!(path, "adversary.corrupted");
                assert!(msg.contains("fault budget"), "{msg}");
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn committee_bound_enforced() {
        for (n, f) in [(4, 2), (7, 3), (9, 3)] {
            let doc = format!("schema = 1\n[committee]\nn = {n}\nf = {f}\n");
            let err = Scenario::from_toml(&doc).unwrap_err();
            assert!(matches!(err, ConfigError::Invalid { path: "committee.f", .. }));
        }
    }

    #[test]
    fn epsilon_must_sit_below_one_half() {
        let doc = "schema = 1\n[committee]\nn = 4\n[protocol]\nepsilon = \"1/2\"\n";
        let err = Scenario::from_toml(doc).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { path: "protocol.epsilon", .. }));
    }

    #[test]
    fn delay_strategy_requires_adversarial_scheduler() {
        let doc = "schema = 1\n[committee]\nn = 4\n[adversary]\nstrategy = \"scenario_b\"\n";
        let err = Scenario::from_toml(doc).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { path: "adversary.strategy", .. }));
        let ok = "schema = 1\n[committee]\nn = 4\n[synchrony]\nmode = \"async_adversarial\"\n\
                  [adversary]\nstrategy = \"scenario_b\"\n";
        Scenario::from_toml(ok).unwrap();
    }

    #[test]
    fn skewed_clocks_widen_the_input_bound() {
        let doc = "schema = 1\n[committee]\nn = 4\n[synchrony]\ntheta = \"101/100\"\n\
                   offset_max = 3\nhorizon = 10000\n";
        let sc = Scenario::from_toml(doc).unwrap();
        // ceil(1.01 * 10) = 11, offsets add 6, rounding 1,
        // drift ceil((101/100 - 100/101) * 10000) = ceil(201 * 10000 / 10100) = 200.
        assert_eq!(sc.aa_input_bound(), 11 + 6 + 1 + 200);
        assert_eq!(sc.wait(), 16);
    }

    #[test]
    fn horizon_must_cover_the_workload() {
        let doc = "schema = 1\n[committee]\nn = 4\n[synchrony]\nhorizon = 100\n";
        let err = Scenario::from_toml(doc).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { path: "synchrony.horizon", .. }));
    }

    #[test]
    fn baseline_validates_for_reference_committees() {
        for n in [4, 7, 10] {
            Scenario::baseline(n).validate().unwrap();
        }
    }
}
