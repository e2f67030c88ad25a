//! Stage 3: timestamp agreement — exact agreement on an integer tick.
//!
//! Approximate agreement leaves honest values within `epsilon < 1/2` of each
//! other but not equal; converting them into one integer without a leader
//! uses a parity trick:
//!
//! - round your value `tau` to the nearest integer `beta` (ties up), keep
//!   the other adjacent integer as the fallback `beta_alt`;
//! - run binary agreement on `beta`'s parity;
//! - output whichever of `beta`/`beta_alt` has the decided parity.
//!
//! Why this agrees: with all honest values within `epsilon < 1/2`, either
//! every honest node computes the same `beta` (then binary-agreement
//! validity forces the decision to that parity and everyone outputs `beta`),
//! or the values straddle a half-integer boundary, in which case every
//! honest value lies strictly inside one unit interval `(a, a + 1)` — so
//! every node holds the same candidate pair `{a, a + 1}` and either decision
//! bit selects the same element everywhere. Both candidates lie between the
//! surrounding honest integer inputs, so validity is preserved.
//!
//! [`TaState`] chains the three stages for one instance: receipt timestamps
//! ([`pi_init`](crate::protocol::pi_init)), approximate agreement
//! ([`pi_aa`](crate::protocol::pi_aa)), then parity rounding over binary
//! agreement ([`pi_aba`](crate::protocol::pi_aba)).

use crate::protocol::messages::{Outbound, Payload};
use crate::protocol::pi_aa::AaState;
use crate::protocol::pi_aba::{AbaState, CommonCoin};
use crate::protocol::pi_init::InitState;
use crate::value::{floor_int, frac, Frac};
use crate::{InstanceId, NodeId, Tick};

/// Integer candidates derived from an agreed-to-within-epsilon value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rounding {
    /// Nearest integer (ties round up).
    pub beta: Tick,
    /// The adjacent integer on the other side.
    pub beta_alt: Tick,
    /// `beta`'s parity: true iff odd. This is the binary-agreement input.
    pub parity_bit: bool,
}

pub fn choose_rounding(tau: Frac) -> Rounding {
    let alpha = floor_int(tau);
    let below = tau - Frac::from_integer(alpha);
    let above = Frac::from_integer(alpha + 1) - tau;
    let (beta, beta_alt) = if below < above { (alpha, alpha + 1) } else { (alpha + 1, alpha) };
    let beta = i64::try_from(beta).expect("tick out of range");
    let beta_alt = i64::try_from(beta_alt).expect("tick out of range");
    Rounding { beta, beta_alt, parity_bit: beta.rem_euclid(2) == 1 }
}

#[derive(Clone, Copy, Debug)]
pub struct TaConfig {
    pub n: usize,
    pub f: usize,
    /// Stage-1 wait timer in local ticks: ceil(theta * (d_ext + d_dcn)).
    pub wait: Tick,
    /// Fixed approximate-agreement round count, identical at every node.
    pub aa_rounds: u32,
}

/// One node's view of timestamp agreement for one instance.
#[derive(Clone, Debug)]
pub struct TaState {
    cfg: TaConfig,
    init: InitState,
    aa: AaState,
    aba: AbaState,
    aa_started: bool,
    rounding: Option<Rounding>,
    output: Option<Tick>,
}

impl TaState {
    pub fn new(inst: InstanceId, me: NodeId, cfg: TaConfig) -> Self {
        TaState {
            cfg,
            init: InitState::new(cfg.n, cfg.f),
            aa: AaState::new(inst, cfg.n, cfg.f, me, cfg.aa_rounds),
            aba: AbaState::new(inst, cfg.n, cfg.f),
            aa_started: false,
            rounding: None,
            output: None,
        }
    }

    /// The user's submission arrived at local time `now`. `ts` becomes this
    /// node's broadcast receipt timestamp unless an override is supplied
    /// (byzantine behaviors lie here; honest callers pass `now`).
    pub fn on_user_receipt(
        &mut self,
        inst: InstanceId,
        ts: Tick,
        now: Tick,
        coin: &dyn CommonCoin,
    ) -> Vec<Outbound> {
        let mut out = Vec::new();
        if self.init.on_user_receipt(now, self.cfg.wait).is_some() {
            out.push(Outbound::all(Payload::InitTs { inst, ts }));
        }
        out.extend(self.advance(coin));
        out
    }

    /// Local due time of the stage-1 timer, once armed.
    pub fn on_timer(&mut self, now: Tick, coin: &dyn CommonCoin) -> Vec<Outbound> {
        self.init.on_timer(now);
        self.advance(coin)
    }

    /// Route a protocol message; `now` is the local delivery time.
    pub fn on_message(
        &mut self,
        from: NodeId,
        payload: &Payload,
        now: Tick,
        coin: &dyn CommonCoin,
    ) -> Vec<Outbound> {
        let mut out = match payload {
            Payload::InitTs { ts, .. } => {
                self.init.on_timestamp(from, *ts, now);
                Vec::new()
            }
            Payload::AaSend { round, origin, value, .. } => {
                self.aa.on_send(from, *round, *origin, *value)
            }
            Payload::AaEcho { round, origin, value, .. } => {
                self.aa.on_echo(from, *round, *origin, *value)
            }
            Payload::AaReady { round, origin, value, .. } => {
                self.aa.on_ready(from, *round, *origin, *value)
            }
            Payload::AaWitness { round, senders, .. } => self.aa.on_witness(from, *round, senders),
            Payload::AbaBval { phase, bit, .. } => self.aba.on_bval(from, *phase, *bit, coin),
            Payload::AbaAux { phase, bit, .. } => self.aba.on_aux(from, *phase, *bit, coin),
            Payload::AbaTerm { bit, .. } => self.aba.on_term(from, *bit),
            // Signature and share traffic is the pipeline's concern, not the
            // agreement machine's.
            Payload::SigPartial { .. } | Payload::ShareReveal { .. } => Vec::new(),
        };
        out.extend(self.advance(coin));
        out
    }

    /// Move completed stages forward; loops because buffered traffic can let
    /// a newly started stage finish immediately.
    fn advance(&mut self, coin: &dyn CommonCoin) -> Vec<Outbound> {
        let mut out = Vec::new();
        loop {
            let before = (self.aa_started, self.rounding.is_some(), self.output.is_some());
            if let (Some(tau_mu), false) = (self.init.output(), self.aa_started) {
                self.aa_started = true;
                out.extend(self.aa.start(frac(tau_mu)));
            }
            if let (Some(tau_aa), None) = (self.aa.output(), self.rounding.as_ref()) {
                let r = choose_rounding(tau_aa);
                self.rounding = Some(r);
                out.extend(self.aba.start(r.parity_bit, coin));
            }
            if let (Some(bit), Some(r), None) = (self.aba.decided(), self.rounding, self.output) {
                self.output = Some(if bit == r.parity_bit { r.beta } else { r.beta_alt });
            }
            let after = (self.aa_started, self.rounding.is_some(), self.output.is_some());
            if before == after {
                return out;
            }
        }
    }

    pub fn output(&self) -> Option<Tick> {
        self.output
    }

    pub fn tau_mu(&self) -> Option<Tick> {
        self.init.output()
    }

    pub fn tau_aa(&self) -> Option<Frac> {
        self.aa.output()
    }

    pub fn aa_rounds(&self) -> u32 {
        self.aa.rounds_total()
    }

    pub fn aba_decided(&self) -> Option<bool> {
        self.aba.decided()
    }

    pub fn aba_phases(&self) -> Option<u32> {
        self.aba.decided().map(|_| self.aba.decided_phase())
    }

    pub fn aba_halted(&self) -> bool {
        self.aba.halted()
    }
}
