//! Reliable broadcast of one value from one origin (Bracha-style).
//!
//! Used by approximate agreement so that equivocating origins cannot show
//! different round values to different honest nodes. One `Rbc` instance
//! tracks one `(round, origin)` slot:
//!
//! - first SEND (or first ECHO we relay) triggers our ECHO;
//! - `n - f` ECHOes for the same value trigger READY;
//! - `f + 1` READYs amplify to our own READY even without the echo quorum;
//! - `2f + 1` READYs deliver, exactly once.
//!
//! With `n > 3f`, two honest nodes can never deliver different values for
//! the same slot, and if any honest node delivers then all eventually do.

use std::collections::{BTreeMap, BTreeSet};

use crate::NodeId;

/// Actions produced by feeding one message in. `echo`/`ready` are values we
/// must now broadcast; `delivered` is set at most once over the instance's
/// lifetime.
#[derive(Clone, Debug, PartialEq)]
pub struct RbcStep<V> {
    pub echo: Option<V>,
    pub ready: Option<V>,
    pub delivered: Option<V>,
}

impl<V> Default for RbcStep<V> {
    fn default() -> Self {
        RbcStep { echo: None, ready: None, delivered: None }
    }
}

impl<V> RbcStep<V> {
    pub fn is_empty(&self) -> bool {
        self.echo.is_none() && self.ready.is_none() && self.delivered.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct Rbc<V> {
    n: usize,
    f: usize,
    sent_echo: bool,
    sent_ready: bool,
    delivered: bool,
    echoes: BTreeMap<V, BTreeSet<NodeId>>,
    readies: BTreeMap<V, BTreeSet<NodeId>>,
}

impl<V: Ord + Clone> Rbc<V> {
    pub fn new(n: usize, f: usize) -> Self {
        Rbc {
            n,
            f,
            sent_echo: false,
            sent_ready: false,
            delivered: false,
            echoes: BTreeMap::new(),
            readies: BTreeMap::new(),
        }
    }

    pub fn has_delivered(&self) -> bool {
        self.delivered
    }

    /// The origin's SEND arrived.
    pub fn on_send(&mut self, value: V) -> RbcStep<V> {
        let mut step = RbcStep::default();
        if !self.sent_echo {
            self.sent_echo = true;
            step.echo = Some(value);
        }
        step
    }

    /// An ECHO for `value` arrived from `from`.
    pub fn on_echo(&mut self, from: NodeId, value: V) -> RbcStep<V> {
        let mut step = RbcStep::default();
        let backers = self.echoes.entry(value.clone()).or_default();
        backers.insert(from);
        if backers.len() >= self.n - self.f && !self.sent_ready {
            self.sent_ready = true;
            step.ready = Some(value);
        }
        step
    }

    /// A READY for `value` arrived from `from`.
    pub fn on_ready(&mut self, from: NodeId, value: V) -> RbcStep<V> {
        let mut step = RbcStep::default();
        let backers = self.readies.entry(value.clone()).or_default();
        backers.insert(from);
        let count = self.readies[&value].len();
        if count >= self.f + 1 && !self.sent_ready {
            self.sent_ready = true;
            step.ready = Some(value.clone());
        }
        if count >= 2 * self.f + 1 && !self.delivered {
            self.delivered = true;
            step.delivered = Some(value);
        }
        step
    }
}
