//! Stage 1: initial timestamp estimation.
//!
//! On receiving the user's submission a node records its local clock reading
//! `ts`, broadcasts it to everyone (itself included), and waits out a timer
//! sized to cover honest message spread. Once the timer has expired *and*
//! timestamps from at least `n - f` distinct senders have arrived, the node
//! sorts what it has and picks the entry at a median-biased index. The first
//! value from each sender wins; later duplicates or equivocations are
//! ignored. The selection is latched — it never changes once made.
//!
//! Index choice: with `m` values collected, `k = m - (n - f)` of them beyond
//! the quorum minimum, the node takes the 1-indexed entry
//! `ceil((n - f) / 2) + floor(k / 2)`. Shifting by `floor(k / 2)` keeps the
//! pick centered as extra values arrive, which is what bounds how far
//! adversarial inputs can drag it from the honest median.

use std::collections::BTreeMap;

use crate::{NodeId, Tick};

/// 1-indexed selection position for `m` collected values.
pub fn selection_index(n: usize, f: usize, m: usize) -> usize {
    debug_assert!(m >= n - f && m <= n);
    let k = m - (n - f);
    (n - f).div_ceil(2) + k / 2
}

#[derive(Clone, Debug)]
pub struct InitState {
    n: usize,
    f: usize,
    /// Local-clock tick after which selection is allowed; set on receipt.
    due: Option<Tick>,
    received: BTreeMap<NodeId, Tick>,
    output: Option<Tick>,
}

impl InitState {
    pub fn new(n: usize, f: usize) -> Self {
        InitState { n, f, due: None, received: BTreeMap::new(), output: None }
    }

    /// Called when the user's submission reaches this node. `now` is the
    /// local receipt time (which is also the timestamp to broadcast) and
    /// `wait` the timer length in local ticks. Returns the timestamp to
    /// broadcast, or `None` if a duplicate submission already armed us.
    pub fn on_user_receipt(&mut self, now: Tick, wait: Tick) -> Option<Tick> {
        if self.due.is_some() {
            return None;
        }
        self.due = Some(now + wait);
        Some(now)
    }

    /// Record a timestamp from `from` (first value wins) and re-evaluate.
    pub fn on_timestamp(&mut self, from: NodeId, ts: Tick, now: Tick) {
        self.received.entry(from).or_insert(ts);
        self.try_select(now);
    }

    /// Timer expiry hook; also re-evaluates.
    pub fn on_timer(&mut self, now: Tick) {
        self.try_select(now);
    }

    pub fn output(&self) -> Option<Tick> {
        self.output
    }

    pub fn received_count(&self) -> usize {
        self.received.len()
    }

    fn try_select(&mut self, now: Tick) {
        if self.output.is_some() {
            return;
        }
        let Some(due) = self.due else { return };
        if now < due || self.received.len() < self.n - self.f {
            return;
        }
        let mut values: Vec<Tick> = self.received.values().copied().collect();
        values.sort_unstable();
        let idx = selection_index(self.n, self.f, values.len());
        self.output = Some(values[idx - 1]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_index_positions() {
        // n=4, f=1: quorum 3 -> index 2; full view 4 -> still 2.
        assert_eq!(selection_index(4, 1, 3), 2);
        assert_eq!(selection_index(4, 1, 4), 2);
        // n=7, f=2: quorum 5 -> index 3; 6 values -> 3; all 7 -> 4.
        assert_eq!(selection_index(7, 2, 5), 3);
        assert_eq!(selection_index(7, 2, 6), 3);
        assert_eq!(selection_index(7, 2, 7), 4);
        // n=10, f=3: quorum 7 -> index 4; 10 values -> 5.
        assert_eq!(selection_index(10, 3, 7), 4);
        assert_eq!(selection_index(10, 3, 10), 5);
    }

    #[test]
    fn selects_median_of_quorum_view() {
        let mut st = InitState::new(4, 1);
        assert_eq!(st.on_user_receipt(10, 5), Some(10));
        st.on_timestamp(0, 10, 10);
        st.on_timestamp(1, 20, 11);
        st.on_timestamp(2, 30, 12);
        // Quorum met but timer (due 15) not yet expired.
        assert_eq!(st.output(), None);
        st.on_timer(15);
        assert_eq!(st.output(), Some(20));
    }

    #[test]
    fn waits_for_quorum_after_timer() {
        let mut st = InitState::new(4, 1);
        st.on_user_receipt(0, 5);
        st.on_timestamp(0, 0, 0);
        st.on_timestamp(1, 7, 3);
        st.on_timer(5);
        assert_eq!(st.output(), None);
        // Third sender arrives after expiry; selection fires on receive.
        st.on_timestamp(3, 4, 9);
        assert_eq!(st.output(), Some(4));
    }

    #[test]
    fn low_outlier_shifts_pick_by_one_not_more() {
        // Full view (all arrive before the timer) with one adversarially low
        // value: k=1, index stays 2, so the pick lands one rank below the
        // honest median at worst.
        let mut st = InitState::new(4, 1);
        st.on_user_receipt(0, 5);
        st.on_timestamp(0, 10, 1);
        st.on_timestamp(1, 20, 2);
        st.on_timestamp(2, 30, 3);
        st.on_timestamp(3, -1_000_000, 4);
        assert_eq!(st.output(), None);
        st.on_timer(5);
        assert_eq!(st.output(), Some(10));
    }

    #[test]
    fn first_value_wins_over_equivocation() {
        let mut st = InitState::new(4, 1);
        st.on_user_receipt(0, 0);
        st.on_timestamp(3, 50, 0);
        st.on_timestamp(3, -50, 0); // ignored
        st.on_timestamp(0, 10, 0);
        st.on_timestamp(1, 20, 0);
        st.on_timer(0);
        assert_eq!(st.output(), Some(20));
    }

    #[test]
    fn output_is_latched() {
        let mut st = InitState::new(4, 1);
        st.on_user_receipt(0, 0);
        for (v, ts) in [(0, 10), (1, 20), (2, 30)] {
            st.on_timestamp(v, ts, 1);
        }
        assert_eq!(st.output(), Some(20));
        st.on_timestamp(3, -99, 2);
        assert_eq!(st.output(), Some(20));
    }

    #[test]
    fn larger_committee_with_extremes() {
        // n=7, f=2, all 7 collected before the timer expires, two byzantine
        // lows: sorted view [-9,-9,1,2,3,4,5], index 4 -> 2 (one rank below
        // the honest median 3).
        let mut st = InitState::new(7, 2);
        st.on_user_receipt(0, 10);
        let inputs = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, -9), (6, -9)];
        for (v, ts) in inputs {
            st.on_timestamp(v, ts, 1);
        }
        assert_eq!(st.output(), None);
        st.on_timer(10);
        assert_eq!(st.output(), Some(2));
    }
}
