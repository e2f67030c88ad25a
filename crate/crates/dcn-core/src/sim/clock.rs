//! Per-node local clocks over the global simulation tick.
//!
//! A clock maps global tick `g` to a local reading `floor(g * num / den) +
//! offset`. Rates are rational so readings stay exact and reproducible; a
//! rate of 1/1 with zero offset is a perfect clock. Rates are confined to
//! `[1/theta, theta]` by the scenario builder — the protocol's wait timer is
//! scaled by `theta` to cover the slowest admissible clock.

use crate::Tick;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockModel {
    pub rate_num: i64,
    pub rate_den: i64,
    pub offset: i64,
}

impl ClockModel {
    pub fn perfect() -> Self {
        ClockModel { rate_num: 1, rate_den: 1, offset: 0 }
    }

    pub fn is_perfect(&self) -> bool {
        self.rate_num == self.rate_den && self.offset == 0
    }

    /// Local reading at global tick `g`.
    pub fn local(&self, g: u64) -> Tick {
        debug_assert!(self.rate_num > 0 && self.rate_den > 0);
        let g = g as i128;
        let scaled = (g * self.rate_num as i128).div_euclid(self.rate_den as i128);
        Tick::try_from(scaled).expect("local clock overflow") + self.offset
    }

    /// Smallest global tick `g >= from` whose local reading is `>= target`.
    /// Used to schedule a timer armed for a local due time.
    pub fn global_at_or_after(&self, target: Tick, from: u64) -> u64 {
        debug_assert!(self.rate_num > 0 && self.rate_den > 0);
        let need = (target - self.offset) as i128;
        // local(g) >= target  <=>  floor(g*num/den) >= need  <=>  g*num >= need*den
        let g = if need <= 0 {
            0
        } else {
            let num = self.rate_num as u128;
            let den = self.rate_den as u128;
            u64::try_from((need as u128 * den).div_ceil(num)).expect("timer beyond horizon")
        };
        let g = g.max(from);
        debug_assert!(self.local(g) >= target);
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_clock_is_identity() {
        let c = ClockModel::perfect();
        for g in [0u64, 1, 17, 1_000_000] {
            assert_eq!(c.local(g), g as Tick);
        }
        assert_eq!(c.global_at_or_after(25, 0), 25);
        assert_eq!(c.global_at_or_after(25, 40), 40);
    }

    #[test]
    fn skewed_clock_rounds_down_and_inverts_consistently() {
        // 3/2 rate, offset -5.
        let c = ClockModel { rate_num: 3, rate_den: 2, offset: -5 };
        assert_eq!(c.local(0), -5);
        assert_eq!(c.local(3), -1); // floor(4.5) - 5
        // The inverse always lands at or just past the target.
        for target in -5..40 {
            let g = c.global_at_or_after(target, 0);
            assert!(c.local(g) >= target);
            if g > 0 {
                assert!(c.local(g - 1) < target, "g not minimal for {target}");
            }
        }
    }

    #[test]
    fn slow_clock_timer_lands_later_in_global_time() {
        // 2/3 rate: local time runs slow, so reaching local 10 takes 15
        // global ticks.
        let c = ClockModel { rate_num: 2, rate_den: 3, offset: 0 };
        assert_eq!(c.global_at_or_after(10, 0), 15);
    }
}
