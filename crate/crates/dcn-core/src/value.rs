//! Exact rational values for the agreement stages.
//!
//! Approximate agreement repeatedly takes midpoints of integer tick values,
//! so every value it ever holds is a dyadic rational. Comparisons against the
//! convergence threshold `epsilon = 49/100` must be exact — an f64 would
//! round — so values are `Ratio<i128>` throughout.

use crate::Tick;
use num_rational::Ratio;

/// Exact rational value: protocol inputs are integer ticks, intermediate
/// values are midpoints of those.
pub type Frac = Ratio<i128>;

/// Lift a tick to an exact value.
pub fn frac(t: Tick) -> Frac {
    Ratio::from_integer(t as i128)
}

/// Midpoint of two values, exact.
pub fn midpoint(a: Frac, b: Frac) -> Frac {
    (a + b) / Ratio::from_integer(2)
}

/// Largest integer `<=` the value.
pub fn floor_int(v: Frac) -> i128 {
    v.floor().to_integer()
}

/// Smallest `k >= 0` with `x <= 2^k`, treating `x <= 1` as 0. This is
/// `ceil(log2(max(1, x)))` without any floating point.
pub fn ceil_log2(x: Frac) -> u32 {
    let one = Frac::from_integer(1);
    if x <= one {
        return 0;
    }
    let mut k = 0u32;
    let mut pow = one;
    let two = Frac::from_integer(2);
    while pow < x {
        pow *= two;
        k += 1;
        debug_assert!(k <= 140, "value out of supported range");
    }
    k
}

/// Parse a rational from the `"p/q"` or `"p"` forms used in scenario files.
pub fn parse_frac(s: &str) -> Option<Frac> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: i128 = p.trim().parse().ok()?;
            let q: i128 = q.trim().parse().ok()?;
            if q == 0 {
                return None;
            }
            Some(Ratio::new(p, q))
        }
        None => {
            let p: i128 = s.parse().ok()?;
            Some(Ratio::from_integer(p))
        }
    }
}

/// Render a rational in the `"p/q"` (or `"p"` when integral) form.
pub fn format_frac(v: &Frac) -> String {
    if v.is_integer() {
        format!("{}", v.to_integer())
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}
