//! GF(2^8) arithmetic with the AES-standard reduction polynomial 0x11b.
//!
//! Addition is XOR; multiplication is shift-and-add with conditional
//! reduction. Inversion uses a^254 = a^-1 (Fermat), which is constant-cost
//! and keeps the module table-free.

/// Multiply in GF(2^8) modulo x^8 + x^4 + x^3 + x + 1.
pub(crate) fn gf_mul(a: u8, b: u8) -> u8 {
    let mut a = a as u16;
    let mut b = b as u16;
    let mut acc: u16 = 0;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        a <<= 1;
        if a & 0x100 != 0 {
            a ^= 0x11b;
        }
        b >>= 1;
    }
    acc as u8
}

/// Multiplicative inverse; panics on zero, which callers must exclude.
pub(crate) fn gf_inv(a: u8) -> u8 {
    assert!(a != 0, "zero has no inverse in GF(256)");
    // a^254 via square-and-multiply over the fixed exponent.
    let mut result = 1u8;
    let mut base = a;
    let mut exp = 254u16;
    while exp != 0 {
        if exp & 1 != 0 {
            result = gf_mul(result, base);
        }
        base = gf_mul(base, base);
        exp >>= 1;
    }
    result
}

/// Evaluate a polynomial (coefficients low-order first) at `x`, Horner form.
pub(crate) fn poly_eval(coeffs: &[u8], x: u8) -> u8 {
    let mut acc = 0u8;
    for &c in coeffs.iter().rev() {
        acc = gf_mul(acc, x) ^ c;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_matches_known_products() {
        // 0x57 * 0x83 = 0xc1 is the worked example from the AES spec.
        assert_eq!(gf_mul(0x57, 0x83), 0xc1);
        assert_eq!(gf_mul(0x00, 0x7f), 0x00);
        assert_eq!(gf_mul(0x01, 0x7f), 0x7f);
    }

    #[test]
    fn inverse_round_trips_all_nonzero_elements() {
        for a in 1u16..=255 {
            let a = a as u8;
            assert_eq!(gf_mul(a, gf_inv(a)), 1, "inverse failed for {a:#04x}");
        }
    }

    #[test]
    fn horner_matches_direct_evaluation() {
        // p(x) = 3 + 5x + 7x^2 at x = 2: 3 ^ (5*2) ^ (7*4).
        let direct = 3 ^ gf_mul(5, 2) ^ gf_mul(7, gf_mul(2, 2));
        assert_eq!(poly_eval(&[3, 5, 7], 2), direct);
        // Constant term comes back at x = 0.
        assert_eq!(poly_eval(&[0x42, 0x99, 0x01], 0), 0x42);
    }
}
