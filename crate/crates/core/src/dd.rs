//! Compensated products used for phase reduction.
//!
//! A phase `θ·v` with `θ` a double and `v` an integer near `10^14` has no
//! correct fractional digits when formed naively. Splitting `v` into two
//! doubles and each product into an exact `(hi, lo)` pair lets every piece be
//! reduced modulo one without error.

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

#[inline]
fn centered_frac(x: f64) -> f64 {
    x - x.round()
}

/// Reduces `t` into `[-1/2, 1/2]`.
#[inline]
pub fn reduce_mod1(t: f64) -> f64 {
    centered_frac(t)
}

/// Fractional part of `theta * v`, centred in `[-1/2, 1/2]`, treating the
/// double `theta` as exact.
pub fn frac_mul(theta: f64, v: i128) -> f64 {
    if theta == 0.0 || v == 0 {
        return 0.0;
    }
    let hi = v as f64;
    let lo = (v - hi as i128) as f64;
    let (p1, e1) = two_prod(theta, hi);
    let (p2, e2) = two_prod(theta, lo);
    let s = centered_frac(p1) + centered_frac(e1) + centered_frac(p2) + centered_frac(e2);
    centered_frac(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_dyadic_theta() {
        // 2^-20 * (2^60 + 3) = 2^40 + 3/2^20
        let v: i128 = (1i128 << 60) + 3;
        let f = frac_mul(2f64.powi(-20), v);
        assert_eq!(f, 3.0 / 1048576.0);
    }

    #[test]
    fn beats_naive_product_at_large_arguments() {
        // theta = 1/3 rounded; reference by exact rational arithmetic on the
        // double's bits: theta = m / 2^54.
        let theta = 1.0f64 / 3.0;
        let bits = theta.to_bits();
        let mant = (bits & ((1u64 << 52) - 1)) | (1u64 << 52);
        let exp = ((bits >> 52) & 0x7ff) as i32 - 1075; // theta = mant * 2^exp
        assert!(exp < 0);
        let den: i128 = 1i128 << (-exp);
        for v in [10i128.pow(14) + 7, 123_456_789_012_345, 99_999_999_999_989] {
            // v * mant is below 2^100 and fits in i128.
            let num = v * mant as i128;
            let r = num.rem_euclid(den);
            let mut expect = r as f64 / den as f64;
            if expect > 0.5 {
                expect -= 1.0;
            }
            let got = frac_mul(theta, v);
            assert!((got - expect).abs() < 1e-15, "v={v} got={got} expect={expect}");
        }
    }
}
