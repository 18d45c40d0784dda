//! Regularized incomplete beta function.

use alloc::format;

use crate::error::{Error, Result};
use crate::math::{abs, exp, lgamma, ln, ln1p, CompensatedSum};

const CF_MAX_ITER: usize = 500;
const CF_EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

fn is_small_integer(v: f64) -> bool {
    v == libm::trunc(v) && v <= 1e7
}

/// `I_x(a, b)`.
///
/// Integer `a`, `b` use the exact binomial tail
/// `I_x(a, b) = P[Bin(a + b - 1, x) >= a]`; other parameters fall back to
/// the Lentz continued fraction.
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("incomplete beta needs 0 <= x <= 1, got {x}")));
    }
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!(
            "incomplete beta needs a, b > 0, got a = {a}, b = {b}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    if is_small_integer(a) && is_small_integer(b) {
        Ok(binomial_tail(x, a as u64, b as u64))
    } else if x > (a + 1.0) / (a + b + 2.0) {
        Ok(1.0 - continued_fraction(1.0 - x, b, a))
    } else {
        Ok(continued_fraction(x, a, b))
    }
}

/// `P[Bin(m, x) >= a]` with `m = a + b - 1`, summing whichever tail is
/// lighter so the absolute error stays at rounding level.
fn binomial_tail(x: f64, a: u64, b: u64) -> f64 {
    let m = a + b - 1;
    let (lx, l1x) = (ln(x), ln1p(-x));
    let upper_is_light = a as f64 >= m as f64 * x;
    let range = if upper_is_light { a..=m } else { 0..=a - 1 };
    // ln C(m, k), accumulated from k = 0
    let mut lc = 0.0;
    let mut acc = CompensatedSum::default();
    for k in 0..=m {
        if range.contains(&k) {
            acc.add(exp(lc + k as f64 * lx + (m - k) as f64 * l1x));
        }
        if k == *range.end() {
            break;
        }
        lc += ln((m - k) as f64) - ln((k + 1) as f64);
    }
    let tail = acc.value().clamp(0.0, 1.0);
    if upper_is_light {
        tail
    } else {
        1.0 - tail
    }
}

fn continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    let ln_front = a * ln(x) + b * ln1p(-x) - (lgamma(a) + lgamma(b) - lgamma(a + b));
    let front = exp(ln_front) / a;

    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if abs(d) < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if abs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if abs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if abs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if abs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if abs(del - 1.0) < CF_EPS {
            break;
        }
    }
    front * h
}
