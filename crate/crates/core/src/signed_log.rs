//! Signed reals stored as `sign · exp(log_magnitude)`.
//!
//! Products such as `s!`, Stirling numbers and `ε^{-j}` overflow `f64` long
//! before the quantities built from them do. Keeping the logarithm of the
//! magnitude lets those intermediate products be formed exactly in exponent
//! range and collapsed back to a float at the end.

use core::cmp::Ordering;
use core::fmt;
use core::iter::{Product, Sum};
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign as BigSign};
use num_traits::ToPrimitive;

use crate::math::{exp, ln, ln1p};

const LN_2: f64 = core::f64::consts::LN_2;

#[derive(Clone, Copy, PartialEq)]
pub struct SignedLogReal {
    sign: i8,
    log_magnitude: f64,
}

impl SignedLogReal {
    pub const ZERO: Self = Self {
        sign: 0,
        log_magnitude: f64::NEG_INFINITY,
    };
    pub const ONE: Self = Self {
        sign: 1,
        log_magnitude: 0.0,
    };

    /// Builds a value from its parts. A zero sign forces the zero value.
    pub fn from_parts(sign: i8, log_magnitude: f64) -> Self {
        match sign.cmp(&0) {
            Ordering::Equal => Self::ZERO,
            Ordering::Greater => Self {
                sign: 1,
                log_magnitude,
            },
            Ordering::Less => Self {
                sign: -1,
                log_magnitude,
            },
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else if x > 0.0 {
            Self {
                sign: 1,
                log_magnitude: ln(x),
            }
        } else {
            Self {
                sign: -1,
                log_magnitude: ln(-x),
            }
        }
    }

    pub fn from_biguint(n: &BigUint) -> Self {
        let bits = n.bits();
        if bits == 0 {
            return Self::ZERO;
        }
        let log_magnitude = if bits <= 1000 {
            ln(n.to_f64().unwrap_or(f64::INFINITY))
        } else {
            let shift = bits - 64;
            let head = (n >> shift).to_f64().unwrap_or(f64::INFINITY);
            ln(head) + shift as f64 * LN_2
        };
        Self {
            sign: 1,
            log_magnitude,
        }
    }

    pub fn from_bigint(n: &BigInt) -> Self {
        let mag = Self::from_biguint(n.magnitude());
        match n.sign() {
            BigSign::Minus => -mag,
            _ => mag,
        }
    }

    /// `e^x` without leaving log space.
    pub fn exp(x: f64) -> Self {
        Self {
            sign: 1,
            log_magnitude: x,
        }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    /// Natural log of `|x|`; `-inf` for zero.
    pub fn log_magnitude(&self) -> f64 {
        self.log_magnitude
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn abs(self) -> Self {
        if self.sign == 0 {
            self
        } else {
            Self { sign: 1, ..self }
        }
    }

    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::ONE;
        }
        if self.sign == 0 {
            return if n > 0 {
                Self::ZERO
            } else {
                Self::from_parts(1, f64::INFINITY)
            };
        }
        let sign = if self.sign < 0 && n % 2 != 0 { -1 } else { 1 };
        Self {
            sign,
            log_magnitude: self.log_magnitude * n as f64,
        }
    }

    pub fn recip(self) -> Self {
        self.powi(-1)
    }

    pub fn to_f64(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => s as f64 * exp(self.log_magnitude),
        }
    }
}

impl Default for SignedLogReal {
    fn default() -> Self {
        Self::ZERO
    }
}

impl fmt::Debug for SignedLogReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "0"),
            s => write!(f, "{}exp({})", if s < 0 { "-" } else { "" }, self.log_magnitude),
        }
    }
}

impl From<f64> for SignedLogReal {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl From<&BigUint> for SignedLogReal {
    fn from(n: &BigUint) -> Self {
        Self::from_biguint(n)
    }
}

impl Neg for SignedLogReal {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            sign: -self.sign,
            ..self
        }
    }
}

impl Mul for SignedLogReal {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.sign == 0 || rhs.sign == 0 {
            return Self::ZERO;
        }
        Self {
            sign: self.sign * rhs.sign,
            log_magnitude: self.log_magnitude + rhs.log_magnitude,
        }
    }
}

impl Div for SignedLogReal {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl Add for SignedLogReal {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        let (big, small) = if self.log_magnitude >= rhs.log_magnitude {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let ratio = exp(small.log_magnitude - big.log_magnitude);
        if big.sign == small.sign {
            Self {
                sign: big.sign,
                log_magnitude: big.log_magnitude + ln1p(ratio),
            }
        } else if ratio == 1.0 {
            Self::ZERO
        } else {
            Self {
                sign: big.sign,
                log_magnitude: big.log_magnitude + ln1p(-ratio),
            }
        }
    }
}

impl Sub for SignedLogReal {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Sum for SignedLogReal {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, Add::add)
    }
}

impl Product for SignedLogReal {
    fn product<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ONE, Mul::mul)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_has_zero_sign() {
        assert_eq!(SignedLogReal::from_f64(0.0).sign(), 0);
        assert!(SignedLogReal::from_f64(-0.0).is_zero());
        let x = SignedLogReal::from_f64(3.5);
        assert!((x - x).is_zero());
    }

    #[test]
    fn big_integers_beyond_f64_range() {
        // 2^2000 overflows f64 but its log is exact.
        let n = BigUint::from(1u8) << 2000usize;
        let x = SignedLogReal::from_biguint(&n);
        assert!((x.log_magnitude() - 2000.0 * LN_2).abs() < 1e-9);
        let back = x / SignedLogReal::from_biguint(&(BigUint::from(1u8) << 1990usize));
        assert!((back.to_f64() - 1024.0).abs() < 1e-9);
    }

    #[test]
    fn mixed_sign_addition() {
        let a = SignedLogReal::from_f64(5.0);
        let b = SignedLogReal::from_f64(-7.5);
        assert!(((a + b).to_f64() + 2.5).abs() < 1e-14);
        assert_eq!((a + b).sign(), -1);
        assert!((SignedLogReal::from_f64(-2.0).powi(3).to_f64() + 8.0).abs() < 1e-13);
    }

    proptest! {
        #[test]
        fn round_trip(m in -300.0f64..300.0, neg in any::<bool>()) {
            let x = if neg { -libm::pow(10.0, m) } else { libm::pow(10.0, m) };
            let y = SignedLogReal::from_f64(x).to_f64();
            prop_assert!(((y - x) / x).abs() < 1e-12);
        }

        #[test]
        fn arithmetic_matches_floats(a in -1e6f64..1e6, b in -1e6f64..1e6) {
            let (sa, sb) = (SignedLogReal::from(a), SignedLogReal::from(b));
            let scale = a.abs().max(b.abs()).max(1e-300);
            prop_assert!(((sa + sb).to_f64() - (a + b)).abs() <= 1e-12 * scale);
            prop_assert!(((sa * sb).to_f64() - a * b).abs() <= 1e-12 * (a * b).abs());
        }
    }
}
