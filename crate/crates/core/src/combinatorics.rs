//! Exact combinatorial numbers and the terminating hypergeometric-type sums
//! built from them.
//!
//! Binomial coefficients and Stirling numbers are computed as big integers so
//! that alternating sums stay exact before any conversion to floating point.
//! Exact values are capped at [`MAX_EXACT_BITS`] bits.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::math::{lgamma, powi, CompensatedSum};
use crate::signed_log::SignedLogReal;

/// Largest exact integer result, in bits, before an overflow error.
pub const MAX_EXACT_BITS: u64 = 1 << 16;

/// Default size of a memoized Stirling triangle.
pub const DEFAULT_TABLE_SIZE: usize = 64;

const LN_2: f64 = core::f64::consts::LN_2;

fn check_bits(log_value: f64) -> Result<()> {
    if log_value / LN_2 > MAX_EXACT_BITS as f64 {
        Err(Error::Overflow(MAX_EXACT_BITS))
    } else {
        Ok(())
    }
}

/// `C(n, k)`, zero when `k` lies outside `[0, n]`.
pub fn binomial(n: u64, k: i64) -> Result<BigUint> {
    if k < 0 || k as u64 > n {
        return Ok(BigUint::zero());
    }
    let k = (k as u64).min(n - k as u64);
    check_bits(lgamma(n as f64 + 1.0) - lgamma(k as f64 + 1.0) - lgamma((n - k) as f64 + 1.0))?;
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    Ok(acc)
}

/// `C(n, k)` in floating point; exact while the result fits in 53 bits.
pub fn binomial_f64(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// `ln(n!)` summed exactly term by term for small `n`, via `lgamma` beyond.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 32 {
        (2..=n).map(|i| crate::math::ln(i as f64)).sum()
    } else {
        lgamma(n as f64 + 1.0)
    }
}

/// `s! / ((s - j)! s^j) = Π_{i<j} (1 - i/s)`; zero when `j > s`.
pub fn falling_ratio(s: u64, j: usize) -> f64 {
    if j as u64 > s {
        return 0.0;
    }
    let sf = s as f64;
    (0..j).map(|i| 1.0 - i as f64 / sf).product()
}

fn check_stirling(n: usize) -> Result<()> {
    check_bits(ln_factorial(n as u64))
}

/// Unsigned Stirling number of the first kind `c(n, j)`: permutations of `n`
/// elements with exactly `j` cycles.
pub fn stirling1_unsigned(n: usize, j: usize) -> Result<BigUint> {
    if j > n {
        return Ok(BigUint::zero());
    }
    check_stirling(n)?;
    let mut row = vec![BigUint::zero(); j + 1];
    row[0] = BigUint::one();
    for m in 1..=n {
        for k in (1..=j.min(m)).rev() {
            let carried = &row[k] * (m - 1);
            row[k] = carried + &row[k - 1];
        }
        row[0] = BigUint::zero();
    }
    Ok(row.swap_remove(j))
}

/// Stirling number of the second kind `S2(n, j)`: partitions of an
/// `n`-element set into `j` non-empty blocks.
pub fn stirling2(n: usize, j: usize) -> Result<BigUint> {
    if j > n {
        return Ok(BigUint::zero());
    }
    check_stirling(n)?;
    let mut row = vec![BigUint::zero(); j + 1];
    row[0] = BigUint::one();
    for m in 1..=n {
        for k in (1..=j.min(m)).rev() {
            let carried = &row[k] * k;
            row[k] = carried + &row[k - 1];
        }
        row[0] = BigUint::zero();
    }
    Ok(row.swap_remove(j))
}

/// Memoized Stirling triangles of both kinds up to `n_max`.
///
/// Built once and immutable afterwards; lookups beyond `n_max` fail with
/// [`Error::TableLimit`] unless the table is explicitly grown with
/// [`StirlingTables::extend_to`].
#[derive(Debug, Clone)]
pub struct StirlingTables {
    first: Vec<Vec<BigUint>>,
    second: Vec<Vec<BigUint>>,
}

impl Default for StirlingTables {
    fn default() -> Self {
        Self::new(DEFAULT_TABLE_SIZE).expect("default table fits the exact-integer policy")
    }
}

impl StirlingTables {
    pub fn new(n_max: usize) -> Result<Self> {
        check_stirling(n_max)?;
        let mut tables = Self {
            first: vec![vec![BigUint::one()]],
            second: vec![vec![BigUint::one()]],
        };
        tables.grow(n_max);
        Ok(tables)
    }

    pub fn n_max(&self) -> usize {
        self.first.len() - 1
    }

    /// Grows both triangles to `n_max` rows.
    pub fn extend_to(&mut self, n_max: usize) -> Result<()> {
        check_stirling(n_max)?;
        self.grow(n_max);
        Ok(())
    }

    fn grow(&mut self, n_max: usize) {
        for n in self.first.len()..=n_max {
            let prev1 = &self.first[n - 1];
            let prev2 = &self.second[n - 1];
            let mut row1 = vec![BigUint::zero(); n + 1];
            let mut row2 = vec![BigUint::zero(); n + 1];
            for j in 1..=n {
                let (a1, a2) = if j < n {
                    (&prev1[j] * (n - 1), &prev2[j] * j)
                } else {
                    (BigUint::zero(), BigUint::zero())
                };
                row1[j] = a1 + &prev1[j - 1];
                row2[j] = a2 + &prev2[j - 1];
            }
            self.first.push(row1);
            self.second.push(row2);
        }
    }

    fn lookup<'a>(&self, table: &'a [Vec<BigUint>], n: usize, j: usize) -> Result<Option<&'a BigUint>> {
        if n > self.n_max() {
            return Err(Error::TableLimit {
                n,
                n_max: self.n_max(),
            });
        }
        Ok(table[n].get(j))
    }

    /// `c(n, j)`.
    pub fn first(&self, n: usize, j: usize) -> Result<BigUint> {
        Ok(self.lookup(&self.first, n, j)?.cloned().unwrap_or_default())
    }

    /// `S2(n, j)`.
    pub fn second(&self, n: usize, j: usize) -> Result<BigUint> {
        Ok(self.lookup(&self.second, n, j)?.cloned().unwrap_or_default())
    }

    /// `c(n, j)` as a float (may round for large `n`).
    pub fn first_f64(&self, n: usize, j: usize) -> Result<f64> {
        Ok(self
            .lookup(&self.first, n, j)?
            .map_or(0.0, |v| v.to_f64().unwrap_or(f64::INFINITY)))
    }

    /// `S2(n, j)` as a float (may round for large `n`).
    pub fn second_f64(&self, n: usize, j: usize) -> Result<f64> {
        Ok(self
            .lookup(&self.second, n, j)?
            .map_or(0.0, |v| v.to_f64().unwrap_or(f64::INFINITY)))
    }

    /// `c(n, j)` in signed-log form.
    pub fn first_log(&self, n: usize, j: usize) -> Result<SignedLogReal> {
        Ok(self
            .lookup(&self.first, n, j)?
            .map_or(SignedLogReal::ZERO, SignedLogReal::from_biguint))
    }

    /// `S2(n, j)` in signed-log form.
    pub fn second_log(&self, n: usize, j: usize) -> Result<SignedLogReal> {
        Ok(self
            .lookup(&self.second, n, j)?
            .map_or(SignedLogReal::ZERO, SignedLogReal::from_biguint))
    }
}

/// Terminating Gaussian hypergeometric sum
/// `2F1(-j, -j'; 1; y) = Σ_{n=0}^{min(j,j')} C(j,n) C(j',n) y^n`.
pub fn hyp2f1_terminating(j: usize, jp: usize, y: f64) -> f64 {
    let mut acc = CompensatedSum::default();
    for n in 0..=j.min(jp) {
        acc.add(binomial_f64(j, n) * binomial_f64(jp, n) * powi(y, n as i32));
    }
    acc.value()
}

fn stirling_sum(
    j: usize,
    jp: usize,
    y: f64,
    coeff: impl Fn(usize, usize) -> Result<BigUint>,
) -> Result<SignedLogReal> {
    let ylog = SignedLogReal::from_f64(y);
    let mut pos = SignedLogReal::ZERO;
    let mut neg = SignedLogReal::ZERO;
    for n in 0..=j.min(jp) {
        let c = SignedLogReal::from_biguint(&(coeff(j, n)? * coeff(jp, n)?));
        let term = c * ylog.powi(n as i32);
        // positive and negative parts are accumulated separately so the only
        // cancellation happens once, at the end
        if term.sign() >= 0 {
            pos = pos + term;
        } else {
            neg = neg + term;
        }
    }
    Ok(pos + neg)
}

/// Stirling–Gaussian hypergeometric sum of the first kind,
/// `Σ_n c(j,n) c(j',n) y^n`, in signed-log form.
pub fn stirling_hyp1_log(j: usize, jp: usize, y: f64) -> Result<SignedLogReal> {
    stirling_sum(j, jp, y, stirling1_unsigned)
}

/// Stirling–Gaussian hypergeometric sum of the second kind,
/// `Σ_n S2(j,n) S2(j',n) y^n`, in signed-log form.
pub fn stirling_hyp2_log(j: usize, jp: usize, y: f64) -> Result<SignedLogReal> {
    stirling_sum(j, jp, y, stirling2)
}

/// `Σ_n c(j,n) c(j',n) y^n`.
pub fn stirling_hyp1(j: usize, jp: usize, y: f64) -> Result<f64> {
    stirling_hyp1_log(j, jp, y).map(SignedLogReal::to_f64)
}

/// `Σ_n S2(j,n) S2(j',n) y^n`.
pub fn stirling_hyp2(j: usize, jp: usize, y: f64) -> Result<f64> {
    stirling_hyp2_log(j, jp, y).map(SignedLogReal::to_f64)
}
