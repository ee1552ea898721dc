//! Positive integers in factored form.
//!
//! [`FactoredNatural`] is the canonical group-order representation: the
//! density witnesses have orders like `∏ p_i^m` over hundreds of primes,
//! which must never be expanded into digits unintentionally.

use std::fmt;

use num_traits::One;

use crate::error::{Error, Result};
use crate::primes::{is_prime_u64, mul_mod, SpfSieve};
use crate::Natural;

/// A positive integer as a sorted list of (prime, exponent) pairs.
/// The empty list represents 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FactoredNatural {
    factors: Vec<(u64, u32)>,
}

impl FactoredNatural {
    /// Validates primality, positive exponents, and strict ordering.
    pub fn new(factors: Vec<(u64, u32)>) -> Result<Self> {
        let mut last = 1u64;
        for &(p, e) in &factors {
            if p <= last {
                return Err(Error::domain(format!(
                    "factor list must be strictly increasing by prime (saw {p} after {last})"
                )));
            }
            if !is_prime_u64(p) {
                return Err(Error::domain(format!("{p} is not prime")));
            }
            if e == 0 {
                return Err(Error::domain(format!("exponent of {p} must be positive")));
            }
            last = p;
        }
        Ok(Self { factors })
    }

    pub fn one() -> Self {
        Self { factors: Vec::new() }
    }

    pub fn of_prime_power(p: u64, e: u32) -> Result<Self> {
        Self::new(vec![(p, e)])
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    /// Upper bound on the bit length of the expanded value.
    pub fn bit_len_bound(&self) -> u64 {
        self.factors
            .iter()
            .map(|&(p, e)| e as u64 * (64 - p.leading_zeros() as u64))
            .sum()
    }

    /// Expand to an arbitrary-precision integer. Unbounded; prefer
    /// [`Self::value_if_below`] when the size is caller-controlled.
    pub fn value(&self) -> Natural {
        let mut acc = Natural::one();
        for &(p, e) in &self.factors {
            acc *= Natural::from(p).pow(e);
        }
        acc
    }

    /// Expand only if the result is guaranteed below `max_bits` bits.
    pub fn value_if_below(&self, max_bits: u64) -> Option<Natural> {
        (self.bit_len_bound() <= max_bits).then(|| self.value())
    }

    pub fn to_u64(&self) -> Option<u64> {
        let mut acc = 1u64;
        for &(p, e) in &self.factors {
            for _ in 0..e {
                acc = acc.checked_mul(p)?;
            }
        }
        Some(acc)
    }

    pub fn is_square_free(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }
}

impl fmt::Display for FactoredNatural {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        for (i, &(p, e)) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, " * ")?;
            }
            if e == 1 {
                write!(f, "{p}")?;
            } else {
                write!(f, "{p}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Factor a 64-bit integer.
///
/// Uses the sieve table when `n` is within its range, otherwise trial
/// division by small primes followed by Miller–Rabin + Pollard–Brent on
/// the remaining cofactor. Fails only on `n = 0`.
pub fn factorize_u64(n: u64, sieve: Option<&SpfSieve>) -> Result<FactoredNatural> {
    if n == 0 {
        return Err(Error::domain("cannot factor 0"));
    }
    if n == 1 {
        return Ok(FactoredNatural::one());
    }
    if let Some(s) = sieve {
        if n <= s.limit() {
            return Ok(FactoredNatural { factors: s.factor(n) });
        }
    }
    let mut factors: Vec<(u64, u32)> = Vec::new();
    let mut m = n;
    for d in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
        if d * d > m {
            break;
        }
        let mut e = 0;
        while m.is_multiple_of(d) {
            m /= d;
            e += 1;
        }
        if e > 0 {
            factors.push((d, e));
        }
    }
    if m > 1 {
        if m < 47 * 47 || is_prime_u64(m) {
            factors.push((m, 1));
        } else {
            let mut rest = Vec::new();
            split_composite(m, &mut rest);
            rest.sort_unstable();
            let mut it = rest.into_iter().peekable();
            while let Some(p) = it.next() {
                let mut e = 1;
                while it.peek() == Some(&p) {
                    it.next();
                    e += 1;
                }
                factors.push((p, e));
            }
        }
    }
    factors.sort_unstable_by_key(|&(p, _)| p);
    Ok(FactoredNatural { factors })
}

/// Factor an arbitrary-precision integer.
///
/// The artifact only ever factors numbers that fit in 64 bits (sieve
/// bounds, CLI inputs); larger inputs are a resource error rather than a
/// silent slow path.
pub fn factorize(n: &Natural, sieve: Option<&SpfSieve>) -> Result<FactoredNatural> {
    let small: u64 = n.try_into().map_err(|_| {
        Error::resource(format!(
            "factorization is supported for 64-bit inputs only ({} has {} bits)",
            n,
            n.bits()
        ))
    })?;
    factorize_u64(small, sieve)
}

/// Recursively split a composite with no prime factor ≤ 47.
fn split_composite(n: u64, out: &mut Vec<u64>) {
    if is_prime_u64(n) {
        out.push(n);
        return;
    }
    let d = pollard_brent(n);
    split_composite(d, out);
    split_composite(n / d, out);
}

/// Pollard's rho with Brent's cycle detection; returns a nontrivial
/// divisor of the odd composite `n`.
fn pollard_brent(n: u64) -> u64 {
    debug_assert!(n > 1 && !is_prime_u64(n) && !n.is_multiple_of(2));
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let mut y = 2u64;
        let mut d = 1u64;
        let mut q = 1u64;
        let m = 128u64;
        let mut r = 1u64;
        'outer: while d == 1 {
            let x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0u64;
            while k < r && d == 1 {
                let ys = y;
                for _ in 0..m.min(r - k) {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                d = gcd_u64(q, n);
                if d == n {
                    // Backtrack one step at a time.
                    let mut yb = ys;
                    loop {
                        yb = f(yb);
                        d = gcd_u64(x.abs_diff(yb), n);
                        if d > 1 {
                            break 'outer;
                        }
                    }
                }
                k += m;
            }
            r *= 2;
        }
        if d != n && d != 1 {
            return d;
        }
        c += 1;
    }
}

pub(crate) fn gcd_u64(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub(crate) fn gcd_u128(a: u128, b: u128) -> u128 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}
