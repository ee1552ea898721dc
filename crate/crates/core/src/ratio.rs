//! Arbitrary-precision non-negative rationals in lowest terms.
//!
//! [`ExactRatio`] is the value type of ψ' and ψ''. It is kept in canonical
//! form (gcd(num, den) = 1, den ≥ 1) at all times, so equality is a
//! structural comparison — the property the collision search relies on.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::Natural;

/// Parse a non-negative integer written as plain ASCII digits.
///
/// Stricter than `BigUint::from_str`: no sign, no whitespace, no empty
/// string. This is the only integer syntax accepted anywhere in the
/// serialized formats.
pub fn parse_natural_str(s: &str) -> Result<Natural> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::parse(format!("invalid integer literal {s:?}")));
    }
    Natural::parse_bytes(s.as_bytes(), 10)
        .ok_or_else(|| Error::parse(format!("invalid integer literal {s:?}")))
}

/// gcd that exploits size imbalance: one Euclidean reduction step brings
/// a (huge, small) pair down to the small operand's size before the
/// general algorithm runs. The balanced big-big case falls through.
pub(crate) fn gcd_fast(a: &Natural, b: &Natural) -> Natural {
    const IMBALANCE_CUTOFF_BITS: u64 = 4096;
    if a.is_zero() || b.is_zero() {
        return a.gcd(b);
    }
    let (big, small) = if a.bits() >= b.bits() { (a, b) } else { (b, a) };
    if small.bits() <= IMBALANCE_CUTOFF_BITS && big.bits() > 2 * small.bits() {
        let r = big % small;
        r.gcd(small)
    } else {
        a.gcd(b)
    }
}

/// A non-negative rational number in lowest terms.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExactRatio {
    num: Natural,
    den: Natural,
}

impl ExactRatio {
    /// Build `num/den`, reducing eagerly. Fails on a zero denominator.
    pub fn new(num: Natural, den: Natural) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::domain("ratio denominator must be positive"));
        }
        Ok(Self::reduced(num, den))
    }

    pub fn from_u64(num: u64, den: u64) -> Result<Self> {
        Self::new(Natural::from(num), Natural::from(den))
    }

    pub fn from_u128(num: u128, den: u128) -> Result<Self> {
        Self::new(Natural::from(num), Natural::from(den))
    }

    pub fn integer(n: impl Into<Natural>) -> Self {
        Self {
            num: n.into(),
            den: Natural::one(),
        }
    }

    fn reduced(num: Natural, den: Natural) -> Self {
        debug_assert!(!den.is_zero());
        if num.is_zero() {
            return Self {
                num,
                den: Natural::one(),
            };
        }
        let g = gcd_fast(&num, &den);
        if g.is_one() {
            Self { num, den }
        } else {
            Self {
                num: num / &g,
                den: den / &g,
            }
        }
    }

    /// Internal constructor for values already known to be in lowest
    /// terms; debug builds double-check small inputs.
    pub(crate) fn from_reduced_parts(num: Natural, den: Natural) -> Self {
        debug_assert!(!den.is_zero());
        debug_assert!(
            num.bits().max(den.bits()) > 1024 || num.gcd(&den).is_one() || num.is_zero(),
            "from_reduced_parts got a reducible pair"
        );
        if num.is_zero() {
            return Self {
                num,
                den: Natural::one(),
            };
        }
        Self { num, den }
    }

    pub fn zero() -> Self {
        Self::integer(0u32)
    }

    pub fn one() -> Self {
        Self::integer(1u32)
    }

    pub fn numer(&self) -> &Natural {
        &self.num
    }

    pub fn denom(&self) -> &Natural {
        &self.den
    }

    pub fn into_parts(self) -> (Natural, Natural) {
        (self.num, self.den)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num == self.den
    }

    /// True iff the value lies in the half-open unit interval (0, 1].
    pub fn in_unit_interval(&self) -> bool {
        !self.is_zero() && self.num <= self.den
    }

    /// `self − other` when `self ≥ other`, else `None`.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        let left = &self.num * &other.den;
        let right = &other.num * &self.den;
        if left < right {
            return None;
        }
        Some(Self::reduced(left - right, &self.den * &other.den))
    }

    /// |self − other|, exact.
    pub fn abs_diff(&self, other: &Self) -> Self {
        match self.cmp(other) {
            Ordering::Less => other.checked_sub(self).unwrap(),
            _ => self.checked_sub(other).unwrap(),
        }
    }

    /// Reciprocal; fails on zero.
    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::domain("cannot invert zero"));
        }
        Ok(Self {
            num: self.den.clone(),
            den: self.num.clone(),
        })
    }

    /// Approximate value as f64 (diagnostics only; never used for
    /// comparisons that matter).
    pub fn to_f64_lossy(&self) -> f64 {
        // Scale into a range where both parts convert exactly enough.
        let nb = self.num.bits() as i64;
        let db = self.den.bits() as i64;
        let shift = (nb.max(db) - 500).max(0) as u64;
        let n = (&self.num >> shift).to_string().parse::<f64>().unwrap_or(f64::INFINITY);
        let d = (&self.den >> shift).to_string().parse::<f64>().unwrap_or(f64::INFINITY);
        n / d
    }
}

impl PartialOrd for ExactRatio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExactRatio {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.num * &other.den).cmp(&(&other.num * &self.den))
    }
}

impl Add for &ExactRatio {
    type Output = ExactRatio;
    fn add(self, rhs: &ExactRatio) -> ExactRatio {
        ExactRatio::reduced(
            &self.num * &rhs.den + &rhs.num * &self.den,
            &self.den * &rhs.den,
        )
    }
}

impl Mul for &ExactRatio {
    type Output = ExactRatio;
    fn mul(self, rhs: &ExactRatio) -> ExactRatio {
        // Cross-reduce and multiply. Both inputs are in lowest terms, so
        // after dividing out g1 = gcd(a, d) and g2 = gcd(c, b) the result
        // (a/g1)(c/g2) / ((b/g2)(d/g1)) is already in lowest terms: no
        // big-by-big gcd on the products is needed, which is what keeps
        // long product accumulations (thousands of factors, ten-thousand
        // digit numerators) linear per step.
        let g1 = gcd_fast(&self.num, &rhs.den);
        let g2 = gcd_fast(&rhs.num, &self.den);
        ExactRatio::from_reduced_parts(
            (&self.num / &g1) * (&rhs.num / &g2),
            (&self.den / &g2) * (&rhs.den / &g1),
        )
    }
}

impl fmt::Display for ExactRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl fmt::Debug for ExactRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for ExactRatio {
    type Err = Error;

    /// Accepts `"num/den"` or a bare integer `"num"`. Digits only —
    /// no sign, whitespace, or decimal point.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('/') {
            Some((n, d)) => ExactRatio::new(parse_natural_str(n)?, parse_natural_str(d)?),
            None => Ok(ExactRatio::integer(parse_natural_str(s)?)),
        }
    }
}

impl Serialize for ExactRatio {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ExactRatio {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}
