//! Order spectra of finite groups.
//!
//! A spectrum maps each element order to the number of elements of that
//! order. It is the universal input to ψ: the sum of element orders only
//! depends on this multiset.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::factored::FactoredNatural;
use crate::Natural;

/// Largest number of distinct orders an expanded spectrum may have.
/// The count is `∏_p (λ₁(p) + 1)` for an abelian group, which explodes
/// for witness-scale groups; those are evaluated by formula instead.
pub const MAX_SPECTRUM_ENTRIES: u64 = 1 << 20;

/// Map from element order to element count, with a unique identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderSpectrum {
    entries: BTreeMap<Natural, Natural>,
}

impl OrderSpectrum {
    /// Structural validation only: the identity entry is present and
    /// unique, all orders and counts are positive. Consistency with a
    /// group order is checked by [`Self::validate_for_order`].
    pub fn new(entries: BTreeMap<Natural, Natural>) -> Result<Self> {
        if entries.get(&Natural::one()) != Some(&Natural::one()) {
            return Err(Error::domain(
                "spectrum must contain exactly one element of order 1",
            ));
        }
        for (order, count) in &entries {
            if order.is_zero() {
                return Err(Error::domain("element orders must be positive"));
            }
            if count.is_zero() {
                return Err(Error::domain(format!(
                    "count for order {order} must be positive"
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn from_counts(pairs: &[(u64, u64)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for &(order, count) in pairs {
            if map.insert(Natural::from(order), Natural::from(count)).is_some() {
                return Err(Error::domain(format!("duplicate order {order}")));
            }
        }
        Self::new(map)
    }

    /// Lagrange-style consistency with a claimed group order: counts sum
    /// to `order` and every element order divides it (the exponent, being
    /// the lcm of element orders, then divides it too).
    pub fn validate_for_order(&self, order: &Natural) -> Result<()> {
        let total = self.total();
        if &total != order {
            return Err(Error::domain(format!(
                "spectrum counts sum to {total}, group order is {order}"
            )));
        }
        for o in self.entries.keys() {
            if !order.is_multiple_of(o) {
                return Err(Error::domain(format!(
                    "element order {o} does not divide group order {order}"
                )));
            }
        }
        Ok(())
    }

    /// Number of group elements (sum of counts).
    pub fn total(&self) -> Natural {
        self.entries.values().sum()
    }

    /// Σ order·count — the sum of element orders.
    pub fn order_weighted_sum(&self) -> Natural {
        self.entries.iter().map(|(o, c)| o * c).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Natural, &Natural)> {
        self.entries.iter()
    }

    pub fn count_of(&self, order: &Natural) -> Natural {
        self.entries.get(order).cloned().unwrap_or_else(Natural::zero)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Validate an abelian primary decomposition: primes strictly increasing
/// and prime, partitions non-increasing with positive parts.
pub fn validate_components(components: &[(u64, Vec<u32>)]) -> Result<()> {
    let mut last = 1u64;
    for (p, partition) in components {
        if *p <= last {
            return Err(Error::domain(format!(
                "component primes must be strictly increasing (saw {p} after {last})"
            )));
        }
        if !crate::primes::is_prime_u64(*p) {
            return Err(Error::domain(format!("{p} is not prime")));
        }
        if partition.is_empty() {
            return Err(Error::domain(format!("empty partition for prime {p}")));
        }
        let mut prev = u32::MAX;
        for &lambda in partition {
            if lambda == 0 {
                return Err(Error::domain(format!(
                    "partition parts for prime {p} must be positive"
                )));
            }
            if lambda > prev {
                return Err(Error::domain(format!(
                    "partition for prime {p} must be non-increasing"
                )));
            }
            prev = lambda;
        }
        last = *p;
    }
    Ok(())
}

/// Order spectrum of the abelian group `⨉_p ⨉_i C_{p^{λ_i}}`.
///
/// In the p-component of type λ, the number of solutions of `x^{p^k} = 1`
/// is `p^{Σ_i min(λ_i, k)}`; elements of order exactly `p^k` number
/// `N(k) − N(k−1)`. Components at distinct primes combine multiplicatively
/// (coprime orders, lcm = product).
pub fn abelian_spectrum(components: &[(u64, Vec<u32>)]) -> Result<OrderSpectrum> {
    validate_components(components)?;

    let mut expanded: u64 = 1;
    for (_, partition) in components {
        let width = partition[0] as u64 + 1;
        expanded = expanded.saturating_mul(width);
        if expanded > MAX_SPECTRUM_ENTRIES {
            return Err(Error::resource(format!(
                "spectrum would have more than {MAX_SPECTRUM_ENTRIES} distinct orders; \
                 evaluate this group by formula instead of expansion"
            )));
        }
    }

    // (order, count) table, folded one prime component at a time.
    let mut acc: Vec<(Natural, Natural)> = vec![(Natural::one(), Natural::one())];
    for (p, partition) in components {
        let p_nat = Natural::from(*p);
        let lambda_1 = partition[0];
        let solutions = |k: u32| -> Natural {
            let exp: u64 = partition.iter().map(|&l| l.min(k) as u64).sum();
            // Exponents stay small enough for u32 pow given the entry cap.
            p_nat.pow(exp as u32)
        };
        let mut component: Vec<(Natural, Natural)> = Vec::with_capacity(lambda_1 as usize + 1);
        component.push((Natural::one(), Natural::one()));
        for k in 1..=lambda_1 {
            let count = solutions(k) - solutions(k - 1);
            component.push((p_nat.pow(k), count));
        }
        let mut next = Vec::with_capacity(acc.len() * component.len());
        for (o1, c1) in &acc {
            for (o2, c2) in &component {
                next.push((o1 * o2, c1 * c2));
            }
        }
        acc = next;
    }

    let entries: BTreeMap<Natural, Natural> = acc.into_iter().collect();
    OrderSpectrum::new(entries)
}

/// Spectrum of the cyclic group of factored order n: count(d) = φ(d) for
/// each divisor d of n. Implemented as the abelian spectrum of
/// `⨉_p C_{p^{α_p}}`.
pub fn cyclic_spectrum(n: &FactoredNatural) -> Result<OrderSpectrum> {
    let components: Vec<(u64, Vec<u32>)> = n
        .factors()
        .iter()
        .map(|&(p, e)| (p, vec![e]))
        .collect();
    abelian_spectrum(&components)
}
