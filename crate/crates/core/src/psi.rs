//! Exact evaluation of ψ, ψ', ψ'' over group descriptors.
//!
//! The cyclic building block is
//!
//!   ψ(C_{p^α}) = (p^{2α+1} + 1) / (p + 1),
//!
//! ψ is multiplicative over coprime direct factors, and for any G of
//! order n:  ψ(G) ≤ ψ(C_n), with equality exactly for C_n. The derived
//! ratios are ψ'(G) = ψ(G)/ψ(C_{|G|}) and ψ''(G) = ψ(G)/|G|², both in
//! (0, 1].

use num_traits::{One, Zero};
use serde::Serialize;

use crate::descriptor::GroupDescriptor;
use crate::error::{Error, Result};
use crate::factored::FactoredNatural;
use crate::primes::is_prime_u64;
use crate::ratio::ExactRatio;
use crate::spectrum::{abelian_spectrum, OrderSpectrum};
use crate::Natural;

/// ψ(C_{p^α}) = (p^{2α+1} + 1)/(p + 1), always an exact integer.
pub fn psi_prime_power(p: u64, alpha: u32) -> Result<Natural> {
    if !is_prime_u64(p) {
        return Err(Error::domain(format!("{p} is not prime")));
    }
    if alpha == 0 {
        return Err(Error::domain("exponent must be at least 1"));
    }
    Ok(psi_prime_power_unchecked(p, alpha))
}

fn psi_prime_power_unchecked(p: u64, alpha: u32) -> Natural {
    let p = Natural::from(p);
    let num = p.pow(2 * alpha + 1) + Natural::one();
    let den = p + Natural::one();
    let (q, r) = num_integer::Integer::div_rem(&num, &den);
    debug_assert!(r.is_zero(), "p+1 must divide p^(2α+1)+1");
    q
}

/// ψ(C_{p^α}) in machine arithmetic. Requires p^{2α+1} < 2^127; callers
/// in the sieve guarantee this via the sieve range caps.
pub(crate) fn psi_prime_power_u128(p: u128, alpha: u32) -> u128 {
    let num = p.pow(2 * alpha + 1) + 1;
    num / (p + 1)
}

/// ψ of the cyclic group with the given factored order: the product of
/// ψ(C_{p^α}) over its prime powers. ψ(C_1) = 1.
pub fn psi_cyclic(n: &FactoredNatural) -> Natural {
    let mut acc = Natural::one();
    for &(p, e) in n.factors() {
        acc *= psi_prime_power_unchecked(p, e);
    }
    acc
}

/// ψ from an explicit order spectrum: Σ order·count.
pub fn psi_from_spectrum(spec: &OrderSpectrum) -> Natural {
    spec.order_weighted_sum()
}

/// ψ(G) for any descriptor. Cyclic descriptors use the prime-power
/// formula; abelian ones expand their spectrum first; explicit spectra
/// are summed directly. The routes agree wherever they overlap.
pub fn psi(g: &GroupDescriptor) -> Result<Natural> {
    match g {
        GroupDescriptor::Cyclic(n) => Ok(psi_cyclic(n)),
        GroupDescriptor::Abelian(components) => {
            Ok(psi_from_spectrum(&abelian_spectrum(components)?))
        }
        GroupDescriptor::Spectrum { spectrum, .. } => Ok(psi_from_spectrum(spectrum)),
    }
}

/// ψ''(G) = ψ(G)/|G|², reduced; lies in (0, 1], equal to 1 only for the
/// trivial group.
///
/// For cyclic descriptors the value is assembled from the factored order
/// as ∏ (p^{2α+1}+1) / (p^{2α}(p+1)) without ever expanding |G| — density
/// witnesses have orders far beyond any fixed integer width.
pub fn psi_double_prime(g: &GroupDescriptor) -> Result<ExactRatio> {
    match g {
        GroupDescriptor::Cyclic(n) => Ok(psi_double_prime_cyclic(n)),
        _ => {
            let order = g.order();
            let value = psi(g)?;
            ExactRatio::new(value, &order * &order)
        }
    }
}

pub(crate) fn psi_double_prime_cyclic(n: &FactoredNatural) -> ExactRatio {
    let mut acc = ExactRatio::one();
    for &(p, e) in n.factors() {
        let p_nat = Natural::from(p);
        let num = psi_prime_power_unchecked(p, e);
        let den = p_nat.pow(2 * e);
        // gcd(ψ(C_{p^α}), p^{2α}) = 1, so this factor is already reduced;
        // cross-prime cancellation happens in the ratio product.
        let factor = ExactRatio::new(num, den).expect("positive denominator");
        acc = &acc * &factor;
    }
    acc
}

/// ψ'(G) = ψ(G)/ψ(C_{|G|}), reduced; in (0, 1], equal to 1 exactly when
/// the descriptor's order statistics are those of the cyclic group.
pub fn psi_prime_ratio(g: &GroupDescriptor) -> Result<ExactRatio> {
    let order = g.order_factored()?;
    let value = psi(g)?;
    ExactRatio::new(value, psi_cyclic(&order))
}

/// Group properties implied by large ψ' or ψ'' values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupProperty {
    Cyclic,
    Nilpotent,
    Supersolvable,
    Solvable,
}

impl GroupProperty {
    pub fn as_str(self) -> &'static str {
        match self {
            GroupProperty::Cyclic => "cyclic",
            GroupProperty::Nilpotent => "nilpotent",
            GroupProperty::Supersolvable => "supersolvable",
            GroupProperty::Solvable => "solvable",
        }
    }
}

/// Which normalized ratio a threshold classification refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RatioKind {
    /// ψ'(G) = ψ(G)/ψ(C_{|G|})
    PsiPrime,
    /// ψ''(G) = ψ(G)/|G|²
    PsiDoublePrime,
}

/// Strict thresholds (property, num, den): exceeding num/den implies the
/// property. These constants are sharp in the literature they come from;
/// the classification is advisory — the proofs live in the cited
/// theorems, not here.
const PSI_PRIME_THRESHOLDS: [(GroupProperty, u64, u64); 4] = [
    (GroupProperty::Cyclic, 7, 11),
    (GroupProperty::Nilpotent, 13, 21),
    (GroupProperty::Supersolvable, 31, 77),
    (GroupProperty::Solvable, 211, 1617),
];

const PSI_DOUBLE_PRIME_THRESHOLDS: [(GroupProperty, u64, u64); 1] =
    [(GroupProperty::Cyclic, 7, 16)];

/// Every property whose strict threshold the ratio exceeds.
pub fn threshold_classify(r: &ExactRatio, kind: RatioKind) -> Result<Vec<GroupProperty>> {
    if !r.in_unit_interval() {
        return Err(Error::domain(format!("ratio {r} outside (0, 1]")));
    }
    let thresholds: &[(GroupProperty, u64, u64)] = match kind {
        RatioKind::PsiPrime => &PSI_PRIME_THRESHOLDS,
        RatioKind::PsiDoublePrime => &PSI_DOUBLE_PRIME_THRESHOLDS,
    };
    Ok(thresholds
        .iter()
        .filter(|&&(_, num, den)| *r > ExactRatio::from_u64(num, den).unwrap())
        .map(|&(prop, _, _)| prop)
        .collect())
}
