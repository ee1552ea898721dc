//! Constructive density of Im ψ'' in [0, 1].
//!
//! The finite products `∏_{p ∈ I} p/(p+1)` over prime subsets are dense
//! in [0, 1] (the logs `ln((p+1)/p)` form a null sequence whose series
//! diverges like Σ 1/p, so finite subset sums of the logs are dense in
//! [0, ∞)). Each such product is the limit of ψ''(⨉_{p ∈ I} C_{p^m}) as
//! m grows, via the exact identity
//!
//!   ψ''(C_{p^m}) = (p/(p+1)) · (1 + p^{−(2m+1)}),
//!
//! so every target in [0, 1] is approximated by an explicit *cyclic*
//! witness group of factored order ∏ p^m.
//!
//! Everything on the approximation path is exact rational arithmetic;
//! floating point appears only in the non-authoritative
//! [`divergence_report`] diagnostic.

use num_traits::One;
use serde::Serialize;
use serde_json::{json, Value};

use crate::descriptor::GroupDescriptor;
use crate::error::{Error, Result};
use crate::factored::FactoredNatural;
use crate::primes::Primes;
use crate::psi;
use crate::ratio::ExactRatio;
use crate::Natural;

/// Default cap on the number of primes a single greedy scan may visit.
///
/// The wall is mathematical, not an implementation detail: reaching a
/// target t needs the product over essentially all primes up to
/// exp(c/t), c ≈ 0.92, so small targets are exponentially expensive and
/// must be cut off rather than left to spin.
pub const DEFAULT_PRIME_BUDGET: u64 = 3_000_000;

/// Result of the prime-subset construction, before and after lifting.
#[derive(Clone, Debug)]
pub struct PrimeSubsetWitness {
    /// Included primes, strictly increasing.
    pub index_set: Vec<u64>,
    /// Exact ∏_{p ∈ I} p/(p+1); always ≥ target.
    pub achieved: ExactRatio,
    pub target: ExactRatio,
    /// Total approximation bound guaranteed so far: after the greedy
    /// stage `achieved − target ≤ epsilon`; once a witness is attached,
    /// `|ψ''(witness) − target| ≤ epsilon`.
    pub epsilon: ExactRatio,
    /// Common exponent m of the cyclic witness C_{∏ p^m}, once lifted.
    pub lift_exponent: Option<u32>,
    pub witness: Option<GroupDescriptor>,
    /// Exact ψ'' of the witness.
    pub witness_psi2: Option<ExactRatio>,
}

impl PrimeSubsetWitness {
    /// |ψ''(witness) − target|, exact, when a witness is attached.
    pub fn abs_error(&self) -> Option<ExactRatio> {
        self.witness_psi2.as_ref().map(|v| v.abs_diff(&self.target))
    }

    /// The stable JSON form used by the CLI: rationals as "num/den"
    /// strings, primes and factored orders as decimal strings.
    pub fn to_json(&self) -> Value {
        let factored: Option<Vec<Value>> = self.witness.as_ref().map(|w| match w {
            GroupDescriptor::Cyclic(n) => n
                .factors()
                .iter()
                .map(|(p, e)| json!([p.to_string(), e.to_string()]))
                .collect(),
            _ => unreachable!("density witnesses are cyclic"),
        });
        json!({
            "target": self.target.to_string(),
            "epsilon": self.epsilon.to_string(),
            "primes": self.index_set.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "achieved_product": self.achieved.to_string(),
            "lift_exponent": self.lift_exponent,
            "witness_order_factored": factored,
            "witness_psi2": self.witness_psi2.as_ref().map(|v| v.to_string()),
            "abs_error": self.abs_error().map(|v| v.to_string()),
        })
    }
}

fn check_epsilon(epsilon: &ExactRatio) -> Result<()> {
    if epsilon.is_zero() {
        return Err(Error::domain("epsilon must be positive"));
    }
    Ok(())
}

/// Greedy prime-subset selection for a target in (0, 1].
///
/// Walks the primes in increasing order keeping an exact running product
/// P (initially 1). A prime p is included exactly when P·p/(p+1) ≥ target,
/// so P ≥ target is a loop invariant; the scan stops as soon as
/// P − target ≤ epsilon. Divergence of Σ 1/p guarantees termination for
/// every valid input; the budget turns pathological scans (tiny targets)
/// into a resource error instead of an hours-long walk.
pub fn greedy_prime_subset(target: &ExactRatio, epsilon: &ExactRatio) -> Result<PrimeSubsetWitness> {
    greedy_prime_subset_with_budget(target, epsilon, DEFAULT_PRIME_BUDGET)
}

pub fn greedy_prime_subset_with_budget(
    target: &ExactRatio,
    epsilon: &ExactRatio,
    prime_budget: u64,
) -> Result<PrimeSubsetWitness> {
    if !target.in_unit_interval() {
        return Err(Error::domain(format!("target {target} outside (0, 1]")));
    }
    check_epsilon(epsilon)?;

    let stop_at = target + epsilon; // stop once P ≤ target + ε
    let mut product = ExactRatio::one();
    let mut included: Vec<u64> = Vec::new();
    let mut scanned = 0u64;

    for p in Primes::new() {
        if product <= stop_at {
            break;
        }
        scanned += 1;
        if scanned > prime_budget {
            return Err(Error::resource(format!(
                "prime budget {prime_budget} exhausted at p = {p} with product {product} \
                 still above target {target} + epsilon; smaller targets need exponentially \
                 many primes"
            )));
        }
        // Include p iff P·p/(p+1) ≥ target, tested by cross-multiplication
        // so skipped primes cost no reduction work.
        let lhs = product.numer() * Natural::from(p) * target.denom();
        let rhs = target.numer() * product.denom() * Natural::from(p + 1);
        if lhs >= rhs {
            let factor = ExactRatio::from_u64(p, p + 1).unwrap();
            product = &product * &factor;
            included.push(p);
            debug_assert!(&product >= target, "greedy invariant P ≥ target violated");
        }
    }

    Ok(PrimeSubsetWitness {
        index_set: included,
        achieved: product,
        target: target.clone(),
        epsilon: epsilon.clone(),
        lift_exponent: None,
        witness: None,
        witness_psi2: None,
    })
}

/// ∏_{p ∈ I} (1 + p^{−(2m+1)}) − the exact correction factor between
/// the limit product and ψ'' of the lifted group at exponent m.
/// Accumulated unreduced (cross-prime cancellation is sparse), reduced
/// once at the end.
fn correction_factor(primes: &[u64], m: u32) -> ExactRatio {
    let mut num = Natural::one();
    let mut den = Natural::one();
    for &p in primes {
        let pk = Natural::from(p).pow(2 * m + 1);
        num *= &pk + Natural::one();
        den *= pk;
    }
    ExactRatio::new(num, den).expect("positive denominator")
}

/// Attach the minimal-exponent cyclic witness to a prime-subset result.
///
/// Finds the least m ≥ 1 with ψ''(⨉_{p ∈ I} C_{p^m}) − ∏ p/(p+1) ≤ epsilon,
/// using ψ''(C_{p^m}) = (p/(p+1))·(1 + p^{−(2m+1)}); the sequence is
/// strictly decreasing in m, so the first hit is minimal. For an empty
/// index set the witness is the trivial group (ψ'' = 1) and no exponent
/// is attached.
pub fn lift_to_witness(w: &PrimeSubsetWitness, epsilon: &ExactRatio) -> Result<PrimeSubsetWitness> {
    check_epsilon(epsilon)?;
    let mut out = w.clone();
    out.epsilon = &w.epsilon + epsilon;

    if w.index_set.is_empty() {
        out.lift_exponent = None;
        out.witness = Some(GroupDescriptor::cyclic(FactoredNatural::one()));
        out.witness_psi2 = Some(ExactRatio::one());
        return Ok(out);
    }

    // ψ'' − achieved ≤ ε ⟺ ψ'' ≤ achieved + ε: one reduced addition up
    // front, then a gcd-free cross-multiplied comparison per exponent.
    let bound = &w.achieved + epsilon;
    let mut m = 1u32;
    loop {
        let psi2 = &w.achieved * &correction_factor(&w.index_set, m);
        debug_assert!(psi2 >= w.achieved);
        if psi2 <= bound {
            let factors = w.index_set.iter().map(|&p| (p, m)).collect();
            out.lift_exponent = Some(m);
            out.witness = Some(GroupDescriptor::cyclic(FactoredNatural::new(factors)?));
            out.witness_psi2 = Some(psi2);
            return Ok(out);
        }
        m = m
            .checked_add(1)
            .ok_or_else(|| Error::resource("lift exponent exceeded u32"))?;
    }
}

/// Approximate a target in [0, 1] by an explicit cyclic group:
/// greedy subset selection with budget ε·f, then the minimal lift with
/// the remaining ε·(1−f), then an exact re-evaluation of the witness
/// through the prime-power formula as an independent check.
///
/// target = 0 (a closure point — ψ'' itself is always positive) is
/// handled by scanning for a square-free product with ψ'' ≤ ε directly.
pub fn approximate(target: &ExactRatio, epsilon: &ExactRatio) -> Result<PrimeSubsetWitness> {
    approximate_with(
        target,
        epsilon,
        &ExactRatio::from_u64(1, 2).unwrap(),
        DEFAULT_PRIME_BUDGET,
    )
}

pub fn approximate_with(
    target: &ExactRatio,
    epsilon: &ExactRatio,
    greedy_fraction: &ExactRatio,
    prime_budget: u64,
) -> Result<PrimeSubsetWitness> {
    check_epsilon(epsilon)?;
    if target > &ExactRatio::one() {
        return Err(Error::domain(format!("target {target} outside [0, 1]")));
    }
    if greedy_fraction.is_zero() || greedy_fraction >= &ExactRatio::one() {
        return Err(Error::domain(format!(
            "greedy fraction {greedy_fraction} outside (0, 1)"
        )));
    }

    if target.is_zero() {
        return approximate_zero(epsilon, prime_budget);
    }

    let greedy_eps = epsilon * greedy_fraction;
    let lift_eps = epsilon
        .checked_sub(&greedy_eps)
        .expect("fraction < 1 leaves a positive lift budget");
    let subset = greedy_prime_subset_with_budget(target, &greedy_eps, prime_budget)?;
    let mut lifted = lift_to_witness(&subset, &lift_eps)?;
    lifted.epsilon = epsilon.clone();
    verify_witness(&lifted);
    Ok(lifted)
}

/// Square-free scan for target 0: extend I = {first k primes} until the
/// exact ψ''(C_{∏ p}) = ∏ (p³+1)/(p³+p²) drops to ε or below.
///
/// Thousands of primes can be involved, so the running products are kept
/// as raw numerator/denominator pairs (the comparison against ε only
/// needs a cross-multiplication) and reduced once at the end.
fn approximate_zero(epsilon: &ExactRatio, prime_budget: u64) -> Result<PrimeSubsetWitness> {
    let mut prod_num = Natural::one(); // ∏ p
    let mut prod_den = Natural::one(); // ∏ (p+1)
    let mut psi2_num = Natural::one(); // ∏ (p³+1)
    let mut psi2_den = Natural::one(); // ∏ (p³+p²)
    let mut included = Vec::new();
    let mut scanned = 0u64;
    for p in Primes::new() {
        // ψ'' ≤ ε ⟺ psi2_num · ε.den ≤ ε.num · psi2_den.
        if &psi2_num * epsilon.denom() <= epsilon.numer() * &psi2_den {
            break;
        }
        scanned += 1;
        if scanned > prime_budget {
            return Err(Error::resource(format!(
                "prime budget {prime_budget} exhausted with ψ'' still above epsilon {epsilon}"
            )));
        }
        prod_num *= p;
        prod_den *= p + 1;
        let p3 = Natural::from(p as u128 * p as u128 * p as u128);
        psi2_num *= &p3 + Natural::one();
        psi2_den *= &p3 + Natural::from(p as u128 * p as u128);
        included.push(p);
    }
    let factors: Vec<(u64, u32)> = included.iter().map(|&p| (p, 1)).collect();
    let out = PrimeSubsetWitness {
        index_set: included,
        achieved: ExactRatio::new(prod_num, prod_den)?,
        target: ExactRatio::zero(),
        epsilon: epsilon.clone(),
        lift_exponent: Some(1),
        witness: Some(GroupDescriptor::cyclic(FactoredNatural::new(factors)?)),
        witness_psi2: Some(ExactRatio::new(psi2_num, psi2_den)?),
    };
    verify_witness(&out);
    Ok(out)
}

/// Exact re-evaluation of the attached witness through the psi-core
/// route, independent of the identity used during lifting. Panics on
/// violation: a failure here is a bug, not a caller error.
fn verify_witness(w: &PrimeSubsetWitness) {
    let descriptor = w.witness.as_ref().expect("witness attached");
    let reevaluated = psi::psi_double_prime(descriptor).expect("cyclic ψ'' is total");
    assert_eq!(
        Some(&reevaluated),
        w.witness_psi2.as_ref(),
        "lift identity and prime-power formula disagree"
    );
    let err = reevaluated.abs_diff(&w.target);
    assert!(
        err <= w.epsilon,
        "witness error {err} exceeds epsilon {}",
        w.epsilon
    );
}

/// One row of the divergence diagnostic.
#[derive(Clone, Debug, Serialize)]
pub struct DivergenceRow {
    /// 1-based prime index.
    pub index: usize,
    pub prime: u64,
    /// x_i = ln((p_i + 1)/p_i).
    pub x: f64,
    /// Σ_{j ≤ i} x_j.
    pub partial_sum: f64,
    /// x_i · p_i → 1, exposing the limit comparison with Σ 1/p_i.
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DivergenceReport {
    pub rows: Vec<DivergenceRow>,
    /// First index whose partial sum exceeds 2.0, if any within range.
    pub first_index_sum_exceeds_2: Option<usize>,
}

/// Floating-point table of x_i = ln((p_i+1)/p_i) for the first k primes:
/// partial sums grow without bound (same nature as Σ 1/p_i) while
/// x_i·p_i → 1. Diagnostic only — nothing downstream consumes it.
pub fn divergence_report(k: usize) -> DivergenceReport {
    let mut rows = Vec::with_capacity(k);
    let mut sum = 0.0f64;
    let mut first_exceeds = None;
    for (i, p) in Primes::new().take(k).enumerate() {
        let x = (1.0 / p as f64).ln_1p();
        sum += x;
        let index = i + 1;
        if first_exceeds.is_none() && sum > 2.0 {
            first_exceeds = Some(index);
        }
        rows.push(DivergenceRow {
            index,
            prime: p,
            x,
            partial_sum: sum,
            ratio: x * p as f64,
        });
    }
    DivergenceReport {
        rows,
        first_index_sum_exceeds_2: first_exceeds,
    }
}
