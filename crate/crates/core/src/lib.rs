//! Exact arithmetic for the sum-of-element-orders functions on finite groups.
//!
//! For a finite group `G`, let `ψ(G) = Σ_{x ∈ G} o(x)` be the sum of the
//! orders of its elements. Two normalizations of ψ are the objects of
//! interest here:
//!
//!   ψ'(G)  = ψ(G) / ψ(C_{|G|})   ∈ (0, 1]   (cyclic groups maximize ψ)
//!   ψ''(G) = ψ(G) / |G|²         ∈ (0, 1]
//!
//! Everything is computed in exact rational arithmetic. The crate provides:
//!
//! * [`ratio`], [`primes`], [`factored`] — arbitrary-precision rationals,
//!   prime generation, smallest-prime-factor sieving, and 64-bit
//!   factorization ([`ExactRatio`], [`SpfSieve`], [`FactoredNatural`]).
//! * [`spectrum`], [`descriptor`], [`psi`] — group descriptors (cyclic in
//!   factored form, abelian primary decompositions, explicit order
//!   spectra) and the evaluation of ψ, ψ', ψ'' over them.
//! * [`density`] — a constructive realization of the density of
//!   `Im ψ''` in `[0, 1]`: greedy selection of a prime subset `I` with
//!   `∏_{p ∈ I} p/(p+1)` just above a target, lifted to an explicit
//!   cyclic witness group `C_{∏ p^m}` whose exact ψ'' lands within a
//!   requested ε of the target.
//! * [`collision`] — a segmented multiplicative sieve over `ψ''(C_n)` for
//!   all `n ≤ N` with exact reduced-fraction keys, used to search for
//!   collisions `ψ''(C_m) = ψ''(C_n)` (none exist up to 10⁶).
//! * [`preimage`] — surjectivity-side tooling: machine-checked exclusion
//!   traces for the dyadic family `a/2^r` (a, r odd, value > 7/16),
//!   bounded-exhaustive preimage search, and the `C_2` uniqueness check
//!   for the value 3/4.
//!
//! Group "inputs" are descriptors carrying order statistics, never
//! multiplication tables: ψ only depends on the multiset of element
//! orders, and the density witnesses have orders far too large to
//! enumerate.

pub mod collision;
pub mod density;
pub mod descriptor;
pub mod error;
pub mod factored;
pub mod preimage;
pub mod primes;
pub mod psi;
pub mod ratio;
pub mod spectrum;

/// Arbitrary-precision non-negative integer.
pub type Natural = num_bigint::BigUint;

pub use collision::{find_collisions, CollisionConfig, CollisionMode, CollisionReport, PsiKeyIndex, SieveRecord};
pub use density::{approximate, divergence_report, greedy_prime_subset, lift_to_witness, PrimeSubsetWitness};
pub use descriptor::GroupDescriptor;
pub use error::{Error, Result};
pub use factored::{factorize, factorize_u64, FactoredNatural};
pub use preimage::{dyadic_exclusion_check, preimage_search, uniqueness_c2_check, ExclusionTrace};
pub use primes::{is_prime_u64, nth_primes, Primes, SpfSieve};
pub use psi::{psi, psi_cyclic, psi_double_prime, psi_from_spectrum, psi_prime_power, psi_prime_ratio, threshold_classify};
pub use ratio::ExactRatio;
pub use spectrum::{abelian_spectrum, OrderSpectrum};
