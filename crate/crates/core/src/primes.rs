//! Primality testing, prime generation, and the smallest-prime-factor sieve.

use crate::error::{Error, Result};

/// Deterministic Miller–Rabin for the full 64-bit range.
///
/// The witness set {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37} is known
/// to be exact for all n < 2^64.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let d = n - 1;
    let s = d.trailing_zeros();
    let d = d >> s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Smallest-prime-factor table for 2 ≤ n ≤ limit.
///
/// Entries are u32, so the hard cap is `limit ≤ u32::MAX`; memory is
/// 4·(limit+1) bytes (≈ 4 GB at the cap, 4 MB at limit 10⁶). Construction
/// is the linear sieve, O(limit) time. The table is write-once and safe
/// to share across threads.
pub struct SpfSieve {
    spf: Vec<u32>,
}

impl SpfSieve {
    pub const MAX_LIMIT: u64 = u32::MAX as u64;

    pub fn build(limit: u64) -> Result<Self> {
        if limit < 2 {
            return Err(Error::domain("sieve limit must be at least 2"));
        }
        if limit > Self::MAX_LIMIT {
            return Err(Error::resource(format!(
                "sieve limit {limit} exceeds the supported maximum {}",
                Self::MAX_LIMIT
            )));
        }
        let len = limit as usize + 1;
        let mut spf: Vec<u32> = Vec::new();
        spf.try_reserve_exact(len).map_err(|_| {
            Error::resource(format!(
                "cannot allocate {} bytes for the smallest-prime-factor table",
                4 * len
            ))
        })?;
        spf.resize(len, 0);

        let mut primes: Vec<u32> = Vec::new();
        for i in 2..=limit as usize {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u32);
            }
            let si = spf[i];
            for &p in &primes {
                let ip = i * p as usize;
                if p > si || ip > limit as usize {
                    break;
                }
                spf[ip] = p;
            }
        }
        Ok(Self { spf })
    }

    pub fn limit(&self) -> u64 {
        (self.spf.len() - 1) as u64
    }

    /// Least prime dividing `n`. Panics if `n < 2` or `n > limit`.
    pub fn spf(&self, n: u64) -> u64 {
        assert!(n >= 2 && n <= self.limit(), "spf query {n} out of table range");
        self.spf[n as usize] as u64
    }

    /// Factor `n ≤ limit` by repeated table lookups, O(log n) divisions.
    pub fn factor(&self, n: u64) -> Vec<(u64, u32)> {
        assert!(n >= 1 && n <= self.limit(), "factor query {n} out of table range");
        let mut out = Vec::new();
        let mut m = n;
        while m > 1 {
            let p = self.spf[m as usize] as u64;
            let mut e = 0u32;
            while m.is_multiple_of(p) {
                m /= p;
                e += 1;
            }
            out.push((p, e));
        }
        out
    }
}

/// Unbounded prime iterator backed by a growing Eratosthenes sieve.
///
/// The sieved bound doubles on exhaustion, so iterating the first k primes
/// costs O(p_k log log p_k) amortized.
pub struct Primes {
    primes: Vec<u64>,
    next_idx: usize,
    sieved_to: u64,
}

impl Primes {
    pub fn new() -> Self {
        Self {
            primes: vec![2, 3, 5, 7, 11, 13],
            next_idx: 0,
            sieved_to: 16,
        }
    }

    fn extend(&mut self) {
        let lo = self.sieved_to + 1;
        let hi = self.sieved_to * 2;
        // Base primes cover sqrt(hi) because hi = 2·sieved_to and every
        // prime ≤ sieved_to is already known.
        let mut composite = vec![false; (hi - lo + 1) as usize];
        for &p in &self.primes {
            if p * p > hi {
                break;
            }
            let start = lo.div_ceil(p).max(2) * p;
            let mut m = start;
            while m <= hi {
                composite[(m - lo) as usize] = true;
                m += p;
            }
        }
        for (i, &c) in composite.iter().enumerate() {
            if !c {
                self.primes.push(lo + i as u64);
            }
        }
        self.sieved_to = hi;
    }

    /// The i-th prime, 0-based, extending the sieve as needed.
    pub fn nth(&mut self, i: usize) -> u64 {
        while self.primes.len() <= i {
            self.extend();
        }
        self.primes[i]
    }
}

impl Default for Primes {
    fn default() -> Self {
        Self::new()
    }
}

impl Iterator for Primes {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        while self.next_idx >= self.primes.len() {
            self.extend();
        }
        let p = self.primes[self.next_idx];
        self.next_idx += 1;
        Some(p)
    }
}

/// The first k primes, in increasing order.
pub fn nth_primes(k: usize) -> Vec<u64> {
    Primes::new().take(k).collect()
}

/// Simple bounded prime list (used for sieve base primes).
pub(crate) fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let mut composite = vec![false; limit as usize + 1];
    let mut out = Vec::new();
    for n in 2..=limit {
        if !composite[n as usize] {
            out.push(n);
            let mut m = n * n;
            while m <= limit {
                composite[m as usize] = true;
                m += n;
            }
        }
    }
    out
}
