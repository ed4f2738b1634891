//! Prime generation, p-adic valuations, and prime windows.
//!
//! The window type [`GammaSet`] carries the two scalar statistics used by
//! every bound evaluator: `tau`, the exact rational sum of reciprocals of
//! the window primes, and `rho = ln(n) / ln(|window|)`, stored as a double.

use crate::interval::ratio_to_f64;
use crate::{Error, Limits, Result};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

const SEGMENT_LEN: u64 = 1 << 20;

/// All primes `<= limit`, ascending, by a segmented sieve. A limit of 0 or 1
/// yields an empty list. Fails if `limit` exceeds the default memory budget.
pub fn sieve_primes(limit: u64) -> Result<Vec<u64>> {
    sieve_primes_bounded(limit, Limits::default().sieve_budget)
}

/// As [`sieve_primes`] with an explicit budget.
pub fn sieve_primes_bounded(limit: u64, budget: u64) -> Result<Vec<u64>> {
    if limit > budget {
        return Err(Error::SieveBudget { limit, budget });
    }
    if limit < 2 {
        return Ok(Vec::new());
    }
    let root = isqrt(limit);
    let base = simple_sieve(root);
    let mut primes = base.clone();
    // Sieve [root+1, limit] in fixed-size segments so memory stays O(sqrt).
    let mut lo = root + 1;
    let mut composite = vec![false; SEGMENT_LEN as usize];
    while lo <= limit {
        let hi = (lo + SEGMENT_LEN - 1).min(limit);
        let len = (hi - lo + 1) as usize;
        composite[..len].fill(false);
        for &p in &base {
            let mut j = lo.div_ceil(p) * p;
            while j <= hi {
                composite[(j - lo) as usize] = true;
                j += p;
            }
        }
        for (i, &c) in composite[..len].iter().enumerate() {
            if !c {
                primes.push(lo + i as u64);
            }
        }
        lo = hi + 1;
    }
    Ok(primes)
}

fn simple_sieve(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r.saturating_mul(r) > n {
        r -= 1;
    }
    while (r + 1).saturating_mul(r + 1) <= n {
        r += 1;
    }
    r
}

pub fn is_prime(v: u64) -> bool {
    if v < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= v {
        if v.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// The exponent of `p` in the factorization of `k` (`k >= 1`, `p >= 2`).
pub fn valuation(k: u64, p: u64) -> u32 {
    assert!(k >= 1, "valuation of zero is undefined");
    assert!(p >= 2, "valuation base must be at least 2");
    let mut k = k;
    let mut e = 0;
    while k.is_multiple_of(p) {
        k /= p;
        e += 1;
    }
    e
}

/// A finite window of primes together with the sample-range bound `n` and
/// the derived statistics `tau` (exact) and `rho` (double, defined only for
/// windows of at least two primes).
#[derive(Clone, Debug)]
pub struct GammaSet {
    n: u64,
    primes: Vec<u64>,
    tau: BigRational,
    rho: Option<f64>,
}

impl GammaSet {
    /// Window from an explicit prime list; validates primality and strict
    /// ascending order. Unlike the `[lo, hi]` constructors, explicit lists
    /// may contain primes above `n`: the multiplicity of such a prime in a
    /// sample of `[n]` is simply 0 almost surely, and the degenerate-range
    /// distances (for instance `n = 1` against the window `{2}`) are
    /// well-defined and useful as goldens.
    pub fn from_primes(n: u64, primes: Vec<u64>) -> Result<Self> {
        for (i, &p) in primes.iter().enumerate() {
            if !is_prime(p) {
                return Err(Error::NotPrime { value: p });
            }
            if i > 0 && primes[i - 1] >= p {
                return Err(Error::NotPrime { value: p });
            }
        }
        Ok(Self::new_unchecked(n, primes))
    }

    /// Primes `p` with `lo <= p <= hi`, requiring `2 <= lo <= hi <= n`.
    pub fn window(n: u64, lo: f64, hi: f64) -> Result<Self> {
        if !(2.0 <= lo && lo <= hi && hi <= n as f64) {
            return Err(Error::InvalidWindow { lo, hi, n });
        }
        let all = sieve_primes(hi.floor() as u64)?;
        let primes = all
            .into_iter()
            .filter(|&p| p as f64 >= lo && p as f64 <= hi)
            .collect();
        Ok(Self::new_unchecked(n, primes))
    }

    /// The first `k` primes, as a window over `[n]`.
    pub fn first_k(n: u64, k: usize) -> Result<Self> {
        let mut limit = 64u64.max(3 * k as u64);
        loop {
            let primes = sieve_primes(limit.min(n))?;
            if primes.len() >= k || limit >= n {
                let primes: Vec<u64> = primes.into_iter().take(k).collect();
                if primes.len() < k {
                    return Err(Error::NotPrime { value: n });
                }
                return Ok(Self::new_unchecked(n, primes));
            }
            limit *= 2;
        }
    }

    /// The canonical window `{p : p <= n^(1/beta)}`, capped at `n`.
    pub fn from_beta(n: u64, beta: f64) -> Result<Self> {
        assert!(beta > 0.0 && beta.is_finite(), "beta must be positive");
        let hi = ((n as f64).ln() / beta).exp().min(n as f64);
        if hi < 2.0 {
            return Ok(Self::new_unchecked(n, Vec::new()));
        }
        Self::window(n, 2.0, hi)
    }

    fn new_unchecked(n: u64, primes: Vec<u64>) -> Self {
        let tau = reciprocal_sum(&primes);
        let rho = if primes.len() >= 2 {
            Some((n as f64).ln() / (primes.len() as f64).ln())
        } else {
            None
        };
        GammaSet {
            n,
            primes,
            tau,
            rho,
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// Exact `sum of 1/p` over the window.
    pub fn tau(&self) -> &BigRational {
        &self.tau
    }

    pub fn tau_f64(&self) -> f64 {
        ratio_to_f64(&self.tau)
    }

    /// `ln(n) / ln(|window|)`; `None` for windows of fewer than 2 primes.
    pub fn rho(&self) -> Option<f64> {
        self.rho
    }

    /// Soft cardinality condition `|window| >= e^2` used by the truncated
    /// inclusion-exclusion estimates; exposed as a flag, not a precondition.
    pub fn meets_e2_cardinality(&self) -> bool {
        self.primes.len() as f64 >= std::f64::consts::E * std::f64::consts::E
    }

    /// Restriction to the first `k` primes of the window.
    pub fn truncated(&self, k: usize) -> Self {
        Self::new_unchecked(self.n, self.primes.iter().take(k).copied().collect())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "primes": self.primes,
            "tau": format!("{}/{}", self.tau.numer(), self.tau.denom()),
            "rho": self.rho,
        })
    }
}

/// Exact rational `sum of 1/p`, accumulated unreduced and normalized once so
/// large windows stay tractable.
fn reciprocal_sum(primes: &[u64]) -> BigRational {
    let mut num = BigUint::zero();
    let mut den = BigUint::one();
    for &p in primes {
        num = num * p + &den;
        den *= p;
    }
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `sum_{p <= n} 1/p - ln(ln(n))`, the deviation in Mertens' second theorem.
/// Requires `n >= 3`. The reciprocal sum is accumulated in compensated
/// double precision.
pub fn mertens_gap(n: u64) -> Result<f64> {
    if n < 3 {
        return Err(Error::MertensRange { n });
    }
    let primes = sieve_primes(n)?;
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &p in &primes {
        let y = 1.0 / p as f64 - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    Ok(sum - (n as f64).ln().ln())
}
