//! `kbv`: an exact-arithmetic laboratory for the distance in total variation
//! between the prime multiplicity vector of a random integer in `[n]` and a
//! vector of independent geometric random variables.
//!
//! Everything probabilistic is computed in exact rational arithmetic (or in
//! certified rational intervals when irrational quantities such as `k^{-s}`
//! or `e^{-lambda}` enter), so inequalities can be verified, not estimated.
//!
//! Module map:
//! - [`primes`]: sieves, p-adic valuations, prime windows and their scalar
//!   statistics `tau` and `rho`.
//! - [`laws`]: exact sampling laws on `[n]`, divisor probabilities, and
//!   certification of the divisor-regularity hypothesis.
//! - [`exact`]: the brute-force oracle: exact joint multiplicity laws,
//!   exact total variation, partitioned TV sums, and truncated
//!   inclusion-exclusion sandwiches.
//! - [`bounds`]: closed-form bound evaluators and tail inequalities.
//! - [`apps`]: the distribution of the prime-factor counting function with
//!   its Gaussian Wasserstein distance, and Poisson approximation of the
//!   small-prime indicator process.
//! - [`cli`]: reproducible experiment runner behind the `kbv` binary.

#![forbid(unsafe_code)]

pub mod apps;
pub mod bounds;
pub mod cli;
mod error;
pub mod exact;
pub mod interval;
pub mod laws;
pub mod primes;
pub mod report;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Resource limits for exact-mode computations.
///
/// Exact enumeration is exponential in the number of window primes and the
/// dense mass arrays are linear in `n`, so both are capped. The caps are
/// configurable from the CLI (`--max-gamma`, `--max-n`).
#[derive(Clone, Copy, Debug)]
pub struct Limits {
    /// Largest prime-window size admitted in exact mode.
    pub max_gamma: usize,
    /// Largest `n` admitted for dense laws and exact enumeration.
    pub max_n: u64,
    /// Largest sieve limit (memory budget proxy).
    pub sieve_budget: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_gamma: 16,
            max_n: 10_000_000,
            sieve_budget: 1_000_000_000,
        }
    }
}
