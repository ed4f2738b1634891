//! Closed-form evaluators for the explicit decay bounds, with the
//! parameter bookkeeping (`alpha`, `beta`, truncation order) they induce,
//! plus the Poisson tail inequality used by the combinatorial estimates.
//!
//! All evaluators are pure double-precision functions. When one side of an
//! inequality is an exact rational, the comparison goes through
//! [`exact_le_bound`], which first rounds the double bound down by a few
//! ulps so a reported pass is conservative.

use crate::interval::{exp_interval, ratio_from_f64, QInterval};
use crate::primes::GammaSet;
use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Parameters shared by the bound evaluators: the hypothesis pair
/// `(t, kappa)`, the slack `epsilon` from the cardinality condition, the
/// regime-splitting constant `delta`, and the window statistics.
#[derive(Clone, Copy, Debug)]
pub struct BoundParams {
    pub t: f64,
    pub kappa: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub n: u64,
    pub gamma_len: usize,
    pub tau: f64,
    pub rho: f64,
}

impl BoundParams {
    /// Binds the parameters to a window; fails when `rho` is undefined
    /// (fewer than two window primes).
    pub fn for_gamma(
        gamma: &GammaSet,
        t: f64,
        kappa: f64,
        epsilon: f64,
        delta: f64,
    ) -> Result<Self> {
        let rho = gamma.rho().ok_or(Error::RhoUndefined { size: gamma.len() })?;
        Ok(BoundParams {
            t,
            kappa,
            epsilon,
            delta,
            n: gamma.n(),
            gamma_len: gamma.len(),
            tau: gamma.tau_f64(),
            rho,
        })
    }

    /// `alpha = delta * rho`, the support-size threshold.
    pub fn alpha(&self) -> f64 {
        self.delta * self.rho
    }

    /// `beta = 2 delta / ((1 + eps) ln 1.5) * rho ln(rho)`, the total
    /// multiplicity threshold.
    pub fn beta(&self) -> f64 {
        2.0 * self.delta / ((1.0 + self.epsilon) * 1.5f64.ln()) * self.rho * self.rho.ln()
    }

    /// Largest odd truncation order `<= alpha`; `None` when `alpha < 1`
    /// (truncation unusable, reported degenerate).
    pub fn gamma_trunc(&self) -> Option<u32> {
        let a = self.alpha();
        if a < 1.0 {
            return None;
        }
        let k = a.floor() as u32;
        Some(if k % 2 == 1 { k } else { k - 1 })
    }

    /// The cardinality condition `|window| <= n^(tau^(-1-eps))` in its
    /// logarithmic form `ln|window| * tau^(1+eps) <= ln(n)`.
    pub fn cardinality_ok(&self) -> bool {
        (self.gamma_len as f64).ln() * self.tau.powf(1.0 + self.epsilon) <= (self.n as f64).ln()
    }
}

/// Which argument attained the `min` in an exponent of the form
/// `min(rho ln rho, ln n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MinBranch {
    RhoLogRho,
    LogN,
}

impl MinBranch {
    pub fn as_str(&self) -> &'static str {
        match self {
            MinBranch::RhoLogRho => "rho*log(rho)",
            MinBranch::LogN => "log(n)",
        }
    }
}

pub struct MainBound {
    pub bound: f64,
    pub c: f64,
    pub branch: MinBranch,
    pub cardinality_ok: bool,
    /// A bound above 1 carries no information at this scale.
    pub vacuous: bool,
}

/// The headline decay bound `(7 + 4 kappa) exp(-c min(rho ln rho, ln n))`
/// with `c = t (min(1, eps)) / (12 (1 + eps))`. Computed even when the
/// cardinality condition fails, with the flag set.
pub fn main_decay_bound(params: &BoundParams) -> MainBound {
    let c = params.t * params.epsilon.min(1.0) / (12.0 * (1.0 + params.epsilon));
    let rho_term = params.rho * params.rho.ln();
    let log_n = (params.n as f64).ln();
    let (arg, branch) = if rho_term <= log_n {
        (rho_term, MinBranch::RhoLogRho)
    } else {
        (log_n, MinBranch::LogN)
    };
    let bound = (7.0 + 4.0 * params.kappa) * (-c * arg).exp();
    MainBound {
        bound,
        c,
        branch,
        cardinality_ok: params.cardinality_ok(),
        vacuous: bound.is_nan() || bound > 1.0,
    }
}

/// Bound for the many-distinct-divisors regime:
/// `(2 + kappa) exp(-(delta eps / (1 + eps)) rho ln(rho) + delta (1 - ln delta) rho)`.
pub fn many_divisors_bound(delta: f64, epsilon: f64, kappa: f64, rho: f64) -> Result<f64> {
    if rho <= 1.0 {
        return Err(Error::RhoTooSmall { rho });
    }
    if delta <= 0.0 {
        return Err(Error::DeltaRange { delta, t: f64::INFINITY });
    }
    let exponent =
        -(delta * epsilon / (1.0 + epsilon)) * rho * rho.ln() + delta * (1.0 - delta.ln()) * rho;
    Ok((2.0 + kappa) * exponent.exp())
}

pub struct HighMultiplicityBound {
    pub bound: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Bound for the few-divisors / high-multiplicity regime:
/// `(2 + kappa) exp(-(delta/(1+eps)) rho ln rho + 5 ln(1.5) delta rho + ln(delta rho))`,
/// together with the thresholds it is tuned for.
pub fn high_multiplicity_bound(delta: f64, epsilon: f64, kappa: f64, rho: f64) -> Result<HighMultiplicityBound> {
    if rho <= 1.0 {
        return Err(Error::RhoTooSmall { rho });
    }
    if delta <= 0.0 {
        return Err(Error::DeltaRange { delta, t: f64::INFINITY });
    }
    let alpha = delta * rho;
    let beta = 2.0 * delta / ((1.0 + epsilon) * 1.5f64.ln()) * rho * rho.ln();
    let exponent = -(delta / (1.0 + epsilon)) * rho * rho.ln()
        + 5.0 * 1.5f64.ln() * delta * rho
        + (delta * rho).ln();
    Ok(HighMultiplicityBound {
        bound: (2.0 + kappa) * exponent.exp(),
        alpha,
        beta,
    })
}

pub struct SmallRegimeBound {
    pub bound: f64,
    pub c: f64,
    pub branch: MinBranch,
    pub gamma_trunc: Option<u32>,
}

/// Bound for the small regime (truncated inclusion-exclusion):
/// `(3 + 2 kappa) exp(-c min(ln n, rho ln rho))` with
/// `c = min(t - 3 delta, delta eps / (2 (1 + eps)))`; requires
/// `delta in (0, t/3)`.
pub fn small_regime_bound_eval(params: &BoundParams) -> Result<SmallRegimeBound> {
    if !(params.delta > 0.0 && params.delta < params.t / 3.0) {
        return Err(Error::DeltaRange {
            delta: params.delta,
            t: params.t,
        });
    }
    if params.rho <= 1.0 {
        return Err(Error::RhoTooSmall { rho: params.rho });
    }
    let c = (params.t - 3.0 * params.delta)
        .min(params.delta * params.epsilon / (2.0 * (1.0 + params.epsilon)));
    let rho_term = params.rho * params.rho.ln();
    let log_n = (params.n as f64).ln();
    let (arg, branch) = if rho_term <= log_n {
        (rho_term, MinBranch::RhoLogRho)
    } else {
        (log_n, MinBranch::LogN)
    };
    Ok(SmallRegimeBound {
        bound: (3.0 + 2.0 * params.kappa) * (-c * arg).exp(),
        c,
        branch,
        gamma_trunc: params.gamma_trunc(),
    })
}

pub struct TruncationRemainder {
    /// Right-hand side with the case term over `n`, as displayed.
    pub as_displayed: f64,
    /// Variant with the case term over `n^t`, as the derivation uses.
    pub as_derived: f64,
    /// First summand, common to both variants.
    pub first_term: f64,
    /// True when the `sqrt(beta |window|) <= alpha` case applied.
    pub tight_case: bool,
}

/// Remainder bound for truncation order `gamma_trunc`:
/// `(3/sqrt(g)) (e tau / g)^g alpha (2e)^(2 tau)` plus a case term
/// `2 (1 + kappa) |window|^(g+1) / n * alpha * (...)`. The displayed form
/// divides the case term by `n`; its derivation divides by `n^t`. Both are
/// evaluated and reported.
pub fn truncation_remainder_bound(
    gamma_trunc: u32,
    params: &BoundParams,
) -> Result<TruncationRemainder> {
    if gamma_trunc.is_multiple_of(2) || gamma_trunc == 0 {
        return Err(Error::BadTruncationOrder {
            gamma: gamma_trunc,
            size: params.gamma_len,
        });
    }
    let g = gamma_trunc as f64;
    let e = std::f64::consts::E;
    let alpha = params.alpha();
    let beta = params.beta();
    let glen = params.gamma_len as f64;
    let first_term =
        3.0 / g.sqrt() * (e * params.tau / g).powf(g) * alpha * (2.0 * e).powf(2.0 * params.tau);
    let tight_case = (beta * glen).sqrt() <= alpha;
    let case_factor = if tight_case {
        (2.0 * alpha).exp()
    } else {
        (e * e * beta * glen / (alpha * alpha)).powf(alpha)
    };
    let shared = 2.0 * (1.0 + params.kappa) * glen.powf(g + 1.0) * alpha * case_factor;
    Ok(TruncationRemainder {
        as_displayed: first_term + shared / params.n as f64,
        as_derived: first_term + shared / (params.n as f64).powf(params.t),
        first_term,
        tight_case,
    })
}

/// The crude inclusion-exclusion bound `C * 4^|window| * ln(n) / n`, with
/// the unspecified universal constant supplied by the caller.
pub fn rough_bound(n: f64, gamma_len: usize, c: f64) -> f64 {
    c * 4f64.powi(gamma_len as i32) * n.ln() / n
}

/// Tail bound for an unnormalized Poisson series:
/// `sum_{k >= x} lambda^k / k! <= (e lambda / x)^x`, valid for
/// `0 < lambda < x`.
pub fn chernoff_poisson_tail(lambda: f64, x: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < x) {
        return Err(Error::ChernoffRange { lambda, x });
    }
    Ok((std::f64::consts::E * lambda / x).powf(x))
}

/// Companion exact evaluation of `sum_{k >= x} lambda^k / k!` as
/// `e^lambda - partial`, certified by the series enclosure of `e^lambda`.
pub fn exact_poisson_series_tail(lambda: &BigRational, x: u64, bits: u32) -> QInterval {
    let e_lambda = exp_interval(lambda, bits);
    let mut partial = BigRational::zero();
    let mut term = BigRational::one();
    for k in 0..x {
        if k > 0 {
            term = term * lambda / BigRational::from_integer(BigInt::from(k));
        }
        partial += &term;
    }
    e_lambda.add_q(&-partial)
}

/// Rounds a finite bound down by a 4-ulp-scaled margin; infinities pass
/// through.
pub fn rounded_down(bound: f64) -> f64 {
    if bound.is_finite() {
        bound - bound.abs() * (4.0 * f64::EPSILON)
    } else {
        bound
    }
}

/// Conservative comparison of an exact (or enclosed) left-hand side against
/// a double bound: true only when the whole enclosure sits at or below the
/// rounded-down bound. Non-finite positive bounds always pass.
pub fn exact_le_bound(lhs: &QInterval, bound: f64) -> bool {
    if bound.is_infinite() && bound > 0.0 {
        return true;
    }
    match ratio_from_f64(rounded_down(bound)) {
        Some(b) => lhs.certainly_le_q(&b),
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::{ratio, ratio_to_f64};

    fn params(t: f64, kappa: f64, epsilon: f64, delta: f64, n: u64, glen: usize) -> BoundParams {
        BoundParams {
            t,
            kappa,
            epsilon,
            delta,
            n,
            gamma_len: glen,
            tau: 1.0,
            rho: (n as f64).ln() / (glen as f64).ln(),
        }
    }

    #[test]
    fn main_bound_frozen_example() {
        // t=1, eps=1, kappa=1, n=1e6, 10 window primes (rho = 6): value
        // frozen from independent high-precision evaluation.
        let p = params(1.0, 1.0, 1.0, 0.25, 1_000_000, 10);
        let out = main_decay_bound(&p);
        assert!((out.c - 1.0 / 24.0).abs() < 1e-15);
        assert_eq!(out.branch, MinBranch::RhoLogRho);
        assert!((out.bound - 7.028374146708997).abs() < 1e-9);
        assert!(out.vacuous);
        // kappa = 1 gives the leading constant 7 + 4 = 11.
        assert!((out.bound / (-out.c * 6.0 * 6.0f64.ln()).exp() - 11.0).abs() < 1e-9);
    }

    #[test]
    fn main_bound_monotone_in_n_for_fixed_window() {
        let mut prev = f64::INFINITY;
        for n in [1_000u64, 10_000, 100_000, 1_000_000, 10_000_000] {
            let out = main_decay_bound(&params(1.0, 1.0, 1.0, 0.25, n, 10));
            assert!(out.bound <= prev);
            prev = out.bound;
        }
    }

    #[test]
    fn many_divisors_frozen_example() {
        // delta=1, eps=1, kappa=1, rho=e: exponent e/2, frozen bound.
        let e = std::f64::consts::E;
        let b = many_divisors_bound(1.0, 1.0, 1.0, e).unwrap();
        assert!((b - 11.678542724728688).abs() < 1e-9);
        // delta = e kills the middle term: bound = 3 exp(-(e eps/(1+eps)) rho ln rho).
        let b2 = many_divisors_bound(e, 1.0, 1.0, e).unwrap();
        let expect = 3.0 * (-(e / 2.0) * e * 1.0).exp();
        assert!((b2 - expect).abs() < 1e-12);
        assert!(many_divisors_bound(1.0, 1.0, 1.0, 0.9).is_err());
    }

    #[test]
    fn high_multiplicity_frozen_example() {
        let e = std::f64::consts::E;
        let out = high_multiplicity_bound(1.0, 1.0, 1.0, e).unwrap();
        assert!((out.beta - 6.704107885243481).abs() < 1e-9);
        assert!((out.alpha - e).abs() < 1e-12);
        assert!((out.bound - 3.0 * 5.151701262993505f64.exp()).abs() < 1e-6);
        // kappa = 3 turns the leading constant into 5.
        let k3 = high_multiplicity_bound(1.0, 1.0, 3.0, e).unwrap();
        assert!((k3.bound / out.bound - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn small_regime_constants() {
        let p = params(1.0, 1.0, 1.0, 0.25, 1000, 5);
        let out = small_regime_bound_eval(&p).unwrap();
        assert!((out.c - 1.0 / 16.0).abs() < 1e-15);
        assert!(matches!(
            small_regime_bound_eval(&params(1.0, 1.0, 1.0, 0.4, 1000, 5)),
            Err(Error::DeltaRange { .. })
        ));
    }

    #[test]
    fn gamma_trunc_selection() {
        let mut p = params(1.0, 1.0, 1.0, 0.25, 1000, 5);
        p.rho = 5.7 / 0.25;
        assert_eq!(p.gamma_trunc(), Some(5));
        p.rho = 0.9 / 0.25;
        assert_eq!(p.gamma_trunc(), None);
        p.rho = 4.0 / 0.25; // alpha exactly 4 -> largest odd below is 3
        assert_eq!(p.gamma_trunc(), Some(3));
    }

    #[test]
    fn truncation_remainder_cases() {
        // Case selector: beta=6.7, 10 primes, alpha=2.7 -> loose case.
        let mut p = params(1.0, 1.0, 1.0, 0.3, 1000, 10);
        p.rho = 9.0;
        let alpha = p.alpha();
        let beta = p.beta();
        assert!((beta * 10.0).sqrt() > alpha);
        let out = truncation_remainder_bound(1, &p).unwrap();
        assert!(!out.tight_case);
        // First term at gamma=1, tau=1: 3 e alpha (2e)^2.
        let e = std::f64::consts::E;
        let expect = 3.0 * e * alpha * (2.0 * e).powf(2.0);
        assert!((out.first_term - expect).abs() < 1e-9);
        // kappa=1 makes the case factor 2(1+kappa) = 4.
        assert!(out.as_derived >= out.first_term);
        assert!(truncation_remainder_bound(2, &p).is_err());
    }

    #[test]
    fn rough_bound_examples() {
        let e = std::f64::consts::E;
        assert!((rough_bound(e, 2, 1.0) - 5.886071058743077).abs() < 1e-12);
        assert!((rough_bound(100.0, 0, 1.0) - 0.046_051_701_859_880_92).abs() < 1e-15);
        // Monotone growth when the window tracks log n.
        let mut prev = 0.0;
        for n in [100.0f64, 1e4, 1e6, 1e8] {
            let len = n.ln().ceil() as usize;
            let b = rough_bound(n, len, 1.0);
            assert!(b > prev);
            prev = b;
        }
    }

    #[test]
    fn chernoff_examples() {
        let b = chernoff_poisson_tail(1.0, 2.0).unwrap();
        assert!((b - 1.847264024732663).abs() < 1e-12);
        let tail = exact_poisson_series_tail(&ratio(1, 1), 2, 128);
        // Tail is e - 2 (compare in f64 up to rendering error).
        let truth = std::f64::consts::E - 2.0;
        assert!((tail.to_f64() - truth).abs() < 1e-12);
        assert!(exact_le_bound(&tail, b));

        assert!(matches!(
            chernoff_poisson_tail(1.0, 1.0),
            Err(Error::ChernoffRange { .. })
        ));
        assert!(chernoff_poisson_tail(0.0, 1.0).is_err());

        let b5 = chernoff_poisson_tail(0.5, 5.0).unwrap();
        assert!((b5 - 0.001484131591025766).abs() < 1e-15);
        let tail5 = exact_poisson_series_tail(&ratio(1, 2), 5, 128);
        assert!(exact_le_bound(&tail5, b5));
        assert!((tail5.to_f64() - 2.8377070012814685e-4).abs() < 1e-12);
    }

    #[test]
    fn chernoff_dominates_exact_tail_on_grid() {
        for (num, den) in [(1u64, 4u64), (1, 2), (1, 1), (2, 1)] {
            let lambda = num as f64 / den as f64;
            let start = lambda.ceil() as u64 + 1;
            for x in start..start + 10 {
                let bound = chernoff_poisson_tail(lambda, x as f64).unwrap();
                let tail = exact_poisson_series_tail(&ratio(num, den), x, 160);
                assert!(
                    exact_le_bound(&tail, bound),
                    "tail exceeded bound at lambda={lambda}, x={x}"
                );
            }
        }
    }

    #[test]
    fn conservative_comparison_rounds_down() {
        let exact_half = QInterval::from_ratio(1, 2);
        assert!(exact_le_bound(&exact_half, 0.5000001));
        // A bound exactly at the value fails after rounding down.
        assert!(!exact_le_bound(&exact_half, 0.5));
        assert!(exact_le_bound(&exact_half, f64::INFINITY));
        assert!((ratio_to_f64(&ratio(1, 2)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cardinality_condition_logarithmic_form() {
        let g = crate::primes::GammaSet::window(1_000_000, 2.0, 29.0).unwrap();
        let p = BoundParams::for_gamma(&g, 1.0, 1.0, 1.0, 0.25).unwrap();
        // tau ~ 1.58, so tau^2 ln(10) ~ 5.8 <= ln(1e6) ~ 13.8.
        assert!(p.cardinality_ok());
        let tiny = crate::primes::GammaSet::window(20, 2.0, 19.0).unwrap();
        let pt = BoundParams::for_gamma(&tiny, 1.0, 1.0, 1.0, 0.25).unwrap();
        assert!(!pt.cardinality_ok());
        let single = crate::primes::GammaSet::window(100, 2.0, 2.0).unwrap();
        assert!(matches!(
            BoundParams::for_gamma(&single, 1.0, 1.0, 1.0, 0.25),
            Err(Error::RhoUndefined { .. })
        ));
    }
}
