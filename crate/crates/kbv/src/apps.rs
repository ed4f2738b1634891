//! Applications of the exact machinery: the distribution of the
//! prime-factor counting function with its Wasserstein distance to a
//! Gaussian, and Poisson approximation of the small-prime indicator
//! process.

use crate::bounds::chernoff_poisson_tail;
use crate::exact::exact_tv;
use crate::interval::{exp_interval, ratio, ratio_from_f64, ratio_int, QInterval, DEFAULT_BITS};
use crate::laws::{LawDescriptor, LawSpec, Verdict};
use crate::primes::{sieve_primes, GammaSet};
use crate::{Error, Limits, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use std::collections::BTreeMap;

const OMEGA_BLOCK: u64 = 1 << 18;

/// Exact distribution of the number of distinct prime divisors (optionally
/// restricted to a prime window) under a sampling law.
pub struct OmegaDistribution {
    pub n: u64,
    pub law: String,
    /// Prime bounds `[lo, hi]` when windowed; `None` counts all primes.
    pub window: Option<(f64, f64)>,
    pub masses: BTreeMap<u32, QInterval>,
    pub mean: QInterval,
    pub variance: QInterval,
}

impl OmegaDistribution {
    pub fn max_support(&self) -> u32 {
        self.masses.keys().last().copied().unwrap_or(0)
    }
}

/// Computes the exact law of the distinct-prime-divisor count via a sieve
/// pass over `[n]`: small primes are divided out blockwise, the surviving
/// cofactor (a prime above `sqrt(n)`, if any) supplies the last count.
pub fn omega_distribution(
    law: &LawSpec,
    window: Option<(f64, f64)>,
    limits: &Limits,
) -> Result<OmegaDistribution> {
    let n = law.n();
    if n > limits.max_n {
        return Err(Error::DenseLimit {
            n,
            limit: limits.max_n,
        });
    }
    let root = (n as f64).sqrt() as u64 + 1;
    let base = sieve_primes(root.min(n))?;
    let in_window = |p: u64| match window {
        None => true,
        Some((lo, hi)) => p as f64 >= lo && p as f64 <= hi,
    };

    let n_blocks = n.div_ceil(OMEGA_BLOCK);
    let acc_map = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * OMEGA_BLOCK + 1;
            let hi = ((b + 1) * OMEGA_BLOCK).min(n);
            let len = (hi - lo + 1) as usize;
            let mut rem: Vec<u64> = (lo..=hi).collect();
            let mut cnt = vec![0u8; len];
            for &p in &base {
                let counted = in_window(p);
                let mut j = lo.div_ceil(p) * p;
                while j <= hi {
                    let idx = (j - lo) as usize;
                    if counted {
                        cnt[idx] += 1;
                    }
                    while rem[idx].is_multiple_of(p) {
                        rem[idx] /= p;
                    }
                    j += p;
                }
            }
            let mut local: BTreeMap<u32, crate::laws::MassAcc> = BTreeMap::new();
            for idx in 0..len {
                let mut c = cnt[idx] as u32;
                if rem[idx] > 1 && in_window(rem[idx]) {
                    c += 1;
                }
                let acc = local.entry(c).or_insert_with(|| law.new_acc());
                law.acc_add(acc, lo + idx as u64);
            }
            local
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (key, acc) in b {
                match a.entry(key) {
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        LawSpec::acc_merge(e.get_mut(), acc)
                    }
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(acc);
                    }
                }
            }
            a
        });

    let masses: BTreeMap<u32, QInterval> = acc_map
        .into_iter()
        .map(|(j, acc)| (j, law.acc_mass(&acc)))
        .collect();

    let mut mean = QInterval::zero();
    let mut second = QInterval::zero();
    for (&j, mass) in &masses {
        mean = mean.add(&mass.mul_q(&ratio_int(j as u64)));
        second = second.add(&mass.mul_q(&ratio_int(j as u64 * j as u64)));
    }
    let variance = second.sub(&mean.mul(&mean));

    Ok(OmegaDistribution {
        n,
        law: law.label(),
        window,
        masses,
        mean,
        variance,
    })
}

/// Wasserstein-1 distance between a discrete distribution and a Gaussian,
/// through the CDF-difference integral with per-step closed forms. `atoms`
/// are `(position, mass)` pairs sorted by position with masses summing
/// to 1 (up to the `f64` rendering of exact masses).
pub fn w1_discrete_gaussian(atoms: &[(f64, f64)], mu: f64, sigma: f64) -> Result<f64> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::NonPositiveSigma { sigma });
    }
    if atoms.is_empty() {
        return Err(Error::ZeroMass);
    }
    debug_assert!(atoms.windows(2).all(|w| w[0].0 <= w[1].0));
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    let z = |x: f64| (x - mu) / sigma;
    // Antiderivative of the standard normal CDF.
    let anti = |t: f64| t * std.cdf(t) + std.pdf(t);

    let mut total = 0.0f64;
    // Left tail: integral of the Gaussian CDF up to the first atom.
    let z0 = z(atoms[0].0);
    total += sigma * anti(z0);
    // Right tail: integral of the survival function beyond the last atom.
    let zm = z(atoms[atoms.len() - 1].0);
    total += sigma * (std.pdf(zm) - zm * (1.0 - std.cdf(zm)));

    let mut cum = 0.0f64;
    for w in atoms.windows(2) {
        cum += w[0].1;
        let (a, b) = (w[0].0, w[1].0);
        let (za, zb) = (z(a), z(b));
        let (pa, pb) = (std.cdf(za), std.cdf(zb));
        let gauss_area = sigma * (anti(zb) - anti(za));
        let seg = if pa >= cum {
            gauss_area - cum * (b - a)
        } else if pb <= cum {
            cum * (b - a) - gauss_area
        } else {
            let zc = std.inverse_cdf(cum);
            let xc = mu + sigma * zc;
            (cum * (xc - a) - sigma * (anti(zc) - anti(za)))
                + (sigma * (anti(zb) - anti(zc)) - cum * (b - xc))
        };
        total += seg.max(0.0);
    }
    Ok(total)
}

/// Wasserstein-1 distance of an omega distribution to a Gaussian. With
/// `standardize` the atoms are mapped through `(j - mu) / sigma` and
/// compared with the standard Gaussian; otherwise the raw counts are
/// compared with `N(mu, sigma)`.
pub fn wasserstein_to_gaussian(
    dist: &OmegaDistribution,
    mu: f64,
    sigma: f64,
    standardize: bool,
) -> Result<f64> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::NonPositiveSigma { sigma });
    }
    let atoms: Vec<(f64, f64)> = dist
        .masses
        .iter()
        .map(|(&j, mass)| {
            let x = if standardize {
                (j as f64 - mu) / sigma
            } else {
                j as f64
            };
            (x, mass.to_f64())
        })
        .collect();
    if standardize {
        w1_discrete_gaussian(&atoms, 0.0, 1.0)
    } else {
        w1_discrete_gaussian(&atoms, mu, sigma)
    }
}

pub struct EkRow {
    pub n: u64,
    pub w1: f64,
    /// Reference rate `ln ln ln(n) / sqrt(ln ln n)`.
    pub ref_rate: f64,
    pub ratio: f64,
    /// Set when `ln ln n < 1`, where the standardization is meaningless.
    pub pre_asymptotic: bool,
    pub omega_mean: f64,
    pub omega_variance: f64,
}

pub struct EkTable {
    pub law: String,
    pub t: BigRational,
    pub kappa: BigRational,
    pub rows: Vec<EkRow>,
}

/// Runs the Gaussian-approximation experiment for the divisor-count law
/// across an `n` grid: certifies the hypothesis for each `n` (refusing on
/// failure), builds the exact omega distribution, standardizes by
/// `ln ln n` and `sqrt(ln ln n)`, and reports the Wasserstein distance with
/// its ratio to the reference rate.
pub fn erdos_kac_experiment(
    family: &LawDescriptor,
    n_grid: &[u64],
    t: &BigRational,
    kappa: &BigRational,
    limits: &Limits,
) -> Result<EkTable> {
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let law = family.build(n)?;
        let cert = law.certify_ht(t, kappa)?;
        if cert.holds != Verdict::Holds {
            return Err(Error::CertificationFailed {
                summary: format!(
                    "{} at n={n}: verdict {}, kappa required >= {:.6}",
                    cert.law,
                    cert.holds.as_str(),
                    cert.kappa_required.lo_f64()
                ),
            });
        }
        let dist = omega_distribution(&law, None, limits)?;
        let lnln = (n as f64).ln().ln();
        let pre_asymptotic = lnln < 1.0;
        let w1 = wasserstein_to_gaussian(&dist, lnln, lnln.sqrt(), true)?;
        let ref_rate = lnln.ln() / lnln.sqrt();
        let ratio = if pre_asymptotic { f64::NAN } else { w1 / ref_rate };
        rows.push(EkRow {
            n,
            w1,
            ref_rate,
            ratio,
            pre_asymptotic,
            omega_mean: dist.mean.to_f64(),
            omega_variance: dist.variance.to_f64(),
        });
    }
    Ok(EkTable {
        law: family.label(),
        t: t.clone(),
        kappa: kappa.clone(),
        rows,
    })
}

/// The indicator process of nontrivial multiplicities over the prime window
/// `[a_n, a_n^e]`, as atoms on `[0, 1]`: prime `p` sits at position
/// `ln(ln p / ln a_n)` with intensity `1/p`.
pub struct IndicatorProcessSpec {
    a_n: f64,
    primes: Vec<u64>,
    positions: Vec<f64>,
}

impl IndicatorProcessSpec {
    pub fn new(a_n: f64) -> Result<Self> {
        if a_n.is_nan() || a_n < 2.0 {
            return Err(Error::SmallIntensityBase { a_n });
        }
        let hi = a_n.powf(std::f64::consts::E);
        let primes: Vec<u64> = sieve_primes(hi.floor() as u64)?
            .into_iter()
            .filter(|&p| p as f64 >= a_n)
            .collect();
        let positions = primes
            .iter()
            .map(|&p| ((p as f64).ln() / a_n.ln()).ln().clamp(0.0, 1.0))
            .collect();
        Ok(IndicatorProcessSpec {
            a_n,
            primes,
            positions,
        })
    }

    pub fn a_n(&self) -> f64 {
        self.a_n
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Keeps only the first `k` atoms.
    pub fn truncated(&self, k: usize) -> Self {
        IndicatorProcessSpec {
            a_n: self.a_n,
            primes: self.primes.iter().take(k).copied().collect(),
            positions: self.positions.iter().take(k).copied().collect(),
        }
    }

    /// Atoms with position `<= time`, i.e. primes up to `a_n^(e^time)`.
    pub fn sub_window(&self, time: f64) -> &[u64] {
        let cut = self.positions.partition_point(|&t| t <= time);
        &self.primes[..cut]
    }

    /// The window as a prime set over `[n]` (primes above `n` dropped).
    pub fn gamma_for(&self, n: u64) -> Result<GammaSet> {
        GammaSet::from_primes(n, self.primes.iter().copied().filter(|&p| p <= n).collect())
    }
}

/// Exact pmf of a sum of independent Bernoulli variables.
pub fn poisson_binomial_pmf(probs: &[BigRational]) -> Vec<BigRational> {
    let mut pmf = vec![BigRational::one()];
    for p in probs {
        let q = BigRational::one() - p;
        let mut next = vec![BigRational::zero(); pmf.len() + 1];
        for (k, mass) in pmf.iter().enumerate() {
            next[k] += mass * &q;
            next[k + 1] += mass * p;
        }
        pmf = next;
    }
    pmf
}

/// Exact-enclosure TV between the Bernoulli-sum law and the Poisson law of
/// matching mean. The Poisson mass beyond the Bernoulli support is kept as
/// the exact complement of the partial sums, so no truncation error enters.
pub fn pb_poisson_tv(probs: &[BigRational], bits: u32) -> (QInterval, BigRational) {
    let lambda: BigRational = probs.iter().sum();
    let pmf = poisson_binomial_pmf(probs);
    if lambda.is_zero() {
        return (QInterval::zero(), lambda);
    }
    let e_neg = exp_interval(&-lambda.clone(), bits);
    let mut diff = QInterval::zero();
    let mut poisson_partial = QInterval::zero();
    let mut coeff = BigRational::one();
    for (k, pb_mass) in pmf.iter().enumerate() {
        if k > 0 {
            coeff = coeff * &lambda / BigRational::from_integer(BigInt::from(k));
        }
        let poi = e_neg.mul_q(&coeff);
        poisson_partial = poisson_partial.add(&poi);
        diff = diff.add(&poi.add_q(&-pb_mass.clone()).abs());
    }
    let escaped = QInterval::one().sub(&poisson_partial);
    let tv = diff.add(&escaped).mul_q(&ratio(1, 2));
    (tv, lambda)
}

/// Marginal comparison at a fixed time: indicator-sum law versus the
/// Poisson law of the same intensity, with the quadratic intensity sum and
/// the crude `2 / a_n` cap.
pub struct MarginalPoisson {
    pub time: f64,
    pub window: Vec<u64>,
    pub tv: QInterval,
    pub lambda: BigRational,
    /// Sum of squared intensities, the independent-coupling bound.
    pub lecam: BigRational,
    pub two_over_an: f64,
}

impl MarginalPoisson {
    /// The inequality chain `tv <= lecam <= 2/a_n`, certified; returns the
    /// names of any links that fail.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.tv.certainly_le_q(&self.lecam) {
            out.push("marginal TV exceeds the quadratic intensity sum".to_string());
        }
        let cap = ratio_from_f64(self.two_over_an).expect("finite 2/a_n");
        if self.lecam > cap {
            out.push("quadratic intensity sum exceeds 2/a_n".to_string());
        }
        out
    }
}

pub fn poisson_marginal_tv(
    spec: &IndicatorProcessSpec,
    time: f64,
    limits: &Limits,
) -> Result<MarginalPoisson> {
    if !(0.0..=1.0).contains(&time) {
        return Err(Error::BadProcessTime { t: time });
    }
    let window = spec.sub_window(time);
    if window.len() > limits.max_gamma {
        return Err(Error::WindowTooLarge {
            size: window.len(),
            limit: limits.max_gamma,
        });
    }
    let probs: Vec<BigRational> = window.iter().map(|&p| ratio(1, p)).collect();
    let (tv, lambda) = pb_poisson_tv(&probs, DEFAULT_BITS);
    let lecam: BigRational = window.iter().map(|&p| ratio(1, p * p)).sum();
    Ok(MarginalPoisson {
        time,
        window: window.to_vec(),
        tv,
        lambda,
        lecam,
        two_over_an: 2.0 / spec.a_n,
    })
}

/// Process-level bound report: exact TV between the multiplicity laws over
/// the window, the coordinatewise Bernoulli-vs-Poisson sum, and the
/// combined right-hand side `TV + 2/a_n`.
pub struct ProcessBound {
    pub a_n: f64,
    pub window: Vec<u64>,
    pub tv_vg: QInterval,
    pub coordwise_sum: QInterval,
    pub two_over_an: f64,
    pub rhs: QInterval,
}

pub fn poisson_process_bound(
    spec: &IndicatorProcessSpec,
    law: &LawSpec,
    limits: &Limits,
) -> Result<ProcessBound> {
    let gamma = spec.gamma_for(law.n())?;
    if gamma.len() > limits.max_gamma {
        return Err(Error::WindowTooLarge {
            size: gamma.len(),
            limit: limits.max_gamma,
        });
    }
    let tv_vg = exact_tv(law, &gamma, limits)?;
    let mut coordwise = QInterval::zero();
    for &p in gamma.primes() {
        let (tv_p, _) = pb_poisson_tv(&[ratio(1, p)], DEFAULT_BITS);
        coordwise = coordwise.add(&tv_p);
    }
    let two = ratio_from_f64(2.0 / spec.a_n).expect("finite 2/a_n");
    let rhs = tv_vg.add_q(&two);
    Ok(ProcessBound {
        a_n: spec.a_n,
        window: gamma.primes().to_vec(),
        tv_vg,
        coordwise_sum: coordwise,
        two_over_an: 2.0 / spec.a_n,
        rhs,
    })
}

/// Smallest truncation point whose Poisson tail bound drops below the
/// target; the certified cut for float-mode Poisson summation.
pub fn poisson_truncation_point(lambda: f64, target: f64) -> u64 {
    let mut x = lambda.ceil().max(1.0) as u64 + 1;
    loop {
        if let Ok(b) = chernoff_poisson_tail(lambda, x as f64) {
            if b < target {
                return x;
            }
        }
        x += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::parse_rational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn omega_uniform_10() {
        let law = LawSpec::uniform(10).unwrap();
        let dist = omega_distribution(&law, None, &Limits::default()).unwrap();
        assert_eq!(dist.masses[&0].as_exact(), Some(&q(1, 10)));
        assert_eq!(dist.masses[&1].as_exact(), Some(&q(7, 10)));
        assert_eq!(dist.masses[&2].as_exact(), Some(&q(2, 10)));
        assert_eq!(dist.mean.as_exact(), Some(&q(11, 10)));
        let total = QInterval::sum(dist.masses.values());
        assert_eq!(total.as_exact(), Some(&q(1, 1)));
    }

    #[test]
    fn omega_uniform_2_and_windowed() {
        let law = LawSpec::uniform(2).unwrap();
        let dist = omega_distribution(&law, None, &Limits::default()).unwrap();
        assert_eq!(dist.masses[&0].as_exact(), Some(&q(1, 2)));
        assert_eq!(dist.masses[&1].as_exact(), Some(&q(1, 2)));

        // Window {p <= 2} over n = 10: the law of the parity indicator.
        let law10 = LawSpec::uniform(10).unwrap();
        let dist = omega_distribution(&law10, Some((2.0, 2.0)), &Limits::default()).unwrap();
        assert_eq!(dist.masses[&0].as_exact(), Some(&q(1, 2)));
        assert_eq!(dist.masses[&1].as_exact(), Some(&q(1, 2)));
    }

    #[test]
    fn omega_support_bounded_by_log2() {
        let law = LawSpec::uniform(100_000).unwrap();
        let dist = omega_distribution(&law, None, &Limits::default()).unwrap();
        assert!(dist.max_support() as f64 <= (100_000f64).ln() / 2f64.ln());
        // 2*3*5*7*11*13 = 30030 <= 1e5 < 2*3*...*17, so max omega is 6.
        assert_eq!(dist.max_support(), 6);
    }

    #[test]
    fn omega_mean_matches_divisor_probability_sum() {
        // Linearity of expectation through an independent path.
        for law in [
            LawSpec::uniform(1000).unwrap(),
            LawSpec::density(300, ratio_int, "k").unwrap(),
        ] {
            let n = law.n();
            let dist = omega_distribution(&law, None, &Limits::default()).unwrap();
            let mut expect = QInterval::zero();
            for p in sieve_primes(n).unwrap() {
                expect = expect.add(&law.divisor_probability(p));
            }
            assert_eq!(dist.mean.as_exact(), expect.as_exact());
        }
    }

    #[test]
    fn w1_point_mass_closed_form() {
        // W1(point at mu, N(mu, sigma)) = sigma * sqrt(2/pi).
        let truth = (2.0 / std::f64::consts::PI).sqrt();
        for sigma in [1.0, 0.25, 3.5] {
            let w = w1_discrete_gaussian(&[(0.7, 1.0)], 0.7, sigma).unwrap();
            assert!(
                (w - sigma * truth).abs() < 1e-10,
                "sigma={sigma}: {w} vs {}",
                sigma * truth
            );
        }
    }

    #[test]
    fn w1_point_mass_shrinks_with_sigma() {
        let mut prev = f64::INFINITY;
        for sigma in [2.0, 1.0, 0.5, 0.25, 0.125] {
            let w = w1_discrete_gaussian(&[(0.0, 1.0)], 0.0, sigma).unwrap();
            assert!(w < prev);
            prev = w;
        }
    }

    #[test]
    fn w1_fine_discretization_stays_below_step() {
        // Cell-mass discretization of N(0,1) on [-8, 8] with step h has
        // W1 at most h (coupling within cells plus negligible tails).
        let std = Normal::new(0.0, 1.0).unwrap();
        let h = 0.01;
        let mut atoms = Vec::new();
        let mut x = -8.0;
        while x < 8.0 {
            let mass = std.cdf(x + h) - std.cdf(x);
            atoms.push((x + h / 2.0, mass));
            x += h;
        }
        let tail = std.cdf(-8.0);
        atoms.first_mut().unwrap().1 += tail;
        atoms.last_mut().unwrap().1 += tail;
        let w = w1_discrete_gaussian(&atoms, 0.0, 1.0).unwrap();
        assert!(w <= h, "w1 = {w}");
    }

    #[test]
    fn w1_affine_invariance() {
        let atoms: Vec<(f64, f64)> = vec![(0.0, 0.3), (1.0, 0.45), (3.0, 0.25)];
        let (mu, sigma) = (1.2, 0.8);
        let direct = w1_discrete_gaussian(&atoms, mu, sigma).unwrap();
        let standardized: Vec<(f64, f64)> = atoms
            .iter()
            .map(|&(x, m)| ((x - mu) / sigma, m))
            .collect();
        let via_std = w1_discrete_gaussian(&standardized, 0.0, 1.0).unwrap();
        assert!((direct - sigma * via_std).abs() < 1e-10);
    }

    #[test]
    fn w1_rejects_bad_sigma() {
        assert!(w1_discrete_gaussian(&[(0.0, 1.0)], 0.0, 0.0).is_err());
        assert!(w1_discrete_gaussian(&[], 0.0, 1.0).is_err());
    }

    #[test]
    fn erdos_kac_rows_and_refusal() {
        let limits = Limits::default();
        let table = erdos_kac_experiment(
            &LawDescriptor::Uniform,
            &[100, 1000, 10_000],
            &BigRational::one(),
            &BigRational::one(),
            &limits,
        )
        .unwrap();
        assert_eq!(table.rows.len(), 3);
        for row in &table.rows {
            assert!(row.w1.is_finite() && row.w1 > 0.0);
            assert!(!row.pre_asymptotic);
        }

        // A heavy-tailed law cannot satisfy the hypothesis at t = 1 with
        // kappa = 1: the experiment must refuse with the certificate.
        let refused = erdos_kac_experiment(
            &LawDescriptor::Pareto {
                s: parse_rational("1/2").unwrap(),
            },
            &[1000],
            &BigRational::one(),
            &BigRational::one(),
            &limits,
        );
        assert!(matches!(refused, Err(Error::CertificationFailed { .. })));
    }

    #[test]
    fn erdos_kac_flags_pre_asymptotic_rows() {
        let table = erdos_kac_experiment(
            &LawDescriptor::Uniform,
            &[3, 10],
            &BigRational::one(),
            &BigRational::one(),
            &Limits::default(),
        )
        .unwrap();
        assert!(table.rows[0].pre_asymptotic);
        assert!(table.rows[0].ratio.is_nan());
        assert!(table.rows[1].pre_asymptotic); // ln ln 10 < 1
    }

    #[test]
    fn process_spec_atoms() {
        let spec = IndicatorProcessSpec::new(10.0).unwrap();
        // Window [10, 10^e]: starts at 11, ends below 523.
        assert_eq!(spec.primes().first(), Some(&11));
        assert!(*spec.primes().last().unwrap() <= 522);
        assert!(spec
            .positions()
            .windows(2)
            .all(|w| w[0] <= w[1]));
        assert!(spec.positions().iter().all(|&t| (0.0..=1.0).contains(&t)));
        // Intensities 1/p in (0, 1/2].
        assert!(spec.primes().iter().all(|&p| p >= 2));
        assert!(IndicatorProcessSpec::new(1.5).is_err());

        // sub_window at time 0 keeps only primes at position 0.
        let full = spec.sub_window(1.0);
        assert_eq!(full.len(), spec.primes().len());
        let half = spec.sub_window(0.5);
        assert!(half.len() < full.len());
        // a^(e^0.5) = 10^1.6487 = 44.5.
        assert!(half.iter().all(|&p| (p as f64) < 45.0));
    }

    #[test]
    fn pb_pmf_exact() {
        let pmf = poisson_binomial_pmf(&[q(1, 2), q(1, 3)]);
        assert_eq!(pmf[0], q(1, 3));
        assert_eq!(pmf[1], q(1, 2));
        assert_eq!(pmf[2], q(1, 6));
        let total: BigRational = pmf.iter().sum();
        assert!(total.is_one());
    }

    #[test]
    fn single_bernoulli_poisson_tv_frozen() {
        // Bern(1/2) against Poisson(1/2): frozen from direct evaluation.
        let (tv, lambda) = pb_poisson_tv(&[q(1, 2)], 160);
        assert_eq!(lambda, q(1, 2));
        let truth = 0.196_734_670_143_683_3;
        assert!(tv.lo_f64() <= truth && truth <= tv.hi_f64());
        assert!(tv.hi_f64() - tv.lo_f64() < 1e-40);
    }

    #[test]
    fn marginal_chain_small_windows() {
        let limits = Limits::default();
        let spec = IndicatorProcessSpec::new(10.0).unwrap().truncated(16);
        let marginal = poisson_marginal_tv(&spec, 1.0, &limits).unwrap();
        assert!(marginal.violations().is_empty());
        assert!(marginal.tv.certainly_le_q(&marginal.lecam));

        // Empty window at time where no primes have entered: a_n = 100,
        // truncated to zero atoms.
        let empty = IndicatorProcessSpec::new(100.0).unwrap().truncated(0);
        let m = poisson_marginal_tv(&empty, 1.0, &limits).unwrap();
        assert_eq!(m.tv.as_exact(), Some(&q(0, 1)));
        assert_eq!(m.lecam, q(0, 1));
    }

    #[test]
    fn marginal_window_3_5_le_cam() {
        // Window {3, 5}: TV <= 1/9 + 1/25 = 34/225.
        let spec = IndicatorProcessSpec {
            a_n: 3.0,
            primes: vec![3, 5],
            positions: vec![0.0, 0.5],
        };
        let m = poisson_marginal_tv(&spec, 1.0, &Limits::default()).unwrap();
        assert_eq!(m.lecam, q(34, 225));
        assert!(m.tv.certainly_le_q(&m.lecam));
        assert!(m.violations().is_empty());
    }

    #[test]
    fn marginal_rejects_oversized_window() {
        let spec = IndicatorProcessSpec::new(10.0).unwrap();
        assert!(matches!(
            poisson_marginal_tv(&spec, 1.0, &Limits::default()),
            Err(Error::WindowTooLarge { .. })
        ));
        assert!(matches!(
            poisson_marginal_tv(&spec, 1.5, &Limits::default()),
            Err(Error::BadProcessTime { .. })
        ));
    }

    #[test]
    fn process_bound_components() {
        let limits = Limits::default();
        let spec = IndicatorProcessSpec::new(10.0).unwrap().truncated(8);
        let law = LawSpec::uniform(10_000).unwrap();
        let report = poisson_process_bound(&spec, &law, &limits).unwrap();
        assert!((report.two_over_an - 0.2).abs() < 1e-15);
        // The combined bound dominates each of its two summands.
        assert!(report.tv_vg.certainly_le(&report.rhs));
        let two = ratio_from_f64(0.2).unwrap();
        assert!(report.rhs.certainly_ge_q(&two));

        // Empty window: only the 2/a_n term remains.
        let empty = IndicatorProcessSpec::new(10.0).unwrap().truncated(0);
        let r = poisson_process_bound(&empty, &law, &limits).unwrap();
        assert_eq!(r.tv_vg.as_exact(), Some(&q(0, 1)));
        assert!(r.rhs.contains(&two));
    }

    #[test]
    fn truncation_point_is_certified() {
        let t = poisson_truncation_point(2.0, 1e-30);
        let bound = chernoff_poisson_tail(2.0, t as f64).unwrap();
        assert!(bound < 1e-30);
        assert!(chernoff_poisson_tail(2.0, (t - 1) as f64).unwrap() >= 1e-30);
    }
}
