//! The brute-force oracle: exact joint laws of multiplicity vectors, exact
//! total variation against the independent geometric product law, the
//! three-way partitioned TV sums, and truncated inclusion-exclusion
//! sandwiches.
//!
//! Everything here enumerates; nothing here estimates. The enumeration over
//! `[n]` is partitioned across workers and merged with exact arithmetic, so
//! results are independent of scheduling.

use crate::interval::{ratio, QInterval};
use crate::laws::{LawSpec, MassAcc};
use crate::primes::GammaSet;
use crate::{Error, Limits, Result};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashMap};

const ENUM_BLOCK: u64 = 1 << 16;

/// A finitely supported multiplicity assignment on a prime window, stored
/// padded to the window order; zero entries mean "absent". Ordering is
/// lexicographic in the padded form, which fixes iteration order everywhere.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct MultiplicityVector {
    mults: Vec<u32>,
}

impl MultiplicityVector {
    pub fn empty(window_len: usize) -> Self {
        MultiplicityVector {
            mults: vec![0; window_len],
        }
    }

    pub fn from_padded(mults: Vec<u32>) -> Self {
        MultiplicityVector { mults }
    }

    /// Builds from `(prime, multiplicity)` pairs over the window; zero
    /// multiplicities are dropped, unknown primes and duplicates rejected.
    pub fn from_pairs(gamma: &GammaSet, pairs: &[(u64, u32)]) -> Result<Self> {
        let mut mults = vec![0u32; gamma.len()];
        for &(p, m) in pairs {
            if m == 0 {
                continue;
            }
            let idx = gamma
                .primes()
                .binary_search(&p)
                .map_err(|_| Error::SupportMismatch)?;
            if mults[idx] != 0 {
                return Err(Error::SupportMismatch);
            }
            mults[idx] = m;
        }
        Ok(MultiplicityVector { mults })
    }

    pub fn mults(&self) -> &[u32] {
        &self.mults
    }

    /// `|D|`: number of primes with positive multiplicity.
    pub fn support_size(&self) -> u32 {
        self.mults.iter().filter(|&&m| m > 0).count() as u32
    }

    /// `|m|`: total multiplicity.
    pub fn total(&self) -> u32 {
        self.mults.iter().sum()
    }

    pub fn support_primes(&self, gamma: &GammaSet) -> Vec<u64> {
        self.mults
            .iter()
            .zip(gamma.primes())
            .filter(|(&m, _)| m > 0)
            .map(|(_, &p)| p)
            .collect()
    }

    pub fn entries(&self, gamma: &GammaSet) -> Vec<(u64, u32)> {
        self.mults
            .iter()
            .zip(gamma.primes())
            .filter(|(&m, _)| m > 0)
            .map(|(&m, &p)| (p, m))
            .collect()
    }

    /// Product of the support primes (1 for empty support).
    pub fn p_d(&self, gamma: &GammaSet) -> BigUint {
        let mut prod = BigUint::one();
        for (&m, &p) in self.mults.iter().zip(gamma.primes()) {
            if m > 0 {
                prod *= p;
            }
        }
        prod
    }

    /// Product of `p^(m_p)` over the support (1 for empty support).
    pub fn p_d_m(&self, gamma: &GammaSet) -> BigUint {
        let mut prod = BigUint::one();
        for (&m, &p) in self.mults.iter().zip(gamma.primes()) {
            if m > 0 {
                prod *= BigUint::from(p).pow(m);
            }
        }
        prod
    }
}

/// Exact joint law of the multiplicity vector over a prime window.
pub struct JointLaw {
    gamma: GammaSet,
    classes: BTreeMap<MultiplicityVector, QInterval>,
}

impl JointLaw {
    pub fn gamma(&self) -> &GammaSet {
        &self.gamma
    }

    pub fn classes(&self) -> impl Iterator<Item = (&MultiplicityVector, &QInterval)> {
        self.classes.iter()
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Probability of an exact multiplicity configuration (zero off-support).
    pub fn event_prob(&self, m: &MultiplicityVector) -> QInterval {
        self.classes.get(m).cloned().unwrap_or_else(QInterval::zero)
    }

    /// Total mass across all classes; exactly 1 for exact laws.
    pub fn total_mass(&self) -> QInterval {
        QInterval::sum(self.classes.values())
    }
}

/// Enumerates `k in [n]`, maps each to its multiplicity vector on the
/// window, and accumulates exact masses per class.
pub fn joint_v_law(law: &LawSpec, gamma: &GammaSet, limits: &Limits) -> Result<JointLaw> {
    if law.n() != gamma.n() {
        return Err(Error::GammaMismatch {
            law_n: law.n(),
            gamma_n: gamma.n(),
        });
    }
    if gamma.len() > limits.max_gamma {
        return Err(Error::GammaTooLarge {
            size: gamma.len(),
            limit: limits.max_gamma,
        });
    }
    if law.n() > limits.max_n {
        return Err(Error::DenseLimit {
            n: law.n(),
            limit: limits.max_n,
        });
    }

    let n = law.n();
    let primes = gamma.primes();
    let n_blocks = n.div_ceil(ENUM_BLOCK);
    let acc_map = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * ENUM_BLOCK + 1;
            let hi = ((b + 1) * ENUM_BLOCK).min(n);
            let mut local: BTreeMap<Vec<u32>, MassAcc> = BTreeMap::new();
            let mut scratch = vec![0u32; primes.len()];
            for k in lo..=hi {
                for (slot, &p) in scratch.iter_mut().zip(primes) {
                    *slot = 0;
                    if p > k {
                        continue;
                    }
                    let mut rem = k;
                    while rem % p == 0 {
                        rem /= p;
                        *slot += 1;
                    }
                }
                match local.get_mut(scratch.as_slice()) {
                    Some(acc) => law.acc_add(acc, k),
                    None => {
                        let mut acc = law.new_acc();
                        law.acc_add(&mut acc, k);
                        local.insert(scratch.clone(), acc);
                    }
                }
            }
            local
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (key, acc) in b {
                match a.entry(key) {
                    Entry::Occupied(mut e) => LawSpec::acc_merge(e.get_mut(), acc),
                    Entry::Vacant(e) => {
                        e.insert(acc);
                    }
                }
            }
            a
        });

    let classes = acc_map
        .into_iter()
        .map(|(mults, acc)| (MultiplicityVector::from_padded(mults), law.acc_mass(&acc)))
        .collect();
    Ok(JointLaw {
        gamma: gamma.clone(),
        classes,
    })
}

/// Mass the independent geometric product law assigns to an exact
/// configuration: `prod_{p in D} p^{-m_p} (1 - 1/p) * prod_{q not in D}
/// (1 - 1/q)`.
pub fn geometric_mass(gamma: &GammaSet, m: &MultiplicityVector) -> BigRational {
    assert_eq!(m.mults().len(), gamma.len(), "vector/window length mismatch");
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for (&mult, &p) in m.mults().iter().zip(gamma.primes()) {
        num *= p - 1;
        den *= BigUint::from(p).pow(mult + 1);
    }
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact TV distance between the joint multiplicity law and the geometric
/// product law: half the on-support L1 difference plus half the geometric
/// mass escaping the support.
pub fn exact_tv(law: &LawSpec, gamma: &GammaSet, limits: &Limits) -> Result<QInterval> {
    let joint = joint_v_law(law, gamma, limits)?;
    Ok(exact_tv_from_joint(&joint))
}

pub fn exact_tv_from_joint(joint: &JointLaw) -> QInterval {
    let mut diff = QInterval::zero();
    let mut g_in_support = BigRational::zero();
    for (m, pv) in joint.classes() {
        let pg = geometric_mass(&joint.gamma, m);
        diff = diff.add(&pv.add_q(&-pg.clone()).abs());
        g_in_support += pg;
    }
    let escaped = BigRational::one() - g_in_support;
    diff.add_q(&escaped).mul_q(&ratio(1, 2))
}

fn check_support(gamma: &GammaSet, d: &[u64], m: &MultiplicityVector) -> Result<()> {
    let declared: BTreeSet<u64> = d.iter().copied().collect();
    if declared.len() != d.len() {
        return Err(Error::SupportMismatch);
    }
    let actual: BTreeSet<u64> = m.support_primes(gamma).into_iter().collect();
    if declared != actual {
        return Err(Error::SupportMismatch);
    }
    Ok(())
}

/// `P[v_p = m_p for p in D, v_q = 0 for q outside D]` by exact enumeration.
/// The divisor set `d` must equal the support of `m`.
pub fn event_prob_a(
    law: &LawSpec,
    gamma: &GammaSet,
    d: &[u64],
    m: &MultiplicityVector,
    limits: &Limits,
) -> Result<QInterval> {
    check_support(gamma, d, m)?;
    let joint = joint_v_law(law, gamma, limits)?;
    Ok(joint.event_prob(m))
}

/// Geometric analogue of [`event_prob_a`]. Returns the closed-form product
/// and, for windows of at most 16 primes, cross-checks it against the
/// alternating inclusion-exclusion sum.
pub fn event_prob_a_tilde(
    gamma: &GammaSet,
    d: &[u64],
    m: &MultiplicityVector,
) -> Result<BigRational> {
    check_support(gamma, d, m)?;
    let closed = geometric_mass(gamma, m);
    if gamma.len() <= 16 {
        let pdm = m.p_d_m(gamma);
        let products = SubsetProducts::new(gamma);
        let mut alternating = BigRational::zero();
        for mask in 0..products.len() {
            let term = BigRational::new(
                BigInt::one(),
                BigInt::from(&pdm * products.product(mask)),
            );
            if products.popcount(mask).is_multiple_of(2) {
                alternating += term;
            } else {
                alternating -= term;
            }
        }
        assert_eq!(
            closed, alternating,
            "geometric closed form disagrees with inclusion-exclusion"
        );
    }
    Ok(closed)
}

/// Which of the three disjoint summation regimes a configuration falls in.
/// Regime 1 claims `|D| >= alpha`; regime 2 the remainder with
/// `|m| >= beta`; regime 3 the rest, making the three sums exactly additive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    ManyDivisors,
    HighMultiplicity,
    Small,
}

pub fn regime_of(support: u32, total: u32, alpha: f64, beta: f64) -> Regime {
    if support as f64 >= alpha {
        Regime::ManyDivisors
    } else if total as f64 >= beta {
        Regime::HighMultiplicity
    } else {
        Regime::Small
    }
}

/// The three-way partitioned TV sums.
pub struct TvPartition {
    pub alpha: f64,
    pub beta: f64,
    /// Sum over `|D| >= alpha`.
    pub s_many: QInterval,
    /// Sum over `|D| < alpha`, `|m| >= beta`.
    pub s_high: QInterval,
    /// Sum over `|D| < alpha`, `|m| < beta`.
    pub s_small: QInterval,
    /// Exact TV of the same pair; `s_many + s_high + s_small == 2 * tv`.
    pub tv: QInterval,
}

impl TvPartition {
    pub fn total(&self) -> QInterval {
        self.s_many.add(&self.s_high).add(&self.s_small)
    }
}

/// Splits the doubled TV sum `sum_{D,m} |P[A] - P[A~]|` into the three
/// regimes. The geometric mass over the infinite off-support range is
/// computed by exact dynamic programming per regime, with tails beyond the
/// thresholds pooled in closed form, so no truncation error enters.
pub fn partitioned_tv(
    law: &LawSpec,
    gamma: &GammaSet,
    alpha: f64,
    beta: f64,
    limits: &Limits,
) -> Result<TvPartition> {
    if alpha.is_nan() || beta.is_nan() || alpha < 0.0 || beta < 0.0 || alpha.is_infinite() {
        return Err(Error::BadPartitionThresholds { alpha, beta });
    }
    let joint = joint_v_law(law, gamma, limits)?;
    let glen = gamma.len();

    // Smallest integer thresholds equivalent to the real ones.
    let a_cap = (0..=glen as u32 + 1)
        .find(|&c| c as f64 >= alpha)
        .unwrap_or(glen as u32 + 1);
    let b_cap = if beta.is_infinite() {
        None
    } else {
        Some((0u32..).find(|&s| s as f64 >= beta).unwrap())
    };

    let totals = geometric_regime_totals(gamma, a_cap, b_cap);

    let mut sup_diff = [QInterval::zero(), QInterval::zero(), QInterval::zero()];
    let mut sup_geo = [
        BigRational::zero(),
        BigRational::zero(),
        BigRational::zero(),
    ];
    for (m, pv) in joint.classes() {
        let pg = geometric_mass(gamma, m);
        let idx = regime_index(regime_of(m.support_size(), m.total(), alpha, beta));
        sup_diff[idx] = sup_diff[idx].add(&pv.add_q(&-pg.clone()).abs());
        sup_geo[idx] += pg;
    }

    let piece = |idx: usize| -> QInterval {
        // Off-support configurations contribute their full geometric mass.
        sup_diff[idx].add_q(&(&totals[idx] - &sup_geo[idx]))
    };
    Ok(TvPartition {
        alpha,
        beta,
        s_many: piece(0),
        s_high: piece(1),
        s_small: piece(2),
        tv: exact_tv_from_joint(&joint),
    })
}

fn regime_index(r: Regime) -> usize {
    match r {
        Regime::ManyDivisors => 0,
        Regime::HighMultiplicity => 1,
        Regime::Small => 2,
    }
}

/// Total geometric mass per regime, via a DP over the window primes with
/// support count capped at `a_cap` and total multiplicity capped at `b_cap`.
/// Pooled transitions use the exact geometric tail `P[g_p >= K] = p^-K`.
fn geometric_regime_totals(
    gamma: &GammaSet,
    a_cap: u32,
    b_cap: Option<u32>,
) -> [BigRational; 3] {
    let c_dim = a_cap as usize + 1;
    let s_dim = b_cap.map_or(1, |b| b as usize + 1);
    let mut dp = vec![vec![BigRational::zero(); s_dim]; c_dim];
    dp[0][0] = BigRational::one();

    for &p in gamma.primes() {
        let skip_factor = ratio(p - 1, p);
        let mut next = vec![vec![BigRational::zero(); s_dim]; c_dim];
        for (c, row) in dp.iter().enumerate() {
            for (s, mass) in row.iter().enumerate() {
                if mass.is_zero() {
                    continue;
                }
                next[c][s] += mass * &skip_factor;
                let c2 = (c + 1).min(a_cap as usize);
                match b_cap {
                    None => {
                        // Full geometric selection mass: sum_{m>=1} = 1/p.
                        next[c2][s] += mass * ratio(1, p);
                    }
                    Some(bc) => {
                        let pool_at = if s >= bc as usize { 1 } else { bc as usize - s };
                        for mult in 1..pool_at {
                            let w = BigRational::new(
                                BigInt::from(p - 1),
                                BigInt::from(BigUint::from(p).pow(mult as u32 + 1)),
                            );
                            next[c2][s + mult] += mass * w;
                        }
                        let tail = BigRational::new(
                            BigInt::one(),
                            BigInt::from(BigUint::from(p).pow(pool_at as u32)),
                        );
                        next[c2][(s + pool_at).min(bc as usize)] += mass * tail;
                    }
                }
            }
        }
        dp = next;
    }

    let mut totals = [
        BigRational::zero(),
        BigRational::zero(),
        BigRational::zero(),
    ];
    for (c, row) in dp.iter().enumerate() {
        for (s, mass) in row.iter().enumerate() {
            let idx = if c == a_cap as usize {
                0
            } else if b_cap.is_some_and(|bc| s == bc as usize) {
                1
            } else {
                2
            };
            totals[idx] += mass;
        }
    }
    totals
}

/// Subset products `p_I` for every `I` within a window, indexed by bitmask.
pub struct SubsetProducts {
    products: Vec<BigUint>,
}

impl SubsetProducts {
    pub fn new(gamma: &GammaSet) -> Self {
        assert!(gamma.len() <= 20, "subset enumeration beyond 2^20");
        let mut products = vec![BigUint::one(); 1usize << gamma.len()];
        for mask in 1..products.len() {
            let low = mask.trailing_zeros() as usize;
            let rest = mask & (mask - 1);
            products[mask] = &products[rest] * gamma.primes()[low];
        }
        SubsetProducts { products }
    }

    pub fn len(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn product(&self, mask: usize) -> &BigUint {
        &self.products[mask]
    }

    pub fn popcount(&self, mask: usize) -> u32 {
        mask.count_ones()
    }
}

/// Memo for divisor probabilities, shared across sandwich evaluations of a
/// fixed law.
#[derive(Default)]
pub struct DivisorCache {
    map: HashMap<u64, QInterval>,
}

/// Tier sums for truncated inclusion-exclusion around a fixed divisor
/// `pdm`: for each level `i`, the sums over `|I| = i` of `P[pdm * p_I | J]`
/// and of `1 / (pdm * p_I)`.
pub fn tiers_for_divisor(
    law: &LawSpec,
    gamma: &GammaSet,
    pdm: &BigUint,
    products: &SubsetProducts,
    max_level: usize,
    cache: &mut DivisorCache,
) -> (Vec<QInterval>, Vec<BigRational>) {
    let levels = max_level.min(gamma.len()) + 1;
    let mut tv = vec![QInterval::zero(); levels];
    let mut tg = vec![BigRational::zero(); levels];
    let n_big = BigUint::from(law.n());
    for mask in 0..products.len() {
        let level = products.popcount(mask) as usize;
        if level >= levels {
            continue;
        }
        let divisor = pdm * products.product(mask);
        if divisor <= n_big {
            let d64 = divisor.to_u64().expect("divisor fits u64 when <= n");
            let p = cache
                .map
                .entry(d64)
                .or_insert_with(|| law.divisor_probability(d64))
                .clone();
            tv[level] = tv[level].add(&p);
        }
        tg[level] += BigRational::new(BigInt::one(), BigInt::from(divisor));
    }
    (tv, tg)
}

/// Alternating partial sums of the sandwich at odd truncation order
/// `gamma_trunc`, for both the sampled law and the geometric law.
pub struct BonferroniSandwich {
    pub gamma_trunc: u32,
    /// Lower Bonferroni bound for `P[A(D, m)]` (levels up to `gamma_trunc`).
    pub lower: QInterval,
    /// Upper bound (levels up to `gamma_trunc + 1`).
    pub upper: QInterval,
    pub geo_lower: BigRational,
    pub geo_upper: BigRational,
}

pub fn bonferroni_partial_sums(
    law: &LawSpec,
    gamma: &GammaSet,
    d: &[u64],
    m: &MultiplicityVector,
    gamma_trunc: u32,
) -> Result<BonferroniSandwich> {
    if gamma_trunc.is_multiple_of(2) || gamma_trunc == 0 || gamma_trunc as usize > gamma.len() {
        return Err(Error::BadTruncationOrder {
            gamma: gamma_trunc,
            size: gamma.len(),
        });
    }
    check_support(gamma, d, m)?;
    let products = SubsetProducts::new(gamma);
    let mut cache = DivisorCache::default();
    let pdm = m.p_d_m(gamma);
    let (tv, tg) = tiers_for_divisor(
        law,
        gamma,
        &pdm,
        &products,
        gamma_trunc as usize + 1,
        &mut cache,
    );
    Ok(sandwich_from_tiers(&tv, &tg, gamma_trunc))
}

/// Assembles alternating partial sums from precomputed tier sums.
pub fn sandwich_from_tiers(
    tv: &[QInterval],
    tg: &[BigRational],
    gamma_trunc: u32,
) -> BonferroniSandwich {
    let alt_v = |levels: usize| -> QInterval {
        let mut acc = QInterval::zero();
        for (i, t) in tv.iter().enumerate().take(levels + 1) {
            acc = if i % 2 == 0 { acc.add(t) } else { acc.sub(t) };
        }
        acc
    };
    let alt_g = |levels: usize| -> BigRational {
        let mut acc = BigRational::zero();
        for (i, t) in tg.iter().enumerate().take(levels + 1) {
            if i % 2 == 0 {
                acc += t;
            } else {
                acc -= t;
            }
        }
        acc
    };
    let g = gamma_trunc as usize;
    BonferroniSandwich {
        gamma_trunc,
        lower: alt_v(g),
        upper: alt_v(g + 1),
        geo_lower: alt_g(g),
        geo_upper: alt_g(g + 1),
    }
}

/// Floating-point TV for configurations beyond the exact-mode limits:
/// same enumeration, compensated (Kahan) summation, sequential and thus
/// deterministic. Never used by the verification suites.
pub fn float_tv(law: &crate::laws::LawDescriptor, n: u64, gamma: &GammaSet) -> Result<f64> {
    use crate::laws::LawDescriptor;
    let weight: Box<dyn Fn(u64) -> f64> = match law {
        LawDescriptor::Uniform => Box::new(|_| 1.0),
        LawDescriptor::Pareto { s } => {
            let s = crate::interval::ratio_to_f64(s);
            Box::new(move |k| (k as f64).powf(-s))
        }
        LawDescriptor::Density { upsilon } => match upsilon.as_str() {
            "k" => Box::new(|k| k as f64),
            "k^2" => Box::new(|k| (k as f64) * (k as f64)),
            "1/k" => Box::new(|k| 1.0 / k as f64),
            other => {
                return Err(Error::Usage(format!(
                    "unknown density function '{other}' in float mode"
                )))
            }
        },
        LawDescriptor::Custom { .. } => {
            return Err(Error::Usage(
                "float mode does not support custom CSV laws".into(),
            ))
        }
    };
    let mut z = Kahan::default();
    for k in 1..=n {
        z.add(weight(k));
    }
    let z = z.value();

    let primes = gamma.primes();
    let mut classes: BTreeMap<Vec<u32>, Kahan> = BTreeMap::new();
    let mut scratch = vec![0u32; primes.len()];
    for k in 1..=n {
        for (slot, &p) in scratch.iter_mut().zip(primes) {
            *slot = 0;
            let mut rem = k;
            while rem % p == 0 {
                rem /= p;
                *slot += 1;
            }
        }
        match classes.get_mut(scratch.as_slice()) {
            Some(acc) => acc.add(weight(k)),
            None => {
                let mut acc = Kahan::default();
                acc.add(weight(k));
                classes.insert(scratch.clone(), acc);
            }
        }
    }

    let mut diff = Kahan::default();
    let mut g_support = Kahan::default();
    for (mults, acc) in &classes {
        let pv = acc.value() / z;
        let mut pg = 1.0f64;
        for (&m, &p) in mults.iter().zip(primes) {
            pg *= (p as f64).powi(-(m as i32 + 1)) * (p - 1) as f64;
        }
        diff.add((pv - pg).abs());
        g_support.add(pg);
    }
    Ok(0.5 * (diff.value() + (1.0 - g_support.value())))
}

#[derive(Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}
