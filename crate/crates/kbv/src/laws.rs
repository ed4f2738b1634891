//! Exact probability laws for a random sample of `[n]`, divisor
//! probabilities, and certification of the divisor-regularity hypothesis.
//!
//! A law is stored as a vector of nonnegative weights over `[n]` plus the
//! total weight `z`; the pmf is `weight(k) / z`, so normalization is always
//! exact. Uniform laws keep no array at all, laws with exact rational
//! weights keep one `BigRational` per point, and fractional-power laws
//! (`k^{-s}` with irrational masses) keep one scaled integer per point that
//! encloses `2^bits * k^{-s}` to within 1, giving certified interval masses.

use crate::interval::{
    pow_frac, pow_neg_frac_scaled, ratio, ratio_int, QInterval, DEFAULT_BITS,
};
use crate::{Error, Result};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use std::path::{Path, PathBuf};

/// The family a law was constructed from.
#[derive(Clone, Debug, PartialEq)]
pub enum LawKind {
    Uniform,
    Pareto { s: BigRational },
    Density { upsilon: String },
    Custom { source: String },
}

impl std::fmt::Display for LawKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LawKind::Uniform => write!(f, "uniform"),
            LawKind::Pareto { s } => write!(f, "pareto(s={s})"),
            LawKind::Density { upsilon } => write!(f, "density({upsilon})"),
            LawKind::Custom { source } => write!(f, "custom({source})"),
        }
    }
}

enum WeightData {
    /// Every point has weight 1; nothing is materialized.
    Unit,
    /// Exact rational weights, indexed by `k - 1`.
    Rational(Vec<BigRational>),
    /// Weight of `k` lies in `[vals[k-1], vals[k-1] + 1] / 2^bits`.
    Scaled { vals: Vec<BigUint>, bits: u32 },
}

/// An exactly represented probability law on `[n]`.
pub struct LawSpec {
    n: u64,
    kind: LawKind,
    weights: WeightData,
    z: QInterval,
    renormalized: bool,
}

impl LawSpec {
    /// The uniform law on `[n]`.
    pub fn uniform(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyRange);
        }
        Ok(LawSpec {
            n,
            kind: LawKind::Uniform,
            weights: WeightData::Unit,
            z: QInterval::from_int(n),
            renormalized: false,
        })
    }

    /// Truncated power law with mass proportional to `k^{-s}`, `s in [0, 1)`.
    ///
    /// For `s = 0` this degenerates to the uniform weights. For rational
    /// `s > 0` the masses are irrational; they are materialized as certified
    /// scaled-integer enclosures at [`DEFAULT_BITS`] bits.
    pub fn pareto(n: u64, s: BigRational) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyRange);
        }
        if s.is_negative() || s >= BigRational::one() {
            return Err(Error::ParetoExponent { s: s.to_string() });
        }
        if s.is_zero() {
            return Ok(LawSpec {
                n,
                kind: LawKind::Pareto { s },
                weights: WeightData::Unit,
                z: QInterval::from_int(n),
                renormalized: false,
            });
        }
        let num = s
            .numer()
            .to_u32()
            .ok_or_else(|| Error::BadExponent { value: s.to_string() })?;
        let den = s
            .denom()
            .to_u32()
            .ok_or_else(|| Error::BadExponent { value: s.to_string() })?;
        let bits = DEFAULT_BITS;
        let vals: Vec<BigUint> = (1..=n)
            .into_par_iter()
            .map(|k| pow_neg_frac_scaled(&BigUint::from(k), num, den, bits))
            .collect();
        let total: BigUint = vals.iter().sum();
        let scale = BigInt::from(BigUint::one() << bits);
        let z = QInterval::from_bounds(
            BigRational::new(BigInt::from(total.clone()), scale.clone()),
            BigRational::new(BigInt::from(total + n), scale),
        );
        Ok(LawSpec {
            n,
            kind: LawKind::Pareto { s },
            weights: WeightData::Scaled { vals, bits },
            z,
            renormalized: false,
        })
    }

    /// Law with mass proportional to a nonnegative weight function.
    pub fn density<F>(n: u64, upsilon: F, label: &str) -> Result<Self>
    where
        F: Fn(u64) -> BigRational,
    {
        if n == 0 {
            return Err(Error::EmptyRange);
        }
        let mut weights = Vec::with_capacity(n as usize);
        for k in 1..=n {
            let w = upsilon(k);
            if w.is_negative() {
                return Err(Error::NegativeWeight { k });
            }
            weights.push(w);
        }
        let z: BigRational = weights.iter().sum();
        if z.is_zero() {
            return Err(Error::ZeroMass);
        }
        Ok(LawSpec {
            n,
            kind: LawKind::Density {
                upsilon: label.to_string(),
            },
            weights: WeightData::Rational(weights),
            z: QInterval::exact(z),
            renormalized: false,
        })
    }

    /// Law from explicit point masses; unlisted points get mass zero.
    /// Masses that do not sum to 1 are normalized, and the certificate notes
    /// it via [`LawSpec::renormalized`].
    pub fn custom(n: u64, entries: &[(u64, BigRational)], source: &str) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyRange);
        }
        let mut weights = vec![BigRational::zero(); n as usize];
        let mut seen = vec![false; n as usize];
        for (k, mass) in entries {
            if *k == 0 || *k > n {
                return Err(Error::MassIndex { k: *k, n });
            }
            if mass.is_negative() {
                return Err(Error::NegativeWeight { k: *k });
            }
            let idx = (*k - 1) as usize;
            if seen[idx] {
                return Err(Error::DuplicateMass { k: *k });
            }
            seen[idx] = true;
            weights[idx] = mass.clone();
        }
        let z: BigRational = weights.iter().sum();
        if z.is_zero() {
            return Err(Error::ZeroMass);
        }
        let renormalized = !z.is_one();
        Ok(LawSpec {
            n,
            kind: LawKind::Custom {
                source: source.to_string(),
            },
            weights: WeightData::Rational(weights),
            z: QInterval::exact(z),
            renormalized,
        })
    }

    /// Parses the custom-law CSV format: one `k,numerator,denominator` line
    /// per point, blank lines and `#` comments ignored.
    pub fn from_csv_str(text: &str, n: Option<u64>, source: &str) -> Result<Self> {
        let mut entries: Vec<(u64, BigRational)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(',');
            let erred = |reason: &str| Error::CsvFormat {
                line: idx + 1,
                reason: reason.to_string(),
            };
            let k: u64 = parts
                .next()
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| erred("missing or malformed k"))?;
            let num: BigInt = parts
                .next()
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| erred("missing or malformed numerator"))?;
            let den: BigInt = parts
                .next()
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| erred("missing or malformed denominator"))?;
            if parts.next().is_some() {
                return Err(erred("expected exactly three fields"));
            }
            if den.is_zero() {
                return Err(erred("zero denominator"));
            }
            entries.push((k, BigRational::new(num, den)));
        }
        let n = n
            .or_else(|| entries.iter().map(|(k, _)| *k).max())
            .ok_or(Error::ZeroMass)?;
        Self::custom(n, &entries, source)
    }

    pub fn from_csv_path(path: &Path, n: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv_str(&text, n, &path.display().to_string())
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn kind(&self) -> &LawKind {
        &self.kind
    }

    pub fn label(&self) -> String {
        self.kind.to_string()
    }

    /// True when the input masses required normalization.
    pub fn renormalized(&self) -> bool {
        self.renormalized
    }

    /// Total weight; exact unless the weights themselves are enclosures.
    pub fn total_weight(&self) -> &QInterval {
        &self.z
    }

    fn weight(&self, k: u64) -> QInterval {
        debug_assert!((1..=self.n).contains(&k));
        match &self.weights {
            WeightData::Unit => QInterval::one(),
            WeightData::Rational(w) => QInterval::exact(w[(k - 1) as usize].clone()),
            WeightData::Scaled { vals, bits } => {
                let scale = BigInt::from(BigUint::one() << *bits);
                let v = &vals[(k - 1) as usize];
                QInterval::from_bounds(
                    BigRational::new(BigInt::from(v.clone()), scale.clone()),
                    BigRational::new(BigInt::from(v + 1u32), scale),
                )
            }
        }
    }

    /// Probability mass at `k`, as a certified interval (degenerate for
    /// exactly represented laws).
    pub fn pmf(&self, k: u64) -> QInterval {
        if k == 0 || k > self.n {
            return QInterval::zero();
        }
        match &self.weights {
            WeightData::Unit => QInterval::from_ratio(1, self.n),
            _ => self.weight(k).div(&self.z),
        }
    }

    /// `P[a | J]`: total mass of the multiples of `a`, exact.
    pub fn divisor_probability(&self, a: u64) -> QInterval {
        assert!(a >= 1, "divisor must be positive");
        if a > self.n {
            return QInterval::zero();
        }
        let count = self.n / a;
        match &self.weights {
            WeightData::Unit => QInterval::exact(ratio(count, self.n)),
            WeightData::Rational(w) => {
                let mut sum = BigRational::zero();
                let mut k = a;
                while k <= self.n {
                    sum += &w[(k - 1) as usize];
                    k += a;
                }
                QInterval::exact(sum).div(&self.z)
            }
            WeightData::Scaled { vals, bits } => {
                let mut sum = BigUint::zero();
                let mut k = a;
                while k <= self.n {
                    sum += &vals[(k - 1) as usize];
                    k += a;
                }
                let scale = BigInt::from(BigUint::one() << *bits);
                let lo = BigRational::new(BigInt::from(sum.clone()), scale.clone());
                let hi = BigRational::new(BigInt::from(sum + count), scale);
                QInterval::from_bounds(lo, hi).div(&self.z)
            }
        }
    }

    /// As [`LawSpec::divisor_probability`] for divisors that may exceed `u64`
    /// products; anything above `n` has probability zero.
    pub fn divisor_probability_wide(&self, d: u128) -> QInterval {
        if d > self.n as u128 {
            QInterval::zero()
        } else {
            self.divisor_probability(d as u64)
        }
    }

    /// Exact total variation distance to the uniform law on the same range.
    pub fn tv_to_uniform(&self) -> QInterval {
        match &self.weights {
            WeightData::Unit => QInterval::zero(),
            _ => {
                let unif = ratio(1, self.n);
                let mut acc = QInterval::zero();
                for k in 1..=self.n {
                    acc = acc.add(&self.pmf(k).add_q(&-unif.clone()).abs());
                }
                acc.mul_q(&ratio(1, 2))
            }
        }
    }

    /// Scans every divisor `a` and certifies the two-sided hypothesis: the
    /// divisor probabilities stay within `kappa / n^t` of `1/a` and never
    /// exceed `(1 + kappa) / a`. Returns the scan maxima, the tightest
    /// admissible `kappa`, and the verdict for the supplied pair.
    pub fn certify_ht(&self, t: &BigRational, kappa: &BigRational) -> Result<HtCertificate> {
        if !t.is_positive() {
            return Err(Error::NonPositiveT { t: t.to_string() });
        }
        if *kappa < BigRational::one() {
            return Err(Error::KappaRange {
                kappa: kappa.to_string(),
            });
        }
        let t_num = t
            .numer()
            .to_u32()
            .ok_or_else(|| Error::BadExponent { value: t.to_string() })?;
        let t_den = t
            .denom()
            .to_u32()
            .ok_or_else(|| Error::BadExponent { value: t.to_string() })?;
        let n_pow_t = pow_frac(&BigUint::from(self.n), t_num, t_den, DEFAULT_BITS);
        let threshold = QInterval::exact(kappa.clone()).div(&n_pow_t);

        let identity = (QInterval::zero(), QInterval::zero());
        let (max_dev, max_ratio) = (1..=self.n)
            .into_par_iter()
            .fold(
                || identity.clone(),
                |(md, mr), a| {
                    let p = self.divisor_probability(a);
                    let dev = p.add_q(&-ratio(1, a)).abs();
                    let r = p.mul_q(&ratio_int(a));
                    (md.envelope_max(&dev), mr.envelope_max(&r))
                },
            )
            .reduce(
                || identity.clone(),
                |(a1, b1), (a2, b2)| (a1.envelope_max(&a2), b1.envelope_max(&b2)),
            );

        let ratio_cap = QInterval::exact(BigRational::one() + kappa);
        let mut verdicts = vec![
            le_verdict(&max_dev, &threshold),
            le_verdict(&max_ratio, &ratio_cap),
        ];
        // For t > 1 the scan over [n] is not conclusive on its own: beyond n
        // the deviation is 1/a, maximal at a = n + 1, checked analytically.
        let above_n = t > &BigRational::one();
        if above_n {
            let tail_dev = QInterval::from_ratio(1, self.n + 1);
            verdicts.push(le_verdict(&tail_dev, &threshold));
        }
        let holds = combine_verdicts(&verdicts);

        let mut kappa_required = QInterval::one()
            .envelope_max(&n_pow_t.mul(&max_dev))
            .envelope_max(&max_ratio.add_q(&-BigRational::one()));
        if above_n {
            let tail_term = n_pow_t.mul_q(&ratio(1, self.n + 1));
            kappa_required = kappa_required.envelope_max(&tail_term);
        }

        Ok(HtCertificate {
            n: self.n,
            law: self.label(),
            t: t.clone(),
            kappa: kappa.clone(),
            max_dev,
            max_ratio,
            kappa_required,
            holds,
            renormalized: self.renormalized,
        })
    }

    pub(crate) fn new_acc(&self) -> MassAcc {
        match &self.weights {
            WeightData::Unit => MassAcc::Count(0),
            WeightData::Rational(_) => MassAcc::Sum(BigRational::zero()),
            WeightData::Scaled { .. } => MassAcc::Scaled {
                sum: BigUint::zero(),
                count: 0,
            },
        }
    }

    pub(crate) fn acc_add(&self, acc: &mut MassAcc, k: u64) {
        match (&self.weights, acc) {
            (WeightData::Unit, MassAcc::Count(c)) => *c += 1,
            (WeightData::Rational(w), MassAcc::Sum(s)) => *s += &w[(k - 1) as usize],
            (WeightData::Scaled { vals, .. }, MassAcc::Scaled { sum, count }) => {
                *sum += &vals[(k - 1) as usize];
                *count += 1;
            }
            _ => unreachable!("accumulator kind mismatch"),
        }
    }

    pub(crate) fn acc_merge(a: &mut MassAcc, b: MassAcc) {
        match (a, b) {
            (MassAcc::Count(x), MassAcc::Count(y)) => *x += y,
            (MassAcc::Sum(x), MassAcc::Sum(y)) => *x += y,
            (
                MassAcc::Scaled { sum, count },
                MassAcc::Scaled {
                    sum: s2,
                    count: c2,
                },
            ) => {
                *sum += s2;
                *count += c2;
            }
            _ => unreachable!("accumulator kind mismatch"),
        }
    }

    pub(crate) fn acc_mass(&self, acc: &MassAcc) -> QInterval {
        match (acc, &self.weights) {
            (MassAcc::Count(c), WeightData::Unit) => QInterval::exact(ratio(*c, self.n)),
            (MassAcc::Sum(s), WeightData::Rational(_)) => {
                QInterval::exact(s.clone()).div(&self.z)
            }
            (MassAcc::Scaled { sum, count }, WeightData::Scaled { bits, .. }) => {
                let scale = BigInt::from(BigUint::one() << *bits);
                let lo = BigRational::new(BigInt::from(sum.clone()), scale.clone());
                let hi = BigRational::new(BigInt::from(sum + count), scale);
                QInterval::from_bounds(lo, hi).div(&self.z)
            }
            _ => unreachable!("accumulator kind mismatch"),
        }
    }
}

/// Per-class mass accumulator matched to the law's weight representation,
/// so uniform laws accumulate plain counters and enclosure-backed laws
/// accumulate scaled integers.
pub(crate) enum MassAcc {
    Count(u64),
    Sum(BigRational),
    Scaled { sum: BigUint, count: u64 },
}

/// Outcome of a certified comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Certainly holds (accounting for interval error).
    Holds,
    /// Certainly violated.
    Fails,
    /// The enclosures straddle the threshold; holds within interval error
    /// but cannot be certified at the working precision.
    Unresolved,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Unresolved => "unresolved",
        }
    }
}

fn le_verdict(lhs: &QInterval, rhs: &QInterval) -> Verdict {
    if lhs.certainly_le(rhs) {
        Verdict::Holds
    } else if rhs.certainly_lt(lhs) {
        Verdict::Fails
    } else {
        Verdict::Unresolved
    }
}

fn combine_verdicts(vs: &[Verdict]) -> Verdict {
    if vs.contains(&Verdict::Fails) {
        Verdict::Fails
    } else if vs.iter().all(|v| *v == Verdict::Holds) {
        Verdict::Holds
    } else {
        Verdict::Unresolved
    }
}

/// Certificate for the divisor-regularity hypothesis at a given `(kappa, t)`.
pub struct HtCertificate {
    pub n: u64,
    pub law: String,
    pub t: BigRational,
    pub kappa: BigRational,
    /// Largest deviation `|P[a|J] - 1/a|` over `a in [n]`.
    pub max_dev: QInterval,
    /// Largest `a * P[a|J]` over `a in [n]`.
    pub max_ratio: QInterval,
    /// Tightest admissible constant: `max(1, n^t * max_dev, max_ratio - 1)`.
    pub kappa_required: QInterval,
    pub holds: Verdict,
    pub renormalized: bool,
}

impl HtCertificate {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "law": self.law,
            "t": self.t.to_string(),
            "kappa": self.kappa.to_string(),
            "max_dev": crate::report::mass_json(&self.max_dev),
            "max_ratio": crate::report::mass_json(&self.max_ratio),
            "kappa_required": crate::report::mass_json(&self.kappa_required),
            "holds": self.holds.as_str(),
            "renormalized": self.renormalized,
        })
    }
}

/// Law family descriptor: enough to build the law at any `n`. Used by the
/// CLI and by grid experiments.
#[derive(Clone, Debug)]
pub enum LawDescriptor {
    Uniform,
    Pareto { s: BigRational },
    Density { upsilon: String },
    Custom { path: PathBuf },
}

impl LawDescriptor {
    pub fn build(&self, n: u64) -> Result<LawSpec> {
        match self {
            LawDescriptor::Uniform => LawSpec::uniform(n),
            LawDescriptor::Pareto { s } => LawSpec::pareto(n, s.clone()),
            LawDescriptor::Density { upsilon } => {
                let f = upsilon_fn(upsilon)?;
                LawSpec::density(n, f, upsilon)
            }
            LawDescriptor::Custom { path } => LawSpec::from_csv_path(path, Some(n)),
        }
    }

    pub fn label(&self) -> String {
        match self {
            LawDescriptor::Uniform => "uniform".into(),
            LawDescriptor::Pareto { s } => format!("pareto(s={s})"),
            LawDescriptor::Density { upsilon } => format!("density({upsilon})"),
            LawDescriptor::Custom { path } => format!("custom({})", path.display()),
        }
    }
}

/// Named weight functions accepted by `--upsilon`.
fn upsilon_fn(expr: &str) -> Result<impl Fn(u64) -> BigRational> {
    enum Shape {
        Linear,
        Square,
        Reciprocal,
    }
    let shape = match expr {
        "k" => Shape::Linear,
        "k^2" => Shape::Square,
        "1/k" => Shape::Reciprocal,
        other => {
            return Err(Error::Usage(format!(
                "unknown density function '{other}' (supported: k, k^2, 1/k)"
            )))
        }
    };
    Ok(move |k: u64| match shape {
        Shape::Linear => ratio_int(k),
        Shape::Square => ratio_int(k) * ratio_int(k),
        Shape::Reciprocal => ratio(1, k),
    })
}
