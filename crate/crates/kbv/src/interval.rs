//! Rational numbers with certified interval bounds.
//!
//! [`QInterval`] is a closed interval `[lo, hi]` with exact `BigRational`
//! endpoints. Exactly representable quantities (counting probabilities,
//! geometric masses) travel as degenerate intervals with `lo == hi`, so one
//! code path serves both the exact regime and the certified-approximation
//! regime. Irrational inputs enter through the constructors at the bottom of
//! this module: fractional powers via integer n-th roots, exponentials via
//! truncated series with a bounded remainder. All produced enclosures are
//! rigorous: the true value always lies inside the interval.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Default precision, in bits, for interval-valued constructors. Margins in
/// the verified inequalities dwarf `2^-192`, so certified comparisons stay
/// decisive.
pub const DEFAULT_BITS: u32 = 192;

/// A closed interval with exact rational endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QInterval {
    lo: BigRational,
    hi: BigRational,
}

impl QInterval {
    pub fn exact(value: BigRational) -> Self {
        QInterval {
            lo: value.clone(),
            hi: value,
        }
    }

    /// Interval from endpoints; panics if `lo > hi`.
    pub fn from_bounds(lo: BigRational, hi: BigRational) -> Self {
        assert!(lo <= hi, "inverted interval bounds");
        QInterval { lo, hi }
    }

    pub fn zero() -> Self {
        Self::exact(BigRational::zero())
    }

    pub fn one() -> Self {
        Self::exact(BigRational::one())
    }

    pub fn from_int(v: u64) -> Self {
        Self::exact(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn from_ratio(num: u64, den: u64) -> Self {
        Self::exact(ratio(num, den))
    }

    pub fn lo(&self) -> &BigRational {
        &self.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.hi
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    /// The exact value, when the interval is degenerate.
    pub fn as_exact(&self) -> Option<&BigRational> {
        if self.is_exact() {
            Some(&self.lo)
        } else {
            None
        }
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn add(&self, other: &Self) -> Self {
        QInterval {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        QInterval {
            lo: &self.lo - &other.hi,
            hi: &self.hi - &other.lo,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let candidates = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = candidates.iter().min().unwrap().clone();
        let hi = candidates.iter().max().unwrap().clone();
        QInterval { lo, hi }
    }

    /// Division by an interval that does not contain zero.
    pub fn div(&self, other: &Self) -> Self {
        assert!(
            other.lo.is_positive() || other.hi.is_negative(),
            "division by an interval containing zero"
        );
        let candidates = [
            &self.lo / &other.lo,
            &self.lo / &other.hi,
            &self.hi / &other.lo,
            &self.hi / &other.hi,
        ];
        let lo = candidates.iter().min().unwrap().clone();
        let hi = candidates.iter().max().unwrap().clone();
        QInterval { lo, hi }
    }

    pub fn neg(&self) -> Self {
        QInterval {
            lo: -self.hi.clone(),
            hi: -self.lo.clone(),
        }
    }

    pub fn abs(&self) -> Self {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            self.neg()
        } else {
            let hi = std::cmp::max(-self.lo.clone(), self.hi.clone());
            QInterval {
                lo: BigRational::zero(),
                hi,
            }
        }
    }

    pub fn add_q(&self, q: &BigRational) -> Self {
        QInterval {
            lo: &self.lo + q,
            hi: &self.hi + q,
        }
    }

    pub fn mul_q(&self, q: &BigRational) -> Self {
        if q.is_negative() {
            QInterval {
                lo: &self.hi * q,
                hi: &self.lo * q,
            }
        } else {
            QInterval {
                lo: &self.lo * q,
                hi: &self.hi * q,
            }
        }
    }

    /// Envelope of the pointwise maximum: if `x in self` and `y in other`,
    /// then `max(x, y)` lies in the result. Associative and commutative, so
    /// parallel reductions of running maxima stay deterministic.
    pub fn envelope_max(&self, other: &Self) -> Self {
        QInterval {
            lo: std::cmp::max(&self.lo, &other.lo).clone(),
            hi: std::cmp::max(&self.hi, &other.hi).clone(),
        }
    }

    /// True when every point of `self` is `<=` every point of `other`.
    pub fn certainly_le(&self, other: &Self) -> bool {
        self.hi <= other.lo
    }

    /// True when every point of `self` is `<` every point of `other`.
    pub fn certainly_lt(&self, other: &Self) -> bool {
        self.hi < other.lo
    }

    pub fn certainly_le_q(&self, q: &BigRational) -> bool {
        self.hi <= *q
    }

    pub fn certainly_ge_q(&self, q: &BigRational) -> bool {
        self.lo >= *q
    }

    pub fn contains(&self, q: &BigRational) -> bool {
        self.lo <= *q && *q <= self.hi
    }

    pub fn lo_f64(&self) -> f64 {
        ratio_to_f64(&self.lo)
    }

    pub fn hi_f64(&self) -> f64 {
        ratio_to_f64(&self.hi)
    }

    /// Midpoint as a double; the natural scalar to report.
    pub fn to_f64(&self) -> f64 {
        if self.is_exact() {
            ratio_to_f64(&self.lo)
        } else {
            let mid = (&self.lo + &self.hi) / BigRational::from_integer(BigInt::from(2));
            ratio_to_f64(&mid)
        }
    }

    pub fn sum<'a, I: IntoIterator<Item = &'a QInterval>>(items: I) -> Self {
        let mut acc = QInterval::zero();
        for it in items {
            acc = acc.add(it);
        }
        acc
    }
}

impl std::fmt::Display for QInterval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.as_exact() {
            Some(q) => write!(f, "{q}"),
            None => write!(f, "[{}, {}]", self.lo, self.hi),
        }
    }
}

pub fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn ratio_int(v: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Exact rational value of a finite double (doubles are dyadic rationals).
pub fn ratio_from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

/// Rounds a rational to the nearest double without overflowing on huge
/// numerators/denominators: values beyond ~2^127 in magnitude saturate, and
/// values below ~2^-128 flush to zero. Plenty for probabilities and bounds.
pub fn ratio_to_f64(q: &BigRational) -> f64 {
    if q.is_zero() {
        return 0.0;
    }
    const SHIFT: u32 = 128;
    let scaled: BigInt = (q.numer() << SHIFT) / q.denom();
    scaled.to_f64().unwrap_or(if q.is_negative() {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    }) / 2f64.powi(SHIFT as i32)
}

/// Parses a rational from `"a/b"`, an integer, or a finite decimal such as
/// `"0.25"`. Returns `None` for malformed or zero-denominator input.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let num: BigInt = a.trim().parse().ok()?;
        let den: BigInt = b.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(BigRational::new(num, den));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let negative = int_part.trim_start().starts_with('-');
        let int: BigInt = if int_part.is_empty() || int_part == "-" {
            BigInt::zero()
        } else {
            int_part.parse().ok()?
        };
        let frac: BigInt = frac_part.parse().ok()?;
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let mag = int.abs() * &scale + frac;
        let num = if negative { -mag } else { mag };
        return Some(BigRational::new(num, scale));
    }
    let num: BigInt = s.parse().ok()?;
    Some(BigRational::from_integer(num))
}

/// Certified enclosure of `base^(num/den)` with `2^-bits` width.
///
/// Detects exact results (perfect powers, integer exponents) and returns a
/// degenerate interval for them.
pub fn pow_frac(base: &BigUint, num: u32, den: u32, bits: u32) -> QInterval {
    assert!(den >= 1, "zero denominator exponent");
    if num == 0 {
        return QInterval::one();
    }
    let m = base.pow(num);
    if den == 1 {
        return QInterval::exact(BigRational::from_integer(BigInt::from(m)));
    }
    // Perfect-power fast path: base^num = r^den exactly.
    let r = m.nth_root(den);
    if r.pow(den) == m {
        return QInterval::exact(BigRational::from_integer(BigInt::from(r)));
    }
    // x = floor((m * 2^(den*bits))^(1/den)) encloses m^(1/den) * 2^bits.
    let target = &m << (den as u64 * bits as u64);
    let x = target.nth_root(den);
    let scale = BigInt::from(BigUint::one() << bits);
    QInterval::from_bounds(
        BigRational::new(BigInt::from(x.clone()), scale.clone()),
        BigRational::new(BigInt::from(x + 1u32), scale),
    )
}

/// Scaled-integer enclosure of `base^(-num/den)`: returns `u` with
/// `u <= 2^bits * base^(-num/den) <= u + 1`. The compact form behind the
/// dense mass arrays of fractional-exponent laws.
pub fn pow_neg_frac_scaled(base: &BigUint, num: u32, den: u32, bits: u32) -> BigUint {
    assert!(den >= 1, "zero denominator exponent");
    assert!(!base.is_zero(), "negative power of zero");
    if num == 0 {
        return BigUint::one() << bits;
    }
    let m = base.pow(num);
    let target = (BigUint::one() << (den as u64 * bits as u64)).div_floor(&m);
    target.nth_root(den)
}

/// Certified enclosure of `base^(-num/den)` for `base >= 1`.
pub fn pow_neg_frac(base: &BigUint, num: u32, den: u32, bits: u32) -> QInterval {
    assert!(den >= 1, "zero denominator exponent");
    assert!(!base.is_zero(), "negative power of zero");
    if num == 0 {
        return QInterval::one();
    }
    let m = base.pow(num);
    if m.is_one() {
        return QInterval::one();
    }
    if den == 1 {
        return QInterval::exact(BigRational::new(BigInt::one(), BigInt::from(m)));
    }
    let r = m.nth_root(den);
    if r.pow(den) == m {
        return QInterval::exact(BigRational::new(BigInt::one(), BigInt::from(r)));
    }
    // u = floor(floor(2^(den*bits) / m)^(1/den)) satisfies
    // u <= 2^bits * m^(-1/den) < u + 1.
    let target = (BigUint::one() << (den as u64 * bits as u64)).div_floor(&m);
    let u = target.nth_root(den);
    let scale = BigInt::from(BigUint::one() << bits);
    QInterval::from_bounds(
        BigRational::new(BigInt::from(u.clone()), scale.clone()),
        BigRational::new(BigInt::from(u + 1u32), scale),
    )
}

/// Certified enclosure of `exp(x)` for rational `x`, to roughly `bits` bits
/// of relative precision. Negative arguments go through the reciprocal.
pub fn exp_interval(x: &BigRational, bits: u32) -> QInterval {
    if x.is_zero() {
        return QInterval::one();
    }
    if x.is_negative() {
        let pos = exp_interval(&-x.clone(), bits);
        // exp(x) = 1 / exp(-x); exp(-x) >= 1 here, so no zero crossing.
        return QInterval::from_bounds(
            BigRational::one() / pos.hi().clone(),
            BigRational::one() / pos.lo().clone(),
        );
    }
    // Maclaurin series with an explicit geometric remainder bound:
    // sum_{j>=K} x^j/j! <= (x^K/K!) / (1 - x/(K+1)) once K + 1 > x.
    let threshold = BigRational::new(BigInt::one(), BigInt::one() << (bits + 2));
    let mut partial = BigRational::one();
    let mut term = BigRational::one();
    let mut k: u64 = 1;
    loop {
        term = term * x / BigRational::from_integer(BigInt::from(k));
        partial += &term;
        k += 1;
        let kp1 = BigRational::from_integer(BigInt::from(k));
        if *x < kp1 && term < threshold {
            let denom = BigRational::one() - x / &kp1;
            let remainder = &term * x / (kp1 * denom);
            return QInterval::from_bounds(partial.clone(), partial + remainder);
        }
    }
}
