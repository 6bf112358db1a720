//! Real scalars: exact arbitrary-precision rationals with an `f64` fallback.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Error;

/// A real scalar.
///
/// Arithmetic between two `Exact` values never rounds. Any operation that
/// touches a `Float` produces a `Float`; callers that care can detect this
/// with [`Scalar::is_exact`].
#[derive(Clone, Debug)]
pub enum Scalar {
    Exact(BigRational),
    Float(f64),
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Exact(BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar::Exact(BigRational::one())
    }

    pub fn int(n: i64) -> Self {
        Scalar::Exact(BigRational::from_integer(BigInt::from(n)))
    }

    /// `num / den`; panics if `den == 0`.
    pub fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Scalar::Exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// `2^e` as an exact dyadic rational.
    pub fn pow2(e: i64) -> Self {
        Scalar::Exact(pow2_rational(e))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(q) => Some(q),
            Scalar::Float(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(q) => q.is_zero(),
            Scalar::Float(x) => *x == 0.0,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Scalar::Exact(q) => q.is_negative(),
            Scalar::Float(x) => *x < 0.0,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(q) => rational_to_f64(q),
            Scalar::Float(x) => *x,
        }
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(q.abs()),
            Scalar::Float(x) => Scalar::Float(x.abs()),
        }
    }

    /// Multiplicative inverse, `None` for zero.
    pub fn recip(&self) -> Option<Scalar> {
        if self.is_zero() {
            return None;
        }
        Some(match self {
            Scalar::Exact(q) => Scalar::Exact(q.recip()),
            Scalar::Float(x) => Scalar::Float(1.0 / x),
        })
    }

    pub fn checked_div(&self, other: &Scalar) -> Option<Scalar> {
        other.recip().map(|r| self * &r)
    }

    /// Integer power; exact inputs stay exact.
    pub fn powi(&self, e: i32) -> Scalar {
        match self {
            Scalar::Exact(q) => {
                if e >= 0 {
                    Scalar::Exact(num_traits::pow(q.clone(), e as usize))
                } else if q.is_zero() {
                    Scalar::Float(f64::INFINITY)
                } else {
                    Scalar::Exact(num_traits::pow(q.recip(), e.unsigned_abs() as usize))
                }
            }
            Scalar::Float(x) => Scalar::Float(x.powi(e)),
        }
    }

    /// Real power; always `Float` unless the exponent is an integer.
    pub fn powf(&self, e: f64) -> Scalar {
        if e.fract() == 0.0 && e.abs() < i32::MAX as f64 && self.is_exact() {
            return self.powi(e as i32);
        }
        Scalar::Float(self.to_f64().powf(e))
    }

    /// `log2 |x|`, exact for powers of two of any size.
    pub fn log2_abs(&self) -> f64 {
        match self {
            Scalar::Exact(q) => {
                if q.is_zero() {
                    f64::NEG_INFINITY
                } else {
                    bigint_log2(q.numer()) - bigint_log2(q.denom())
                }
            }
            Scalar::Float(x) => x.abs().log2(),
        }
    }

    pub fn max(self, other: Scalar) -> Scalar {
        if other.cmp_value(&self) == Ordering::Greater {
            other
        } else {
            self
        }
    }

    /// Numeric comparison; mixed pairs compare through `f64`.
    pub fn cmp_value(&self, other: &Scalar) -> Ordering {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a.cmp(b),
            _ => self
                .to_f64()
                .partial_cmp(&other.to_f64())
                .unwrap_or(Ordering::Equal),
        }
    }

    pub fn lt(&self, other: &Scalar) -> bool {
        self.cmp_value(other) == Ordering::Less
    }

    pub fn le(&self, other: &Scalar) -> bool {
        self.cmp_value(other) != Ordering::Greater
    }

    /// Parses `"3"`, `"-3/4"`, `"0.125"`, `"1e-3"` exactly; `"f:<x>"` forces a float.
    pub fn parse(s: &str) -> Result<Scalar, Error> {
        let s = s.trim();
        if let Some(f) = s.strip_prefix("f:") {
            return f
                .parse::<f64>()
                .map(Scalar::Float)
                .map_err(|_| Error::Parse(format!("bad float scalar `{s}`")));
        }
        parse_exact(s)
            .map(Scalar::Exact)
            .ok_or_else(|| Error::Parse(format!("bad scalar `{s}`")))
    }

    /// Canonical text form: terminating rationals as decimals, other
    /// rationals as `p/q`, floats with 17 significant digits.
    pub fn to_decimal_string(&self) -> String {
        match self {
            Scalar::Exact(q) => exact_to_string(q),
            Scalar::Float(x) => format_f64_17(*x),
        }
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Scalar) -> bool {
        self.cmp_value(other) == Ordering::Equal
    }
}

impl From<BigRational> for Scalar {
    fn from(q: BigRational) -> Self {
        Scalar::Exact(q)
    }
}

impl From<f64> for Scalar {
    fn from(x: f64) -> Self {
        Scalar::Float(x)
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::int(n)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a $op b),
                    _ => Scalar::Float(self.to_f64() $op rhs.to_f64()),
                }
            }
        }
        impl $trait<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                (&self).$method(rhs)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(-q),
            Scalar::Float(x) => Scalar::Float(-x),
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -(self.clone())
    }
}

pub fn pow2_rational(e: i64) -> BigRational {
    let p = BigInt::one() << (e.unsigned_abs() as usize);
    if e >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    }
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    if let Some(x) = q.to_f64() {
        if x.is_finite() && (x != 0.0 || q.is_zero()) {
            return x;
        }
    }
    // fall back to log-space for values outside the f64 range
    let l = bigint_log2(q.numer()) - bigint_log2(q.denom());
    let s = if q.is_negative() { -1.0 } else { 1.0 };
    s * l.exp2()
}

fn bigint_log2(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits <= 53 {
        return n.abs().to_f64().unwrap_or(0.0).log2();
    }
    let shift = bits - 53;
    let top = (n.abs() >> (shift as usize)).to_f64().unwrap_or(0.0);
    top.log2() + shift as f64
}

fn parse_exact(s: &str) -> Option<BigRational> {
    if s.is_empty() {
        return None;
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().ok()?),
        None => (s, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}0").parse::<BigInt>().ok()? / 10;
    let scale = exp - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let mut q = BigRational::from_integer(digits);
    if scale >= 0 {
        q *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        q /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -q } else { q })
}

fn exact_to_string(q: &BigRational) -> String {
    if q.is_integer() {
        return q.numer().to_string();
    }
    // terminating iff the reduced denominator is 2^a 5^b
    let mut d = q.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut a, mut b) = (0usize, 0usize);
    while d.is_even() {
        d /= &two;
        a += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        b += 1;
    }
    if !d.is_one() {
        return format!("{}/{}", q.numer(), q.denom());
    }
    let digits = a.max(b);
    let scaled = q * BigRational::from_integer(num_traits::pow(BigInt::from(10), digits));
    let n = scaled.to_integer();
    let (sign, mag) = match n.sign() {
        Sign::Minus => ("-", (-n).to_string()),
        _ => ("", n.to_string()),
    };
    let padded = format!("{:0>width$}", mag, width = digits + 1);
    let (ip, fp) = padded.split_at(padded.len() - digits);
    format!("{sign}{ip}.{fp}")
}

/// Formats with 17 significant digits (round-trips every `f64`).
pub fn format_f64_17(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..17).contains(&e) {
        let decimals = (16 - e).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.16e}")
    }
}

/// Running product of scalar weights, kept both exactly (when every factor
/// is exact) and as a signed log2-magnitude that cannot overflow.
#[derive(Clone, Debug)]
pub struct WeightProduct {
    exact: Option<BigRational>,
    log2_abs: f64,
    negative: bool,
    zero: bool,
}

impl Default for WeightProduct {
    fn default() -> Self {
        Self::identity()
    }
}

impl WeightProduct {
    pub fn identity() -> Self {
        WeightProduct {
            exact: Some(BigRational::one()),
            log2_abs: 0.0,
            negative: false,
            zero: false,
        }
    }

    /// `keep_exact = false` skips the big-rational track (useful when only
    /// magnitudes are needed and exponents are huge).
    pub fn mul_assign(&mut self, w: &Scalar, keep_exact: bool) {
        if w.is_zero() {
            self.zero = true;
        }
        self.negative ^= w.is_negative();
        self.log2_abs += w.log2_abs();
        self.exact = match (&self.exact, w) {
            (Some(acc), Scalar::Exact(q)) if keep_exact => Some(acc * q),
            _ => None,
        };
    }

    pub fn times(mut self, w: &Scalar) -> Self {
        self.mul_assign(w, true);
        self
    }

    pub fn exact(&self) -> Option<&BigRational> {
        self.exact.as_ref()
    }

    pub fn log2_abs(&self) -> f64 {
        if self.zero {
            f64::NEG_INFINITY
        } else {
            self.log2_abs
        }
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn is_negative(&self) -> bool {
        self.negative && !self.zero
    }

    /// Exact value when available, otherwise `±2^log2`.
    pub fn to_scalar(&self) -> Scalar {
        if self.zero {
            return Scalar::zero();
        }
        match &self.exact {
            Some(q) => Scalar::Exact(q.clone()),
            None => {
                let m = self.log2_abs.exp2();
                Scalar::Float(if self.negative { -m } else { m })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(Scalar::parse("3/4").unwrap(), Scalar::ratio(3, 4));
        assert_eq!(Scalar::parse("-0.125").unwrap(), Scalar::ratio(-1, 8));
        assert_eq!(Scalar::parse("1e-3").unwrap(), Scalar::ratio(1, 1000));
        assert_eq!(Scalar::parse("2.5e1").unwrap(), Scalar::int(25));
        assert!(Scalar::parse("f:0.5").unwrap().to_f64() == 0.5);
        assert!(!Scalar::parse("f:0.5").unwrap().is_exact());
        assert!(Scalar::parse("1/0").is_err());
        assert!(Scalar::parse("abc").is_err());
    }

    #[test]
    fn decimal_strings() {
        assert_eq!(Scalar::int(16).to_decimal_string(), "16");
        assert_eq!(Scalar::ratio(-1, 8).to_decimal_string(), "-0.125");
        assert_eq!(Scalar::ratio(1, 3).to_decimal_string(), "1/3");
        assert_eq!(Scalar::ratio(3, 40).to_decimal_string(), "0.075");
        let f = Scalar::Float(2.0f64.sqrt() * 2.0);
        assert_eq!(f.to_decimal_string(), "2.8284271247461903");
        assert_eq!(format_f64_17(1e-30), "1.0000000000000001e-30");
    }

    #[test]
    fn mixed_arithmetic_downgrades() {
        let a = Scalar::ratio(1, 2);
        let b = Scalar::Float(0.25);
        assert!(!(&a + &b).is_exact());
        assert!((&a * &a).is_exact());
        assert_eq!((&a * &a), Scalar::ratio(1, 4));
    }

    #[test]
    fn log2_of_huge_dyadics_is_exact() {
        assert_eq!(Scalar::pow2(5000).log2_abs(), 5000.0);
        assert_eq!(Scalar::pow2(-4000).log2_abs(), -4000.0);
        assert_eq!(Scalar::int(-8).log2_abs(), 3.0);
    }

    #[test]
    fn weight_product_tracks_both_routes() {
        let mut p = WeightProduct::identity();
        for k in 2..=10i64 {
            p.mul_assign(&Scalar::ratio(k + 1, k), true);
        }
        assert_eq!(p.to_scalar(), Scalar::ratio(11, 2));
        assert!((p.log2_abs() - 5.5f64.log2()).abs() < 1e-12);

        let mut big = WeightProduct::identity();
        for _ in 0..3000 {
            big.mul_assign(&Scalar::Float(0.5), true);
        }
        assert_eq!(big.log2_abs(), -3000.0);
        assert!(big.exact().is_none());
    }

    #[test]
    fn huge_rational_to_f64_saturates_gracefully() {
        assert_eq!(Scalar::pow2(-2000).to_f64(), 0.0);
        assert!(Scalar::pow2(2000).to_f64().is_infinite());
        assert_eq!(Scalar::pow2(-10).to_f64(), 1.0 / 1024.0);
    }
}
