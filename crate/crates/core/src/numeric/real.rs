use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use dashu_int::ops::BitTest;
use dashu_int::IBig;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Binary arbitrary-precision float backing BigFloat mode.
pub type BigFloat = FBig<HalfEven, 2>;

const LN2: f64 = std::f64::consts::LN_2;

/// A real number that is either an exact rational or a big float.
///
/// Mixed operations promote the rational side to the float's precision.
#[derive(Clone, Debug)]
pub enum Real {
    Exact(BigRational),
    Float(BigFloat),
}

pub(crate) fn to_ibig(x: &BigInt) -> IBig {
    IBig::from_le_bytes(&x.to_signed_bytes_le())
}

pub(crate) fn to_bigint(x: &IBig) -> BigInt {
    BigInt::from_signed_bytes_le(&x.to_le_bytes())
}

fn ln_ibig(x: &IBig) -> f64 {
    let b = x.bit_len();
    if b == 0 {
        return f64::NEG_INFINITY;
    }
    if b <= 1000 {
        x.to_f64().value().abs().ln()
    } else {
        let shifted = x >> (b - 64);
        shifted.to_f64().value().abs().ln() + (b - 64) as f64 * LN2
    }
}

fn ln_bigint(x: &BigInt) -> f64 {
    let b = x.bits();
    if b == 0 {
        return f64::NEG_INFINITY;
    }
    if b <= 1000 {
        x.to_f64().unwrap_or(f64::INFINITY).abs().ln()
    } else {
        let shifted: BigInt = x >> (b - 64);
        shifted.to_f64().unwrap().abs().ln() + (b - 64) as f64 * LN2
    }
}

pub fn float_from_int(n: &BigInt, bits: usize) -> BigFloat {
    BigFloat::from_parts(to_ibig(n), 0).with_precision(bits).value()
}

pub fn rational_to_float(q: &BigRational, bits: usize) -> BigFloat {
    let n = float_from_int(q.numer(), bits);
    if q.denom().is_one() {
        return n;
    }
    let d = float_from_int(q.denom(), bits);
    n / d
}

/// Exact dyadic value of a float.
pub fn float_to_rational(f: &BigFloat) -> BigRational {
    let repr = f.repr();
    let sig = to_bigint(repr.significand());
    let e = repr.exponent();
    if e >= 0 {
        BigRational::from_integer(sig << (e as usize))
    } else {
        BigRational::new(sig, BigInt::one() << ((-e) as usize))
    }
}

impl Real {
    pub fn zero() -> Real {
        Real::Exact(BigRational::zero())
    }

    pub fn one() -> Real {
        Real::Exact(BigRational::one())
    }

    pub fn from_i64(v: i64) -> Real {
        Real::Exact(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn from_ratio(n: i64, d: i64) -> Real {
        assert!(d != 0, "zero denominator");
        Real::Exact(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn from_f64(v: f64, bits: usize) -> Real {
        let f = BigFloat::try_from(v).expect("finite f64");
        Real::Float(f.with_precision(bits).value())
    }

    pub fn float_zero(bits: usize) -> Real {
        Real::Float(BigFloat::ZERO.with_precision(bits).value())
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Real::Exact(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Real::Exact(q) => q.is_zero(),
            Real::Float(f) => f.repr().significand().is_zero(),
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self, Real::Exact(q) if q.is_zero())
    }

    pub fn is_one(&self) -> bool {
        match self {
            Real::Exact(q) => q.is_one(),
            Real::Float(f) => *f == BigFloat::ONE,
        }
    }

    /// Significand size of a float, `None` for exact values.
    pub fn precision(&self) -> Option<usize> {
        match self {
            Real::Exact(_) => None,
            Real::Float(f) => Some(f.precision()),
        }
    }

    pub fn signum(&self) -> i32 {
        match self {
            Real::Exact(q) => {
                if q.is_zero() {
                    0
                } else if q.is_positive() {
                    1
                } else {
                    -1
                }
            }
            Real::Float(f) => {
                let s = f.repr().significand();
                if s.is_zero() {
                    0
                } else if *s > IBig::ZERO {
                    1
                } else {
                    -1
                }
            }
        }
    }

    pub fn abs(&self) -> Real {
        if self.signum() < 0 {
            -self
        } else {
            self.clone()
        }
    }

    pub fn to_float(&self, bits: usize) -> BigFloat {
        match self {
            Real::Exact(q) => rational_to_float(q, bits),
            Real::Float(f) => f.clone().with_precision(bits).value(),
        }
    }

    /// Converts to a float at `bits`, or keeps the value exact when `exact` is set.
    pub fn promote(&self, exact: bool, bits: usize) -> Real {
        if exact {
            self.clone()
        } else {
            Real::Float(self.to_float(bits))
        }
    }

    /// Exact rational value (dyadic for floats).
    pub fn to_rational(&self) -> BigRational {
        match self {
            Real::Exact(q) => q.clone(),
            Real::Float(f) => float_to_rational(f),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Real::Exact(q) => {
                if q.is_zero() {
                    return 0.0;
                }
                match q.to_f64() {
                    Some(v) if v.is_finite() => v,
                    _ => (self.signum() as f64) * self.ln_abs().exp(),
                }
            }
            Real::Float(f) => f.to_f64().value(),
        }
    }

    /// Natural log of |x|, minus infinity at zero. Safe far outside the f64 range.
    pub fn ln_abs(&self) -> f64 {
        match self {
            Real::Exact(q) => {
                if q.is_zero() {
                    f64::NEG_INFINITY
                } else {
                    ln_bigint(q.numer()) - ln_bigint(q.denom())
                }
            }
            Real::Float(f) => {
                let r = f.repr();
                if r.significand().is_zero() {
                    f64::NEG_INFINITY
                } else {
                    ln_ibig(r.significand()) + r.exponent() as f64 * LN2
                }
            }
        }
    }

    pub fn recip(&self) -> Real {
        Real::one().div_ref(self)
    }

    pub fn powi(&self, mut e: u64) -> Real {
        let mut base = self.clone();
        let mut acc = match self {
            Real::Exact(_) => Real::one(),
            Real::Float(f) => Real::Float(BigFloat::ONE.with_precision(f.precision()).value()),
        };
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Square root; exact when the argument is the square of a rational.
    pub fn sqrt(&self, bits: usize) -> Real {
        if let Real::Exact(q) = self {
            if !q.is_negative() {
                let n = q.numer().sqrt();
                let d = q.denom().sqrt();
                if &n * &n == *q.numer() && &d * &d == *q.denom() {
                    return Real::Exact(BigRational::new(n, d));
                }
            }
        }
        let f = self.to_float(bits);
        Real::Float(f.sqrt())
    }

    pub fn cmp_value(&self, other: &Real) -> Ordering {
        match (self, other) {
            (Real::Exact(a), Real::Exact(b)) => a.cmp(b),
            _ => (self - other).signum().cmp(&0),
        }
    }

    fn add_ref(&self, o: &Real) -> Real {
        match (self, o) {
            (Real::Exact(a), Real::Exact(b)) => Real::Exact(a + b),
            (Real::Float(a), Real::Float(b)) => Real::Float(a + b),
            (Real::Exact(a), Real::Float(b)) | (Real::Float(b), Real::Exact(a)) => {
                if a.is_zero() {
                    Real::Float(b.clone())
                } else {
                    Real::Float(rational_to_float(a, b.precision()) + b)
                }
            }
        }
    }

    fn sub_ref(&self, o: &Real) -> Real {
        match (self, o) {
            (Real::Exact(a), Real::Exact(b)) => Real::Exact(a - b),
            (Real::Float(a), Real::Float(b)) => Real::Float(a - b),
            (Real::Exact(a), Real::Float(b)) => {
                if a.is_zero() {
                    Real::Float(-b.clone())
                } else {
                    Real::Float(rational_to_float(a, b.precision()) - b)
                }
            }
            (Real::Float(a), Real::Exact(b)) => {
                if b.is_zero() {
                    Real::Float(a.clone())
                } else {
                    Real::Float(a - rational_to_float(b, a.precision()))
                }
            }
        }
    }

    fn mul_ref(&self, o: &Real) -> Real {
        match (self, o) {
            (Real::Exact(a), Real::Exact(b)) => Real::Exact(a * b),
            (Real::Float(a), Real::Float(b)) => Real::Float(a * b),
            (Real::Exact(a), Real::Float(b)) | (Real::Float(b), Real::Exact(a)) => {
                if a.is_zero() {
                    Real::zero()
                } else if a.is_one() {
                    Real::Float(b.clone())
                } else if a.is_integer() {
                    Real::Float(b * float_from_int(a.numer(), b.precision()))
                } else {
                    Real::Float(rational_to_float(a, b.precision()) * b)
                }
            }
        }
    }

    fn div_ref(&self, o: &Real) -> Real {
        assert!(!o.is_zero(), "division by zero");
        match (self, o) {
            (Real::Exact(a), Real::Exact(b)) => Real::Exact(a / b),
            (Real::Float(a), Real::Float(b)) => Real::Float(a / b),
            (Real::Exact(a), Real::Float(b)) => {
                if a.is_zero() {
                    Real::zero()
                } else {
                    Real::Float(rational_to_float(a, b.precision()) / b)
                }
            }
            (Real::Float(a), Real::Exact(b)) => {
                if b.is_one() {
                    Real::Float(a.clone())
                } else {
                    Real::Float(a / rational_to_float(b, a.precision()))
                }
            }
        }
    }

    /// Parses "p/q", integers and decimals with an optional exponent, exactly.
    pub fn parse_rational(s: &str) -> Result<BigRational> {
        let t = s.trim();
        let bad = || Error::InvalidInput(format!("cannot parse number {s:?}"));
        if t.is_empty() {
            return Err(bad());
        }
        if let Some((n, d)) = t.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(Error::InvalidInput(format!("zero denominator in {s:?}")));
            }
            return Ok(BigRational::new(n, d));
        }
        let (mant, exp) = match t.find(['e', 'E']) {
            Some(i) => {
                let e: i64 = t[i + 1..].parse().map_err(|_| bad())?;
                (&t[..i], e)
            }
            None => (t, 0),
        };
        let (neg, mant) = match mant.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, mant.strip_prefix('+').unwrap_or(mant)),
        };
        let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
        if ip.is_empty() && fp.is_empty() {
            return Err(bad());
        }
        if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{ip}{fp}");
        let mut n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| bad())? };
        if neg {
            n = -n;
        }
        let scale = exp - fp.len() as i64;
        if scale.unsigned_abs() > 100_000 {
            return Err(bad());
        }
        let ten = BigInt::from(10);
        Ok(if scale >= 0 {
            BigRational::from_integer(n * num_traits::pow(ten, scale as usize))
        } else {
            BigRational::new(n, num_traits::pow(ten, (-scale) as usize))
        })
    }

    /// Decimal string: "p/q" for rationals, scientific notation with every
    /// significant digit for floats.
    pub fn to_decimal_string(&self) -> String {
        match self {
            Real::Exact(q) => format_rational(q),
            Real::Float(f) => format_float(f),
        }
    }
}

pub fn format_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn format_float(f: &BigFloat) -> String {
    if f.repr().significand().is_zero() {
        return "0".into();
    }
    let d = f.clone().with_base::<10>().value();
    let r = d.repr();
    let sig = r.significand().to_string();
    let (neg, digits) = match sig.strip_prefix('-') {
        Some(s) => (true, s.to_string()),
        None => (false, sig.clone()),
    };
    let digits = digits.trim_end_matches('0');
    let trimmed = sig.trim_start_matches('-').len() - digits.len();
    let exp10 = r.exponent() + trimmed as isize + digits.len() as isize - 1;
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    out.push_str(&digits[..1]);
    if digits.len() > 1 {
        out.push('.');
        out.push_str(&digits[1..]);
    }
    if exp10 != 0 {
        out.push_str(&format!("e{exp10}"));
    }
    out
}

/// Continued-fraction convergents of `x` whose denominators stay below 2^max_den_bits.
pub fn convergents(x: &BigRational, max_den_bits: u64) -> Vec<BigRational> {
    let mut out = Vec::new();
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut rem = x.clone();
    for _ in 0..4096 {
        let a = rem.floor().to_integer();
        let h2 = &a * &h1 + &h0;
        let k2 = &a * &k1 + &k0;
        if k2.bits() > max_den_bits {
            break;
        }
        out.push(BigRational::new(h2.clone(), k2.clone()));
        h0 = std::mem::replace(&mut h1, h2);
        k0 = std::mem::replace(&mut k1, k2);
        let frac = &rem - BigRational::from_integer(a);
        if frac.is_zero() {
            break;
        }
        rem = frac.recip();
    }
    out
}

impl PartialEq for Real {
    fn eq(&self, other: &Real) -> bool {
        self.cmp_value(other) == Ordering::Equal
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

impl From<BigRational> for Real {
    fn from(q: BigRational) -> Real {
        Real::Exact(q)
    }
}

impl From<BigFloat> for Real {
    fn from(f: BigFloat) -> Real {
        Real::Float(f)
    }
}

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        match self {
            Real::Exact(q) => Real::Exact(-q),
            Real::Float(f) => Real::Float(-f.clone()),
        }
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        match self {
            Real::Exact(q) => Real::Exact(-q),
            Real::Float(f) => Real::Float(-f),
        }
    }
}

macro_rules! real_binop {
    ($tr:ident, $m:ident, $imp:ident) => {
        impl $tr<&Real> for &Real {
            type Output = Real;
            fn $m(self, o: &Real) -> Real {
                self.$imp(o)
            }
        }
        impl $tr<Real> for Real {
            type Output = Real;
            fn $m(self, o: Real) -> Real {
                self.$imp(&o)
            }
        }
        impl $tr<&Real> for Real {
            type Output = Real;
            fn $m(self, o: &Real) -> Real {
                self.$imp(o)
            }
        }
    };
}

real_binop!(Add, add, add_ref);
real_binop!(Sub, sub, sub_ref);
real_binop!(Mul, mul, mul_ref);
real_binop!(Div, div, div_ref);

impl serde::Serialize for Real {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_decimal_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn int_roundtrip() {
        for v in [0i64, 1, -1, 255, -256, i64::MAX, i64::MIN + 1] {
            let b = BigInt::from(v);
            assert_eq!(to_bigint(&to_ibig(&b)), b);
        }
    }

    #[test]
    fn float_rational_roundtrip() {
        let x = rational_to_float(&q(1, 3), 256);
        let r = float_to_rational(&x);
        let diff = (&r - q(1, 3)).abs();
        assert!(diff < q(1, 1) / BigRational::from_integer(BigInt::one() << 250usize));
    }

    #[test]
    fn parses_numbers() {
        assert_eq!(Real::parse_rational("3/6").unwrap(), q(1, 2));
        assert_eq!(Real::parse_rational("-5").unwrap(), q(-5, 1));
        assert_eq!(Real::parse_rational("0.25").unwrap(), q(1, 4));
        assert_eq!(Real::parse_rational("-1.5e-1").unwrap(), q(-3, 20));
        assert_eq!(Real::parse_rational("2E2").unwrap(), q(200, 1));
        assert!(Real::parse_rational("1/0").is_err());
        assert!(Real::parse_rational("abc").is_err());
        assert!(Real::parse_rational(".").is_err());
    }

    #[test]
    fn mixed_arithmetic_promotes() {
        let a = Real::from_ratio(1, 3);
        let b = Real::Float(rational_to_float(&q(2, 3), 128));
        let c = &a + &b;
        assert_eq!(c.precision(), Some(128));
        assert!((c.to_f64() - 1.0).abs() < 1e-30);
        assert!((&a * &Real::zero()).is_exact_zero());
    }

    #[test]
    fn ln_abs_handles_huge_values() {
        let big = Real::from_i64(3).powi(5000);
        assert!((big.ln_abs() - 5000.0 * 3f64.ln()).abs() < 1e-9);
        let small = big.recip();
        assert!((small.ln_abs() + 5000.0 * 3f64.ln()).abs() < 1e-9);
        let f = Real::Float(big.to_float(256));
        assert!((f.ln_abs() - 5000.0 * 3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn decimal_formatting() {
        assert_eq!(Real::from_ratio(-6, 4).to_decimal_string(), "-3/2");
        assert_eq!(Real::from_i64(7).to_decimal_string(), "7");
        let h = Real::Float(rational_to_float(&q(1, 2), 64));
        assert_eq!(h.to_decimal_string(), "5e-1");
        let t = Real::Float(rational_to_float(&q(1, 3), 64));
        assert!(t.to_decimal_string().starts_with("3.3333333333333333"));
        let big = Real::Float(rational_to_float(&q(1234, 1), 64));
        assert_eq!(big.to_decimal_string(), "1.234e3");
    }

    #[test]
    fn sqrt_exact_when_square() {
        assert_eq!(Real::from_ratio(9, 4).sqrt(64), Real::from_ratio(3, 2));
        assert!(Real::from_i64(2).sqrt(64).precision().is_some());
    }

    #[test]
    fn convergents_recover_rationals() {
        let x = float_to_rational(&rational_to_float(&q(-7, 13), 200));
        let c = convergents(&x, 40);
        assert!(c.contains(&q(-7, 13)));
    }
}
