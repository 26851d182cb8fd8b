use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::BigRational;

use super::precision::PrecisionContext;
use super::real::Real;

/// Complex number with exact or big-float parts.
///
/// An exactly zero imaginary part is kept as an exact zero so that real data
/// stays on the cheap real code paths.
#[derive(Clone, Debug)]
pub struct Scalar {
    pub re: Real,
    pub im: Real,
}

impl Scalar {
    pub fn new(re: Real, im: Real) -> Scalar {
        let im = if im.is_zero() { Real::zero() } else { im };
        Scalar { re, im }
    }

    pub fn real(re: Real) -> Scalar {
        Scalar { re, im: Real::zero() }
    }

    pub fn zero() -> Scalar {
        Scalar::real(Real::zero())
    }

    pub fn one() -> Scalar {
        Scalar::real(Real::one())
    }

    pub fn i() -> Scalar {
        Scalar { re: Real::zero(), im: Real::one() }
    }

    pub fn from_i64(v: i64) -> Scalar {
        Scalar::real(Real::from_i64(v))
    }

    pub fn from_ratio(n: i64, d: i64) -> Scalar {
        Scalar::real(Real::from_ratio(n, d))
    }

    pub fn from_rational(q: BigRational) -> Scalar {
        Scalar::real(Real::Exact(q))
    }

    pub fn from_f64(re: f64, im: f64, bits: usize) -> Scalar {
        let imr = if im == 0.0 { Real::zero() } else { Real::from_f64(im, bits) };
        Scalar { re: Real::from_f64(re, bits), im: imr }
    }

    /// Zero in the arithmetic of `ctx` (exact zero, or a float zero carrying precision).
    pub fn zero_in(ctx: &PrecisionContext) -> Scalar {
        if ctx.is_exact() {
            Scalar::zero()
        } else {
            Scalar::real(Real::float_zero(ctx.bits()))
        }
    }

    pub fn one_in(ctx: &PrecisionContext) -> Scalar {
        Scalar::one().promote(ctx)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_exact_zero(&self) -> bool {
        self.re.is_exact_zero() && self.im.is_exact_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn is_exact(&self) -> bool {
        self.re.is_exact() && self.im.is_exact()
    }

    /// Smaller significand size of the two parts, `None` when both are exact.
    pub fn precision(&self) -> Option<usize> {
        match (self.re.precision(), self.im.precision()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// Converts into the arithmetic of `ctx`.
    pub fn promote(&self, ctx: &PrecisionContext) -> Scalar {
        if ctx.is_exact() {
            self.clone()
        } else {
            self.to_float(ctx.bits())
        }
    }

    /// Float copy at `bits`; an exactly zero imaginary part stays exact.
    pub fn to_float(&self, bits: usize) -> Scalar {
        let re = Real::Float(self.re.to_float(bits));
        let im = if self.im.is_zero() { Real::zero() } else { Real::Float(self.im.to_float(bits)) };
        Scalar { re, im }
    }

    pub fn conj(&self) -> Scalar {
        Scalar { re: self.re.clone(), im: -&self.im }
    }

    pub fn norm_sqr(&self) -> Real {
        if self.im.is_zero() {
            &self.re * &self.re
        } else {
            &(&self.re * &self.re) + &(&self.im * &self.im)
        }
    }

    /// ln|z| without leaving the big-number domain; minus infinity at zero.
    pub fn ln_abs(&self) -> f64 {
        let a = self.re.ln_abs();
        if self.im.is_zero() {
            return a;
        }
        let b = self.im.ln_abs();
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        if hi == f64::NEG_INFINITY {
            return hi;
        }
        hi + 0.5 * (2.0 * (lo - hi)).exp().ln_1p()
    }

    pub fn abs_f64(&self) -> f64 {
        self.ln_abs().exp()
    }

    pub fn to_c64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }

    pub fn arg_f64(&self) -> f64 {
        let (x, y) = self.to_c64();
        y.atan2(x)
    }

    pub fn recip(&self) -> Scalar {
        if self.im.is_zero() {
            return Scalar::real(self.re.recip());
        }
        let d = self.norm_sqr();
        Scalar { re: &self.re / &d, im: -(&self.im / &d) }
    }

    pub fn powi(&self, mut e: u64) -> Scalar {
        if self.im.is_zero() {
            return Scalar::real(self.re.powi(e));
        }
        let mut base = self.clone();
        let mut acc = Scalar::one();
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

    pub fn scale_real(&self, r: &Real) -> Scalar {
        if self.im.is_zero() {
            Scalar::real(&self.re * r)
        } else {
            Scalar { re: &self.re * r, im: &self.im * r }
        }
    }

    /// |self - other| <= tol * max(|self|, |other|, floor), on logs.
    pub fn close_to(&self, other: &Scalar, rel_tol: f64) -> bool {
        let d = (self - other).ln_abs();
        let s = self.ln_abs().max(other.ln_abs()).max(-700.0);
        d <= s + rel_tol.ln()
    }

    fn add_ref(&self, o: &Scalar) -> Scalar {
        if o.im.is_zero() && self.im.is_zero() {
            return Scalar::real(&self.re + &o.re);
        }
        Scalar::new(&self.re + &o.re, &self.im + &o.im)
    }

    fn sub_ref(&self, o: &Scalar) -> Scalar {
        if o.im.is_zero() && self.im.is_zero() {
            return Scalar::real(&self.re - &o.re);
        }
        Scalar::new(&self.re - &o.re, &self.im - &o.im)
    }

    fn mul_ref(&self, o: &Scalar) -> Scalar {
        match (self.im.is_zero(), o.im.is_zero()) {
            (true, true) => Scalar::real(&self.re * &o.re),
            (true, false) => Scalar::new(&self.re * &o.re, &self.re * &o.im),
            (false, true) => Scalar::new(&self.re * &o.re, &self.im * &o.re),
            (false, false) => Scalar::new(
                &(&self.re * &o.re) - &(&self.im * &o.im),
                &(&self.re * &o.im) + &(&self.im * &o.re),
            ),
        }
    }

    fn div_ref(&self, o: &Scalar) -> Scalar {
        if o.im.is_zero() {
            if self.im.is_zero() {
                return Scalar::real(&self.re / &o.re);
            }
            return Scalar::new(&self.re / &o.re, &self.im / &o.re);
        }
        let d = o.norm_sqr();
        let re = &(&self.re * &o.re) + &(&self.im * &o.im);
        let im = &(&self.im * &o.re) - &(&self.re * &o.im);
        Scalar::new(&re / &d, &im / &d)
    }
}

impl PartialEq for Scalar {
    fn eq(&self, o: &Scalar) -> bool {
        self.re == o.re && self.im == o.im
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.im.signum() < 0 {
            write!(f, "{}-{}i", self.re, -&self.im)
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

impl From<Real> for Scalar {
    fn from(r: Real) -> Scalar {
        Scalar::real(r)
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar { re: -&self.re, im: -&self.im }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar { re: -self.re, im: -self.im }
    }
}

macro_rules! scalar_binop {
    ($tr:ident, $m:ident, $imp:ident) => {
        impl $tr<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $m(self, o: &Scalar) -> Scalar {
                self.$imp(o)
            }
        }
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, o: Scalar) -> Scalar {
                self.$imp(&o)
            }
        }
        impl $tr<&Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, o: &Scalar) -> Scalar {
                self.$imp(o)
            }
        }
    };
}

scalar_binop!(Add, add, add_ref);
scalar_binop!(Sub, sub, sub_ref);
scalar_binop!(Mul, mul, mul_ref);
scalar_binop!(Div, div, div_ref);

/// Real values serialize as a single string, complex ones as {"re", "im"}.
impl serde::Serialize for Scalar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        if self.im.is_zero() {
            return self.re.serialize(s);
        }
        let mut st = s.serialize_struct("Scalar", 2)?;
        st.serialize_field("re", &self.re)?;
        st.serialize_field("im", &self.im)?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_arithmetic_exact() {
        let a = Scalar::new(Real::from_i64(1), Real::from_i64(2));
        let b = Scalar::new(Real::from_i64(3), Real::from_i64(-1));
        assert_eq!(&a * &b, Scalar::new(Real::from_i64(5), Real::from_i64(5)));
        assert_eq!(&(&a * &b) / &b, a);
        assert_eq!(&a * &a.recip(), Scalar::one());
        assert_eq!(Scalar::i().powi(2), Scalar::from_i64(-1));
    }

    #[test]
    fn ln_abs_of_complex() {
        let a = Scalar::new(Real::from_i64(3), Real::from_i64(4));
        assert!((a.ln_abs() - 5f64.ln()).abs() < 1e-14);
        assert_eq!(Scalar::zero().ln_abs(), f64::NEG_INFINITY);
    }

    #[test]
    fn promotion_keeps_real_fast_path() {
        let ctx = PrecisionContext::bigfloat(128).unwrap();
        let a = Scalar::from_ratio(1, 3).promote(&ctx);
        assert!(a.im.is_exact_zero());
        assert_eq!(a.re.precision(), Some(128));
    }
}
