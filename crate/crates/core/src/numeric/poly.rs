use std::ops::{Add, Mul, Neg, Sub};

use super::precision::PrecisionContext;
use super::scalar::Scalar;

/// Polynomial with ascending coefficients; the zero polynomial has none.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<Scalar>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Scalar>) -> Polynomial {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Polynomial {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: Scalar) -> Polynomial {
        Polynomial::new(vec![c])
    }

    pub fn one() -> Polynomial {
        Polynomial::constant(Scalar::one())
    }

    pub fn from_i64(c: &[i64]) -> Polynomial {
        Polynomial::new(c.iter().map(|&v| Scalar::from_i64(v)).collect())
    }

    pub fn monomial(c: Scalar, k: usize) -> Polynomial {
        let mut v = vec![Scalar::zero(); k];
        v.push(c);
        Polynomial::new(v)
    }

    /// Monic product of (z - r)^mult.
    pub fn from_roots(roots: &[(Scalar, usize)]) -> Polynomial {
        let mut p = Polynomial::one();
        for (r, mult) in roots {
            let f = Polynomial::new(vec![-r, Scalar::one()]);
            for _ in 0..*mult {
                p = &p * &f;
            }
        }
        p
    }

    /// Product of (1 - z/zeta)^mult; equals 1 at the origin.
    pub fn from_zeros_normalized(zeros: &[(Scalar, usize)]) -> Polynomial {
        let mut p = Polynomial::one();
        for (z, mult) in zeros {
            let f = Polynomial::new(vec![Scalar::one(), -z.recip()]);
            for _ in 0..*mult {
                p = &p * &f;
            }
        }
        p
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Scalar> {
        self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Scalar {
        self.coeffs.get(i).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        self.coeffs.iter().all(Scalar::is_exact)
    }

    pub fn leading(&self) -> Option<&Scalar> {
        self.coeffs.last()
    }

    pub fn eval(&self, z: &Scalar) -> Scalar {
        let mut acc = Scalar::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * z) + c;
        }
        acc
    }

    /// Value and first derivative by a double Horner pass.
    pub fn eval_with_derivative(&self, z: &Scalar) -> (Scalar, Scalar) {
        let mut p = Scalar::zero();
        let mut dp = Scalar::zero();
        for c in self.coeffs.iter().rev() {
            dp = &(&dp * z) + &p;
            p = &(&p * z) + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * &Scalar::from_i64(i as i64))
                .collect(),
        )
    }

    pub fn scale(&self, c: &Scalar) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Division by z - lambda: quotient and remainder p(lambda).
    pub fn deflate_linear(&self, lambda: &Scalar) -> (Polynomial, Scalar) {
        if self.coeffs.is_empty() {
            return (Polynomial::zero(), Scalar::zero());
        }
        let n = self.coeffs.len();
        let mut q = vec![Scalar::zero(); n - 1];
        let mut acc = Scalar::zero();
        for i in (0..n).rev() {
            acc = &(&acc * lambda) + &self.coeffs[i];
            if i > 0 {
                q[i - 1] = acc.clone();
            }
        }
        (Polynomial::new(q), acc)
    }

    /// Euclidean division. Panics on a zero divisor.
    pub fn div_rem(&self, d: &Polynomial) -> (Polynomial, Polynomial) {
        let dd = d.degree().expect("division by zero polynomial");
        let lead = d.coeffs[dd].clone();
        let mut r = self.coeffs.clone();
        if r.len() <= dd {
            return (Polynomial::zero(), self.clone());
        }
        let mut q = vec![Scalar::zero(); r.len() - dd];
        for k in (0..q.len()).rev() {
            let c = &r[k + dd] / &lead;
            for j in 0..=dd {
                r[k + j] = &r[k + j] - &(&c * &d.coeffs[j]);
            }
            q[k] = c;
        }
        r.truncate(dd);
        (Polynomial::new(q), Polynomial::new(r))
    }

    /// z^d p(1/z) for d >= degree.
    pub fn reversed(&self, d: usize) -> Polynomial {
        let mut v = vec![Scalar::zero(); d + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            assert!(i <= d, "reversal degree below polynomial degree");
            v[d - i] = c.clone();
        }
        Polynomial::new(v)
    }

    /// Terms of degree at most `deg`.
    pub fn truncate(&self, deg: usize) -> Polynomial {
        Polynomial::new(self.coeffs.iter().take(deg + 1).cloned().collect())
    }

    pub fn promote(&self, ctx: &PrecisionContext) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| c.promote(ctx)).collect())
    }

    pub fn to_float(&self, bits: usize) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| c.to_float(bits)).collect())
    }

    /// Largest ln|a_i|.
    pub fn max_ln_abs(&self) -> f64 {
        self.coeffs.iter().map(Scalar::ln_abs).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Max-norm of the coefficient difference, in f64.
    pub fn distance(&self, other: &Polynomial) -> f64 {
        (self - other).max_ln_abs().exp()
    }

    pub fn to_c64(&self) -> Vec<(f64, f64)> {
        self.coeffs.iter().map(Scalar::to_c64).collect()
    }
}

/// Serialized as the coefficient list, constant term first.
impl serde::Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coeffs.serialize(s)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, o: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(o.coeffs.len());
        Polynomial::new((0..n).map(|i| &self.coeff(i) + &o.coeff(i)).collect())
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, o: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(o.coeffs.len());
        Polynomial::new((0..n).map(|i| &self.coeff(i) - &o.coeff(i)).collect())
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, o: &Polynomial) -> Polynomial {
        if self.is_zero() || o.is_zero() {
            return Polynomial::zero();
        }
        let mut v = vec![Scalar::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                v[i + j] = &v[i + j] + &(a * b);
            }
        }
        Polynomial::new(v)
    }
}
