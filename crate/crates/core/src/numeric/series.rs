use super::poly::Polynomial;
use super::precision::PrecisionContext;
use super::scalar::Scalar;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum SeriesSource {
    Explicit,
    RationalForm { numerator: Polynomial, denominator: Polynomial },
    RecurrenceGenerated { recurrence: String, initial_conditions: Vec<Scalar> },
}

/// Truncated power series: coefficients c_0..c_N with N the truncation order.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSeries {
    coeffs: Vec<Scalar>,
    pub source: SeriesSource,
}

impl PowerSeries {
    pub fn explicit(coeffs: Vec<Scalar>) -> Result<PowerSeries> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("a power series needs at least one coefficient".into()));
        }
        Ok(PowerSeries { coeffs, source: SeriesSource::Explicit })
    }

    pub(crate) fn with_source(coeffs: Vec<Scalar>, source: SeriesSource) -> PowerSeries {
        debug_assert!(!coeffs.is_empty());
        PowerSeries { coeffs, source }
    }

    pub fn from_i64(c: &[i64]) -> PowerSeries {
        PowerSeries::explicit(c.iter().map(|&v| Scalar::from_i64(v)).collect()).expect("non-empty")
    }

    pub fn truncation_order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Scalar> {
        self.coeffs
    }

    /// c_n, or zero past the truncation order.
    pub fn coeff(&self, n: usize) -> Scalar {
        self.coeffs.get(n).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Scalar::is_zero)
    }

    pub fn promote(&self, ctx: &PrecisionContext) -> PowerSeries {
        PowerSeries {
            coeffs: self.coeffs.iter().map(|c| c.promote(ctx)).collect(),
            source: self.source.clone(),
        }
    }

    /// First `len` coefficients.
    pub fn truncated(&self, len: usize) -> PowerSeries {
        let len = len.clamp(1, self.coeffs.len());
        PowerSeries { coeffs: self.coeffs[..len].to_vec(), source: self.source.clone() }
    }

    /// z^nu f, keeping the truncation order.
    pub fn mul_z_pow(&self, nu: usize) -> PowerSeries {
        let n = self.coeffs.len();
        let mut v = vec![Scalar::zero(); nu.min(n)];
        v.extend(self.coeffs.iter().take(n.saturating_sub(nu)).cloned());
        PowerSeries { coeffs: v, source: SeriesSource::Explicit }
    }

    /// Coefficients c_{n0}, c_{n0+1}, ...
    pub fn shifted(&self, n0: usize) -> PowerSeries {
        let start = n0.min(self.coeffs.len() - 1);
        PowerSeries { coeffs: self.coeffs[start..].to_vec(), source: SeriesSource::Explicit }
    }

    /// Sum of c_i f_i truncated to the shortest input.
    pub fn linear_combination(terms: &[(Scalar, &PowerSeries)]) -> Result<PowerSeries> {
        let len = terms
            .iter()
            .map(|(_, f)| f.len())
            .min()
            .ok_or_else(|| Error::InvalidInput("empty linear combination".into()))?;
        let mut v = vec![Scalar::zero(); len];
        for (c, f) in terms {
            if c.is_zero() {
                continue;
            }
            for (acc, x) in v.iter_mut().zip(f.coeffs.iter()) {
                *acc = &*acc + &(c * x);
            }
        }
        Ok(PowerSeries { coeffs: v, source: SeriesSource::Explicit })
    }

    /// Taylor polynomial of degree at most `deg`.
    pub fn taylor_polynomial(&self, deg: usize) -> Polynomial {
        Polynomial::new(self.coeffs.iter().take(deg + 1).cloned().collect())
    }
}

/// Taylor coefficients c_0..c_N of num/den.
pub fn series_from_rational(
    num: &Polynomial,
    den: &Polynomial,
    n: usize,
    ctx: &PrecisionContext,
) -> Result<PowerSeries> {
    let d0 = den.coeff(0);
    if d0.is_zero() {
        return Err(Error::DenominatorVanishesAtOrigin);
    }
    let num_c = num.promote(ctx);
    let den_c = den.promote(ctx);
    let d0 = den_c.coeff(0);
    let dd: Vec<Scalar> = den_c.coeffs().to_vec();
    let mut c: Vec<Scalar> = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mut acc = num_c.coeff(k);
        for j in 1..dd.len().min(k + 1) {
            if dd[j].is_zero() {
                continue;
            }
            acc = &acc - &(&dd[j] * &c[k - j]);
        }
        let v = if d0.is_one() { acc } else { &acc / &d0 };
        c.push(if ctx.is_exact() { v } else { v.promote(ctx) });
    }
    Ok(PowerSeries {
        coeffs: c,
        source: SeriesSource::RationalForm { numerator: num.clone(), denominator: den.clone() },
    })
}

/// Product f p, truncated to the order of f.
pub fn series_poly_mul(f: &PowerSeries, p: &Polynomial) -> PowerSeries {
    let n = f.len();
    let mut v = vec![Scalar::zero(); n];
    for (j, a) in p.coeffs().iter().enumerate() {
        if a.is_zero() || j >= n {
            continue;
        }
        for k in j..n {
            v[k] = &v[k] + &(a * &f.coeffs[k - j]);
        }
    }
    PowerSeries { coeffs: v, source: SeriesSource::Explicit }
}
