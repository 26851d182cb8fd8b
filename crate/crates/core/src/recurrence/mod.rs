//! Linear recurrences f_n + sum_j alpha_{n,j} f_{n-j} = 0 with variable coefficients.

mod buslaev;
mod radius;
mod sg;
mod solve;

use std::fmt;
use std::sync::Arc;

pub use buslaev::{buslaev_classify, BuslaevClassification};
pub use radius::{estimate_radius, RadiusEstimate, RadiusMethod, MIN_SAMPLES};
pub use sg::{sg_bounds, SgBound};
pub use solve::{backward_solve, forward_solve, Solution};
pub(crate) use solve::forward_with_table;

use crate::error::{Error, Result};
use crate::numeric::{Polynomial, PrecisionContext, Scalar};

/// Rows past this index are not validated eagerly for rule-based providers.
const VALIDATION_HORIZON: usize = 256;

/// Decaying correction r(n) in alpha_{n,j} = base_j + scale_j r(n).
#[derive(Clone, Debug, PartialEq)]
pub enum Perturbation {
    InverseN,
    Geometric(Scalar),
    /// r(n) for n = m, m+1, ...; the last entry is held past the end.
    Table(Vec<Scalar>),
}

impl Perturbation {
    fn at(&self, n: usize, order: usize) -> Scalar {
        match self {
            Perturbation::InverseN => Scalar::from_ratio(1, n as i64),
            Perturbation::Geometric(rho) => rho.powi(n as u64),
            Perturbation::Table(v) => {
                let i = n.saturating_sub(order).min(v.len().saturating_sub(1));
                v.get(i).cloned().unwrap_or_else(Scalar::zero)
            }
        }
    }
}

pub type CoeffRule = Arc<dyn Fn(usize) -> Vec<Scalar> + Send + Sync>;

/// Source of the coefficient rows (alpha_{n,1}, ..., alpha_{n,m}).
#[derive(Clone)]
pub enum CoeffProvider {
    Constant(Vec<Scalar>),
    /// Row i holds the coefficients at n = m + i; the last row is held past the end.
    Table(Vec<Vec<Scalar>>),
    Perturbed { base: Vec<Scalar>, scale: Vec<Scalar>, kind: Vec<Perturbation> },
    Rule(CoeffRule),
}

impl fmt::Debug for CoeffProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoeffProvider::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            CoeffProvider::Table(t) => write!(f, "Table({} rows)", t.len()),
            CoeffProvider::Perturbed { base, scale, kind } => f
                .debug_struct("Perturbed")
                .field("base", base)
                .field("scale", scale)
                .field("kind", kind)
                .finish(),
            CoeffProvider::Rule(_) => f.write_str("Rule(..)"),
        }
    }
}

/// How fast the coefficients approach their limit, as far as the provider knows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateHint {
    Constant,
    Geometric,
    NonGeometric,
    Unknown,
}

#[derive(Clone, Debug)]
pub struct Recurrence {
    order: usize,
    provider: CoeffProvider,
    limit: Option<Vec<Scalar>>,
    rate: RateHint,
    pub label: String,
}

fn fmt_row(v: &[Scalar]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl Recurrence {
    pub fn constant(coeffs: Vec<Scalar>) -> Result<Recurrence> {
        let m = coeffs.len();
        if m == 0 {
            return Err(Error::InvalidOrder);
        }
        if coeffs[m - 1].is_zero() {
            return Err(Error::DegenerateCoefficient { n: m });
        }
        Ok(Recurrence {
            order: m,
            label: format!("constant[{}]", fmt_row(&coeffs)),
            limit: Some(coeffs.clone()),
            provider: CoeffProvider::Constant(coeffs),
            rate: RateHint::Constant,
        })
    }

    pub fn constant_i64(coeffs: &[i64]) -> Result<Recurrence> {
        Recurrence::constant(coeffs.iter().map(|&c| Scalar::from_i64(c)).collect())
    }

    pub fn table(order: usize, rows: Vec<Vec<Scalar>>) -> Result<Recurrence> {
        if order == 0 {
            return Err(Error::InvalidOrder);
        }
        if rows.is_empty() {
            return Err(Error::InvalidInput("coefficient table has no rows".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != order {
                return Err(Error::InvalidInput(format!(
                    "row {} of the coefficient table has {} entries, expected {order}",
                    i,
                    r.len()
                )));
            }
            if r[order - 1].is_zero() {
                return Err(Error::DegenerateCoefficient { n: order + i });
            }
        }
        Ok(Recurrence {
            order,
            label: format!("table[order {order}, {} rows]", rows.len()),
            limit: rows.last().cloned(),
            provider: CoeffProvider::Table(rows),
            rate: RateHint::Unknown,
        })
    }

    pub fn perturbed(base: Vec<Scalar>, scale: Vec<Scalar>, kind: Vec<Perturbation>) -> Result<Recurrence> {
        let m = base.len();
        if m == 0 {
            return Err(Error::InvalidOrder);
        }
        if scale.len() != m || kind.len() != m {
            return Err(Error::InvalidInput("perturbation arrays must match the order".into()));
        }
        let mut decays = true;
        let mut geometric = true;
        for (s, k) in scale.iter().zip(&kind) {
            if s.is_zero() {
                continue;
            }
            match k {
                Perturbation::InverseN => geometric = false,
                Perturbation::Geometric(rho) => {
                    if rho.abs_f64() >= 1.0 {
                        decays = false;
                    }
                }
                Perturbation::Table(_) => geometric = false,
            }
        }
        let limit = if decays {
            let mut l = base.clone();
            for (j, (s, k)) in scale.iter().zip(&kind).enumerate() {
                if let Perturbation::Table(v) = k {
                    if let Some(last) = v.last() {
                        l[j] = &l[j] + &(s * last);
                    }
                }
            }
            Some(l)
        } else {
            None
        };
        let rate = if !decays {
            RateHint::Unknown
        } else if geometric {
            RateHint::Geometric
        } else if kind.iter().zip(&scale).any(|(k, s)| matches!(k, Perturbation::Table(_)) && !s.is_zero()) {
            RateHint::Unknown
        } else {
            RateHint::NonGeometric
        };
        let rec = Recurrence {
            order: m,
            label: format!("perturbed[{}]", fmt_row(&base)),
            provider: CoeffProvider::Perturbed { base, scale, kind },
            limit,
            rate,
        };
        for n in m..m + VALIDATION_HORIZON {
            rec.coeffs_at(n)?;
        }
        Ok(rec)
    }

    /// Coefficients from a closure; the limit and rate, when known, are supplied separately.
    pub fn rule(order: usize, rule: CoeffRule, limit: Option<Vec<Scalar>>, rate: RateHint) -> Result<Recurrence> {
        if order == 0 {
            return Err(Error::InvalidOrder);
        }
        let rec = Recurrence {
            order,
            provider: CoeffProvider::Rule(rule),
            limit,
            rate,
            label: format!("rule[order {order}]"),
        };
        for n in order..order + VALIDATION_HORIZON {
            rec.coeffs_at(n)?;
        }
        Ok(rec)
    }

    pub fn with_limit(mut self, limit: Vec<Scalar>) -> Result<Recurrence> {
        if limit.len() != self.order {
            return Err(Error::InvalidInput("limit length must equal the order".into()));
        }
        self.limit = Some(limit);
        Ok(self)
    }

    pub(crate) fn set_limit(&mut self, limit: Option<Vec<Scalar>>) {
        self.limit = limit;
    }

    pub fn with_rate(mut self, rate: RateHint) -> Recurrence {
        self.rate = rate;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Recurrence {
        self.label = label.into();
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn provider(&self) -> &CoeffProvider {
        &self.provider
    }

    pub fn rate_hint(&self) -> RateHint {
        self.rate
    }

    pub fn limit(&self) -> Option<&[Scalar]> {
        self.limit.as_deref()
    }

    /// (alpha_{n,1}, ..., alpha_{n,m}) for n >= m.
    pub fn coeffs_at(&self, n: usize) -> Result<Vec<Scalar>> {
        let m = self.order;
        if n < m {
            return Err(Error::InvalidInput(format!("coefficients requested at n = {n} < order {m}")));
        }
        let row = match &self.provider {
            CoeffProvider::Constant(c) => c.clone(),
            CoeffProvider::Table(t) => t[(n - m).min(t.len() - 1)].clone(),
            CoeffProvider::Perturbed { base, scale, kind } => base
                .iter()
                .zip(scale)
                .zip(kind)
                .map(|((b, s), k)| if s.is_zero() { b.clone() } else { b + &(s * &k.at(n, m)) })
                .collect(),
            CoeffProvider::Rule(f) => {
                let r = f(n);
                if r.len() != m {
                    return Err(Error::InvalidInput(format!(
                        "coefficient rule returned {} entries at n = {n}, expected {m}",
                        r.len()
                    )));
                }
                r
            }
        };
        if row[m - 1].is_zero() {
            return Err(Error::DegenerateCoefficient { n });
        }
        Ok(row)
    }

    /// Rows for n in [m, n_max] converted to the arithmetic of `ctx`.
    pub fn coeff_table(&self, n_max: usize, ctx: &PrecisionContext) -> Result<Vec<Vec<Scalar>>> {
        (self.order..=n_max.max(self.order))
            .map(|n| Ok(self.coeffs_at(n)?.iter().map(|c| c.promote(ctx)).collect()))
            .collect()
    }

    /// Freezes rows m..=n_max into a table recurrence in the arithmetic of `ctx`.
    pub fn materialize(&self, n_max: usize, ctx: &PrecisionContext) -> Result<Recurrence> {
        let rows = self.coeff_table(n_max, ctx)?;
        let mut r = Recurrence::table(self.order, rows)?;
        r.limit = self.limit.clone();
        r.rate = self.rate;
        r.label = self.label.clone();
        Ok(r)
    }
}

/// Largest relative residual |f_n + sum_j alpha_{n,j} f_{n-j}| / (|f_n| + sum_j |alpha_{n,j} f_{n-j}|)
/// over n in [m, len-1]. Exactly 0 when every relation holds exactly.
pub fn recurrence_residual(rec: &Recurrence, f: &[Scalar]) -> Result<f64> {
    let m = rec.order();
    let mut worst: f64 = 0.0;
    for n in m..f.len() {
        let row = rec.coeffs_at(n)?;
        let mut acc = f[n].clone();
        let mut scale = vec![f[n].ln_abs()];
        for (j, a) in row.iter().enumerate() {
            let t = a * &f[n - 1 - j];
            scale.push(t.ln_abs());
            acc = &acc + &t;
        }
        if acc.is_zero() {
            continue;
        }
        let s = scale.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max((acc.ln_abs() - s).exp());
    }
    Ok(worst)
}

/// alpha_n(z) = 1 + sum_j alpha_{n,j} z^j.
pub fn alpha_poly_at(rec: &Recurrence, n: usize) -> Result<Polynomial> {
    let mut v = vec![Scalar::one()];
    v.extend(rec.coeffs_at(n)?);
    Ok(Polynomial::new(v))
}

/// Limit characteristic polynomial p(z) = z^m + alpha_1 z^{m-1} + ... + alpha_m
/// together with its reversal alpha(z) = 1 + alpha_1 z + ... + alpha_m z^m.
pub fn char_poly(rec: &Recurrence) -> Result<(Polynomial, Polynomial)> {
    let l = rec.limit().ok_or(Error::LimitUnknown)?;
    let mut a = vec![Scalar::one()];
    a.extend(l.iter().cloned());
    let alpha = Polynomial::new(a);
    let p = alpha.reversed(rec.order());
    Ok((p, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_char_poly() {
        let r = Recurrence::constant_i64(&[-5, 6]).unwrap();
        let (p, a) = char_poly(&r).unwrap();
        assert_eq!(p, Polynomial::from_i64(&[6, -5, 1]));
        assert_eq!(a, Polynomial::from_i64(&[1, -5, 6]));
    }

    #[test]
    fn rejects_degenerate() {
        assert_eq!(Recurrence::constant_i64(&[1, 0]).unwrap_err(), Error::DegenerateCoefficient { n: 2 });
        assert_eq!(Recurrence::constant(vec![]).unwrap_err(), Error::InvalidOrder);
        let rows = vec![vec![Scalar::one(), Scalar::one()], vec![Scalar::one(), Scalar::zero()]];
        assert_eq!(Recurrence::table(2, rows).unwrap_err(), Error::DegenerateCoefficient { n: 3 });
    }

    #[test]
    fn perturbed_values_and_limit() {
        let r = Recurrence::perturbed(
            vec![Scalar::from_i64(-5), Scalar::from_i64(6)],
            vec![Scalar::one(), -Scalar::one()],
            vec![Perturbation::InverseN, Perturbation::InverseN],
        )
        .unwrap();
        assert_eq!(r.coeffs_at(4).unwrap(), vec![Scalar::from_ratio(-19, 4), Scalar::from_ratio(23, 4)]);
        assert_eq!(r.limit().unwrap(), &[Scalar::from_i64(-5), Scalar::from_i64(6)]);
        assert_eq!(r.rate_hint(), RateHint::NonGeometric);
    }

    #[test]
    fn rule_without_limit() {
        let rule: CoeffRule = Arc::new(|n| vec![Scalar::from_i64(-(n as i64))]);
        let r = Recurrence::rule(1, rule, None, RateHint::Unknown).unwrap();
        assert_eq!(char_poly(&r).unwrap_err(), Error::LimitUnknown);
    }

    #[test]
    fn table_holds_last_row() {
        let rows = vec![vec![Scalar::from_i64(-1)], vec![Scalar::from_i64(-2)]];
        let r = Recurrence::table(1, rows).unwrap();
        assert_eq!(r.coeffs_at(1).unwrap()[0], Scalar::from_i64(-1));
        assert_eq!(r.coeffs_at(50).unwrap()[0], Scalar::from_i64(-2));
        assert_eq!(r.limit().unwrap()[0], Scalar::from_i64(-2));
    }
}
