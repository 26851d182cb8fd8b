//! Scaling, deflation and antidifference transforms of recurrences and their solutions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{Polynomial, PrecisionContext, Scalar};
use crate::recurrence::{char_poly, estimate_radius, RadiusMethod, Recurrence};

/// Recurrence satisfied by F_n = f_n / gamma_n.
#[derive(Clone, Debug)]
pub struct ScaledRecurrence {
    pub recurrence: Recurrence,
    pub gamma: Vec<Scalar>,
    /// gamma_{n+1}/gamma_n -> 1 numerically, so the limit coefficients carry over.
    pub limit_preserved: bool,
}

impl ScaledRecurrence {
    pub fn map_solution(&self, f: &[Scalar]) -> Vec<Scalar> {
        f.iter().zip(&self.gamma).map(|(x, g)| x / g).collect()
    }

    pub fn unmap_solution(&self, big_f: &[Scalar]) -> Vec<Scalar> {
        big_f.iter().zip(&self.gamma).map(|(x, g)| x * g).collect()
    }
}

/// alpha'_{n,j} = alpha_{n,j} gamma_{n-j} / gamma_n for n in [m, len(gamma) - 1].
pub fn scale_recurrence(rec: &Recurrence, gamma: &[Scalar], ctx: &PrecisionContext) -> Result<ScaledRecurrence> {
    let m = rec.order();
    if let Some(n) = gamma.iter().position(Scalar::is_zero) {
        return Err(Error::ZeroGamma { n });
    }
    if gamma.len() <= m {
        return Err(Error::InsufficientData(format!("scaling needs more than {m} values of gamma")));
    }
    let gamma: Vec<Scalar> = gamma.iter().map(|g| g.promote(ctx)).collect();
    let last = gamma.len() - 1;
    let mut rows = Vec::with_capacity(last + 1 - m);
    for n in m..=last {
        let a = rec.coeffs_at(n)?;
        let inv = gamma[n].recip();
        rows.push(
            a.iter()
                .enumerate()
                .map(|(j, x)| &(&x.promote(ctx) * &gamma[n - 1 - j]) * &inv)
                .collect(),
        );
    }
    let q0 = last - (last - m) / 4;
    let devs: Vec<f64> = (q0..last)
        .map(|n| (&(&gamma[n + 1] / &gamma[n]) - &Scalar::one()).abs_f64())
        .collect();
    let limit_preserved = match (devs.first(), devs.last()) {
        (Some(a), Some(b)) => *b < 0.05 && b <= a,
        _ => false,
    };
    let mut derived = Recurrence::table(m, rows)?.with_label(format!("scaled({})", rec.label));
    derived.set_limit(if limit_preserved { rec.limit().map(<[Scalar]>::to_vec) } else { None });
    Ok(ScaledRecurrence { recurrence: derived, gamma, limit_preserved })
}

/// Order m-1 recurrence satisfied by F_n = f_{n+1} - lambda f_n.
#[derive(Clone, Debug)]
pub struct DeflatedRecurrence {
    /// `None` when the source has order 1: the relation degenerates to F = 0.
    pub recurrence: Option<Recurrence>,
    pub lambda: Scalar,
    /// beta_{n,1..m-1} for n = m, ..., n_max.
    pub betas: Vec<Vec<Scalar>>,
    /// alpha_{n,1..m} for n = m, ..., n_max.
    alphas: Vec<Vec<Scalar>>,
    source_limit: Option<Vec<Scalar>>,
    pub max_residual: f64,
}

impl DeflatedRecurrence {
    pub fn map_solution(&self, f: &[Scalar]) -> Vec<Scalar> {
        f.windows(2).map(|w| &w[1] - &(&self.lambda * &w[0])).collect()
    }
}

/// Deflates by a common root lambda of the characteristic polynomials p_n.
///
/// `residual_tol` bounds |p_n(lambda)| relative to the size of its terms; the
/// default is 0 in exact mode and ten times the zero threshold otherwise.
pub fn deflate_recurrence(
    rec: &Recurrence,
    lambda: &Scalar,
    n_max: usize,
    residual_tol: Option<f64>,
    ctx: &PrecisionContext,
) -> Result<DeflatedRecurrence> {
    if lambda.is_zero() {
        return Err(Error::ZeroLambda);
    }
    let m = rec.order();
    let tol = residual_tol.unwrap_or_else(|| ctx.residual_tol());
    let lam = lambda.promote(ctx);
    let mut betas = Vec::new();
    let mut alphas = Vec::new();
    let mut worst: f64 = 0.0;
    for n in m..=n_max.max(m) {
        let a: Vec<Scalar> = rec.coeffs_at(n)?.iter().map(|x| x.promote(ctx)).collect();
        let mut b = Vec::with_capacity(m);
        let mut prev = Scalar::one();
        for aj in &a {
            prev = aj + &(&lam * &prev);
            b.push(prev.clone());
        }
        let closure = b.pop().unwrap();
        if !closure.is_zero() {
            let mut terms = vec![lam.powi(m as u64).ln_abs()];
            for (j, aj) in a.iter().enumerate() {
                terms.push(aj.ln_abs() + (m - 1 - j) as f64 * lam.ln_abs());
            }
            let scale = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            // |beta_{n,m}| = |p_n(lambda)| / |lambda|^m
            let rel = (closure.ln_abs() + m as f64 * lam.ln_abs() - scale).exp();
            if rel > tol {
                return Err(Error::NotASolution { n, residual: rel });
            }
            worst = worst.max(rel);
        }
        betas.push(b);
        alphas.push(a);
    }
    let recurrence = if m >= 2 {
        Some(Recurrence::table(m - 1, betas.clone())?.with_label(format!("deflated({})", rec.label)))
    } else {
        None
    };
    let recurrence = recurrence.map(|mut r| {
        r.set_limit(rec.limit().map(|l| {
            let mut out = Vec::with_capacity(m - 1);
            let mut prev = Scalar::one();
            for aj in &l[..m - 1] {
                prev = &aj.promote(ctx) + &(&lam * &prev);
                out.push(prev.clone());
            }
            out
        }));
        r
    });
    Ok(DeflatedRecurrence {
        recurrence,
        lambda: lam,
        betas,
        alphas,
        source_limit: rec.limit().map(<[Scalar]>::to_vec),
        max_residual: worst,
    })
}

/// Largest coefficient deviation between (z - lambda)(z^{m-1} + beta_1 z^{m-2} + ...)
/// and the limit characteristic polynomial, with the betas read from the last row.
pub fn conexion_check(def: &DeflatedRecurrence) -> f64 {
    let m = def.alphas.first().map_or(0, Vec::len);
    let beta = def.betas.last().cloned().unwrap_or_default();
    let alpha = def
        .source_limit
        .clone()
        .unwrap_or_else(|| def.alphas.last().cloned().unwrap_or_default());
    let mut q = vec![Scalar::one()];
    q.extend(beta);
    let q = Polynomial::new(q).reversed(m.saturating_sub(1));
    let lin = Polynomial::new(vec![-&def.lambda, Scalar::one()]);
    let prod = &lin * &q;
    let mut a = vec![Scalar::one()];
    a.extend(alpha);
    let p = Polynomial::new(a).reversed(m);
    let d = &prod - &p;
    if d.is_zero() {
        0.0
    } else {
        d.max_ln_abs().exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AntidifferenceBranch {
    /// f_n = -sum_k F_{n+k} / lambda^{k+1}, for F growing slower than lambda^n.
    Sol1,
    /// f_n = sum_{i<n} lambda^{n-1-i} F_i, for F growing faster than lambda^n.
    Sol2,
}

#[derive(Clone, Debug)]
pub struct Antidifference {
    pub values: Vec<Scalar>,
    pub branch: AntidifferenceBranch,
    /// Growth rate of F used for the branch choice.
    pub mu: f64,
    /// Leading entries accurate to the truncation tolerance of the context.
    pub reliable_len: usize,
}

/// Solves f_{n+1} - lambda f_n = F_n.
///
/// Sol1 is summed backwards from the last available term, which makes the
/// relation hold exactly for n < len - 1; only the leading `reliable_len`
/// entries agree with the infinite sum to 10^(-bits/4).
pub fn antidifference(f: &[Scalar], lambda: &Scalar, mu: Option<f64>, ctx: &PrecisionContext) -> Result<Antidifference> {
    antidifference_with_tol(f, lambda, mu, ctx, ctx.truncation_tol_ln())
}

/// As [`antidifference`], with the truncation tolerance given as a natural log.
pub(crate) fn antidifference_with_tol(
    f: &[Scalar],
    lambda: &Scalar,
    mu: Option<f64>,
    ctx: &PrecisionContext,
    tol_ln: f64,
) -> Result<Antidifference> {
    if lambda.is_zero() {
        return Err(Error::ZeroLambda);
    }
    let lam = lambda.promote(ctx);
    let lam_abs = lam.abs_f64();
    if f.iter().all(Scalar::is_zero) {
        let mut values = vec![Scalar::zero_in(ctx); f.len() + 1];
        values.truncate(f.len().max(1));
        return Ok(Antidifference { values, branch: AntidifferenceBranch::Sol2, mu: 0.0, reliable_len: f.len() });
    }
    let mu = match mu {
        Some(v) => v,
        None => 1.0 / estimate_radius(f, RadiusMethod::RootTestRegression)?.value,
    };
    let margin = ctx.tol.modulus_margin;
    if (mu - lam_abs).abs() < margin * lam_abs {
        return Err(Error::ModulusCollision { mu, lambda_abs: lam_abs });
    }
    let fc: Vec<Scalar> = f.iter().map(|x| x.promote(ctx)).collect();
    if mu > lam_abs {
        let mut values = Vec::with_capacity(fc.len() + 1);
        let mut acc = Scalar::zero_in(ctx);
        values.push(acc.clone());
        for x in &fc {
            acc = &(&lam * &acc) + x;
            values.push(acc.clone());
        }
        let n = values.len();
        return Ok(Antidifference { values, branch: AntidifferenceBranch::Sol2, mu, reliable_len: n });
    }
    let len = fc.len();
    let inv = lam.recip();
    let mut values = vec![Scalar::zero(); len];
    let mut h = Scalar::zero_in(ctx);
    for n in (0..len).rev() {
        h = &(&h - &fc[n]) * &inv;
        values[n] = h.clone();
    }
    let ratio = (mu * (1.0 + margin)).min(lam_abs * (1.0 - margin / 2.0)) / lam_abs;
    let k = if ratio <= 0.0 { 1 } else { (tol_ln / ratio.ln()).ceil().max(1.0) as usize };
    if k >= len {
        return Err(Error::InsufficientTail);
    }
    Ok(Antidifference { values, branch: AntidifferenceBranch::Sol1, mu, reliable_len: len - k })
}

/// Characteristic roots of the limit, lambda_k = 1/zeta_k.
pub fn limit_char_roots(rec: &Recurrence, ctx: &PrecisionContext) -> Result<crate::numeric::RootSet> {
    let (p, _) = char_poly(rec)?;
    crate::numeric::poly_roots(&p, ctx)
}
