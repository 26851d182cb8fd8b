use rayon::prelude::*;
use serde::Serialize;

use super::circles::CircleGroup;
use crate::error::{Error, Result};
use crate::numeric::linalg::least_squares;
use crate::numeric::{PowerSeries, PrecisionContext, Real, Scalar};
use crate::recurrence::{estimate_radius, RadiusEstimate, RadiusMethod, MIN_SAMPLES};

/// Sum_{s=1..tau} a_{-s} (z - pole)^{-s}; `coefficients[s-1]` is a_{-s}.
#[derive(Clone, Debug, Serialize)]
pub struct PrincipalPart {
    pub pole: Scalar,
    pub coefficients: Vec<Scalar>,
    pub fit_residual: f64,
}

impl PrincipalPart {
    /// Highest s with a_{-s} above `ln_tol` relative to the normalization scale, if any.
    pub fn order_above(&self, ln_scale: &[f64], ln_tol: f64) -> Option<usize> {
        (1..=self.coefficients.len())
            .rev()
            .find(|&s| self.coefficients[s - 1].ln_abs() - ln_scale[s - 1] > ln_tol)
    }

    /// Taylor coefficients 0..len of the principal part.
    pub fn series(&self, len: usize, bits: usize) -> Vec<Scalar> {
        let mut out = vec![Scalar::zero(); len];
        let zeta = self.pole.to_float(bits);
        let inv = zeta.recip();
        for (i, a) in self.coefficients.iter().enumerate() {
            let s = i + 1;
            if a.is_zero() {
                continue;
            }
            // a (-1)^s binom(n+s-1, s-1) zeta^{-n-s}
            let mut term = a * &(-&inv).powi(s as u64);
            for (n, slot) in out.iter_mut().enumerate() {
                if n > 0 {
                    term = &(&term * &inv) * &Scalar::from_ratio((n + s - 1) as i64, n as i64);
                }
                *slot = &*slot + &term;
            }
        }
        out
    }
}

pub(crate) fn pow2(k: i64) -> Real {
    let p = Real::from_i64(2).powi(k.unsigned_abs());
    if k >= 0 {
        p
    } else {
        p.recip()
    }
}

pub(crate) fn ln_to_pow2(ln: f64) -> i64 {
    if !ln.is_finite() {
        return 0;
    }
    (ln / std::f64::consts::LN_2).round() as i64
}

pub(crate) fn ln_binom(n: usize, k: usize) -> f64 {
    (1..=k).map(|i| ((n - k + i) as f64).ln() - (i as f64).ln()).sum()
}

/// Tolerance on the weighted relative residual of a fit whose window starts
/// at `n_start`: the analytic remainder decays like (radius/outer)^n.
pub(crate) fn fit_tolerance(radius: f64, outer: f64, n_start: usize, bits: usize) -> f64 {
    let floor = (-(bits as f64) / 3.0).exp2();
    let contamination = if outer.is_finite() && outer > radius {
        1e3 * (n_start as f64 * (radius / outer).ln()).exp()
    } else {
        0.0
    };
    contamination.clamp(floor, 1e-3)
}

#[derive(Clone, Debug)]
pub(crate) struct FitOutcome {
    pub parts: Vec<PrincipalPart>,
    pub residual: f64,
    pub tol: f64,
    /// log of max |w^n f_n| over the window.
    pub data_ln: f64,
    pub window: (usize, usize),
    /// The series has no detectable singularity on the circle.
    pub analytic: bool,
}

impl FitOutcome {
    /// log of binom(n_end+s-1, s-1) |zeta|^{-s}, the size that a unit a_{-s}
    /// contributes to the weighted tail.
    pub fn row_scale_ln(&self, zeta: &Scalar, s: usize) -> f64 {
        ln_binom(self.window.1 + s - 1, s - 1) - s as f64 * zeta.ln_abs()
    }
}

/// Radius from the part of `c` that stands clear of the rounding noise
/// `noise_ln`. `None` when fewer than the minimum number of coefficients do,
/// i.e. no singularity is visible at this precision.
pub(crate) fn radius_above_noise(c: &[Scalar], noise_ln: &[f64]) -> Option<RadiusEstimate> {
    let margin = 8.0 * std::f64::consts::LN_2;
    let cleaned: Vec<Scalar> = c
        .iter()
        .zip(noise_ln)
        .map(|(x, nz)| if x.ln_abs() > nz + margin { x.clone() } else { Scalar::zero() })
        .collect();
    let last = cleaned.iter().rposition(|x| !x.is_zero())?;
    if last + 1 < MIN_SAMPLES {
        return None;
    }
    estimate_radius(&cleaned[..=last], RadiusMethod::RootTestRegression).ok()
}

/// Least-squares fit of the polar parts at the group zeros over the last
/// third of `f`, with the `nuisance` zeros outside the circle as extra
/// columns that absorb the analytic remainder.
pub(crate) fn fit_principal(
    f: &[Scalar],
    group: &CircleGroup,
    nuisance: &[(Scalar, usize)],
    outer: f64,
    bits: usize,
    circle_tol: f64,
) -> Result<FitOutcome> {
    let len = f.len();
    let width = len / 3;
    if width < MIN_SAMPLES / 2 {
        return Err(Error::InsufficientData(format!("{len} coefficients are too few for a principal part fit")));
    }
    let start = len - width;
    let end = len - 1;
    let tol = fit_tolerance(group.radius, outer, start, bits);
    let w = Real::from_f64(group.radius, bits);
    let own = group.zero_pairs();
    let cols: Vec<(Scalar, usize, bool)> = own
        .iter()
        .flat_map(|(z, t)| (1..=*t).map(move |s| (z.clone(), s, true)))
        .chain(nuisance.iter().flat_map(|(z, t)| (1..=*t).map(move |s| (z.clone(), s, false))))
        .collect();

    let mut wpow = Scalar::real(w.promote(false, bits).powi(start as u64));
    let wr = Scalar::real(w.promote(false, bits));
    let mut data = Vec::with_capacity(width);
    for n in start..=end {
        if n > start {
            wpow = &wpow * &wr;
        }
        data.push(&f[n].to_float(bits) * &wpow);
    }
    let data_ln = data.iter().map(Scalar::ln_abs).fold(f64::NEG_INFINITY, f64::max);
    let zero_parts = || -> Vec<PrincipalPart> {
        own.iter()
            .map(|(z, t)| PrincipalPart { pole: z.clone(), coefficients: vec![Scalar::zero(); *t], fit_residual: 0.0 })
            .collect()
    };
    if data_ln == f64::NEG_INFINITY {
        return Ok(FitOutcome { parts: zero_parts(), residual: 0.0, tol, data_ln, window: (start, end), analytic: true });
    }
    let kb = ln_to_pow2(data_ln);
    let bscale = Scalar::real(pow2(-kb));
    let b: Vec<Scalar> = data.iter().map(|x| x * &bscale).collect();

    // Column (zeta, s): (-1/zeta)^s binom(n+s-1, s-1) (w/zeta)^n; nuisance
    // columns are taken relative to n = start to keep them representable.
    let columns: Vec<(Vec<Scalar>, i64, Scalar)> = cols
        .par_iter()
        .map(|(z, s, is_own)| {
            let zf = z.to_float(bits);
            let u = &Scalar::real(w.promote(false, bits)) / &zf;
            let lead = (-&zf.recip()).powi(*s as u64);
            let mut up = if *is_own { u.powi(start as u64) } else { Scalar::one() };
            let mut col = Vec::with_capacity(width);
            for n in start..=end {
                if n > start {
                    up = &up * &u;
                }
                let mut binom = Scalar::one();
                for i in 1..*s {
                    binom = &binom * &Scalar::from_ratio((n + i) as i64, i as i64);
                }
                col.push(&(&lead * &binom) * &up);
            }
            let cl = col.iter().map(Scalar::ln_abs).fold(f64::NEG_INFINITY, f64::max);
            let kc = ln_to_pow2(cl);
            let cs = Scalar::real(pow2(-kc));
            let col: Vec<Scalar> = col.iter().map(|x| x * &cs).collect();
            (col, kc, lead)
        })
        .collect();
    let a: Vec<Vec<Scalar>> = (0..width).map(|i| columns.iter().map(|c| c.0[i].clone()).collect()).collect();
    let Some((x, residual)) = least_squares(&a, &b, bits) else {
        return Err(Error::PoorFit { radius: group.radius, residual: f64::INFINITY });
    };
    let mut parts = Vec::with_capacity(own.len());
    let mut k = 0;
    for (z, t) in &own {
        let mut coefficients = Vec::with_capacity(*t);
        for _ in 0..*t {
            let kc = columns[k].1;
            coefficients.push(x[k].scale_real(&pow2(kb - kc)));
            k += 1;
        }
        parts.push(PrincipalPart { pole: z.clone(), coefficients, fit_residual: residual });
    }
    let mut analytic = false;
    if residual > tol {
        let est = estimate_radius(f, RadiusMethod::RootTestRegression).ok();
        match est {
            Some(e) if e.value > (group.radius * outer).sqrt().max(group.radius * (1.0 + circle_tol)) => {
                analytic = true
            }
            _ => return Err(Error::PoorFit { radius: group.radius, residual }),
        }
    }
    Ok(FitOutcome { parts, residual, tol, data_ln, window: (start, end), analytic })
}

/// Principal parts of `f` at the zeros of `group`, fitted on the last third of
/// its coefficients weighted by radius^n.
///
/// Fails with `PoorFit` when the weighted relative residual exceeds the
/// contamination expected from singularities at `outer_radius` and the series
/// does have a singularity on the circle.
pub fn extract_principal_parts(
    f: &PowerSeries,
    group: &CircleGroup,
    outer_radius: f64,
    ctx: &PrecisionContext,
) -> Result<Vec<PrincipalPart>> {
    if outer_radius <= group.radius {
        return Err(Error::InvalidInput("outer radius must exceed the circle radius".into()));
    }
    Ok(fit_principal(f.coeffs(), group, &[], outer_radius, ctx.bits(), ctx.tol.circle_tol)?.parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{series_from_rational, Polynomial, Root};

    fn group(zs: &[(Scalar, usize)]) -> CircleGroup {
        CircleGroup {
            radius: zs[0].0.abs_f64(),
            zeros: zs.iter().map(|(z, t)| Root { location: z.clone(), multiplicity: *t }).collect(),
            geometric: true,
        }
    }

    fn series(num: &[i64], den: &[i64], n: usize) -> PowerSeries {
        series_from_rational(&Polynomial::from_i64(num), &Polynomial::from_i64(den), n, &PrecisionContext::exact())
            .unwrap()
    }

    #[test]
    fn simple_pole() {
        let ctx = PrecisionContext::default();
        let g = group(&[(Scalar::from_ratio(1, 2), 1)]);
        let pp = extract_principal_parts(&series(&[1], &[1, -2], 120), &g, 1.0, &ctx).unwrap();
        assert!(pp[0].coefficients[0].close_to(&Scalar::from_ratio(-1, 2), 1e-30));
    }

    #[test]
    fn double_pole() {
        let ctx = PrecisionContext::default();
        let g = group(&[(Scalar::from_ratio(1, 2), 2)]);
        let pp = extract_principal_parts(&series(&[1], &[1, -4, 4], 120), &g, 1.0, &ctx).unwrap();
        assert!(pp[0].coefficients[1].close_to(&Scalar::from_ratio(1, 4), 1e-30));
        assert!(pp[0].coefficients[0].abs_f64() < 1e-30);
    }

    #[test]
    fn analytic_on_circle() {
        let ctx = PrecisionContext::default();
        let g = group(&[(Scalar::from_ratio(1, 2), 1)]);
        let pp = extract_principal_parts(&series(&[1], &[1, -1], 120), &g, 1.0, &ctx).unwrap();
        assert!(pp[0].coefficients[0].abs_f64() < 1e-10);
    }

    #[test]
    fn contaminated_by_outer_pole() {
        let ctx = PrecisionContext::default();
        let g = group(&[(Scalar::from_ratio(1, 2), 1)]);
        // 1/(1-2z) + 1/(1-z)
        let f = series(&[2, -3], &[1, -3, 2], 240);
        let pp = extract_principal_parts(&f, &g, 1.0, &ctx).unwrap();
        assert!(pp[0].coefficients[0].close_to(&Scalar::from_ratio(-1, 2), 1e-20));
    }

    #[test]
    fn branch_point_is_a_poor_fit() {
        let ctx = PrecisionContext::default();
        let g = group(&[(Scalar::one(), 1)]);
        // sqrt(1 - z)
        let mut c = vec![Scalar::one()];
        for n in 1..300i64 {
            let prev = c.last().unwrap().clone();
            c.push(&prev * &Scalar::from_ratio(2 * n - 3, 2 * n));
        }
        let f = PowerSeries::explicit(c).unwrap();
        assert!(matches!(extract_principal_parts(&f, &g, 2.0, &ctx), Err(Error::PoorFit { .. })));
    }

    #[test]
    fn principal_series_matches_expansion() {
        let pp = PrincipalPart {
            pole: Scalar::from_ratio(1, 2),
            coefficients: vec![Scalar::zero(), Scalar::from_ratio(1, 4)],
            fit_residual: 0.0,
        };
        let s = pp.series(6, 128);
        let want = series(&[1], &[1, -4, 4], 5);
        for (a, b) in s.iter().zip(want.coeffs()) {
            assert!(a.close_to(b, 1e-30));
        }
    }
}
