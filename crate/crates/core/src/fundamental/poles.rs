use rayon::prelude::*;
use serde::Serialize;

use super::circles::CircleGroup;
use super::principal::{fit_principal, ln_binom, ln_to_pow2, pow2, FitOutcome, PrincipalPart};
use crate::error::{Error, Result};
use crate::numeric::linalg::{nullspace, rref, solve_square, Rref};
use crate::numeric::{PowerSeries, PrecisionContext, Scalar};

/// Principal-part functionals of a set of members on one circle.
///
/// Row (i, s) holds a_{-s} at zero i for every member. The normalized matrix
/// rescales rows by binom(n+s-1, s-1) |zeta|^{-s} and columns by the member's
/// tail size (both rounded to powers of two) so rank decisions are relative.
#[derive(Clone, Debug)]
pub(crate) struct CircleSystem {
    pub rows: Vec<(usize, usize)>,
    pub fits: Vec<Option<FitOutcome>>,
    pub residues: Vec<Vec<Scalar>>,
    pub normalized: Vec<Vec<Scalar>>,
    pub col_k: Vec<i64>,
    pub row_k: Vec<i64>,
    pub rank_tol_ln: f64,
    pub rref: Rref,
}

pub(crate) fn rank_tolerance_ln(fit_tol: f64, bits: usize) -> f64 {
    let floor = (-(bits as f64) / 3.0).exp2();
    (1e2 * fit_tol).clamp(floor, 1e-2).ln()
}

impl CircleSystem {
    pub fn build(
        series: &[&[Scalar]],
        on: &[bool],
        group: &CircleGroup,
        nuisance: &[(Scalar, usize)],
        outer: f64,
        bits: usize,
        circle_tol: f64,
    ) -> Result<CircleSystem> {
        let fits: Vec<Option<FitOutcome>> = series
            .par_iter()
            .zip(on.par_iter())
            .map(|(f, &o)| {
                if !o {
                    return Ok(None);
                }
                let fit = fit_principal(f, group, nuisance, outer, bits, circle_tol)?;
                Ok(if fit.analytic { None } else { Some(fit) })
            })
            .collect::<Result<_>>()?;
        let n_end = series.iter().map(|s| s.len()).max().unwrap_or(1).saturating_sub(1);
        let mut rows = Vec::new();
        let mut row_k = Vec::new();
        for (i, z) in group.zeros.iter().enumerate() {
            for s in 1..=z.multiplicity {
                rows.push((i, s));
                row_k.push(ln_to_pow2(ln_binom(n_end + s - 1, s - 1) - s as f64 * z.location.ln_abs()));
            }
        }
        let col_k: Vec<i64> = fits.iter().map(|f| f.as_ref().map_or(0, |f| ln_to_pow2(f.data_ln))).collect();
        let mut residues = vec![vec![Scalar::zero(); series.len()]; rows.len()];
        let mut normalized = residues.clone();
        for (l, fit) in fits.iter().enumerate() {
            let Some(fit) = fit else { continue };
            for (r, &(i, s)) in rows.iter().enumerate() {
                let a = fit.parts[i].coefficients[s - 1].clone();
                normalized[r][l] = a.scale_real(&pow2(row_k[r] - col_k[l]));
                residues[r][l] = a;
            }
        }
        let fit_tol = fits.iter().flatten().map(|f| f.tol).fold(0.0, f64::max);
        let rank_tol_ln = rank_tolerance_ln(fit_tol, bits);
        let rref = rref(&normalized, Some(rank_tol_ln));
        Ok(CircleSystem { rows, fits, residues, normalized, col_k, row_k, rank_tol_ln, rref })
    }

    pub fn rank(&self) -> usize {
        self.rref.rank()
    }

    fn unscale(&self, c: Vec<Scalar>) -> Vec<Scalar> {
        c.into_iter().zip(&self.col_k).map(|(x, k)| x.scale_real(&pow2(-k))).collect()
    }

    /// Combinations of the members whose functionals all vanish.
    pub fn null_combinations(&self) -> Vec<Vec<Scalar>> {
        if self.rows.is_empty() {
            return (0..self.col_k.len())
                .map(|l| (0..self.col_k.len()).map(|j| if j == l { Scalar::one() } else { Scalar::zero() }).collect())
                .collect();
        }
        nullspace(&self.normalized, Some(self.rank_tol_ln)).into_iter().map(|c| self.unscale(c)).collect()
    }

    /// Combination on the pivot members whose functionals equal
    /// (-zeta)^s at row `target` and vanish elsewhere, i.e. whose polar part
    /// on the circle is (1 - z/zeta)^{-s}.
    pub fn prescribed_combination(&self, group: &CircleGroup, target: usize) -> Option<Vec<Scalar>> {
        let pivots = &self.rref.pivots;
        if pivots.len() != self.rows.len() {
            return None;
        }
        let (i, s) = self.rows[target];
        let value = (-&group.zeros[i].location).powi(s as u64);
        let rhs: Vec<Scalar> = (0..self.rows.len())
            .map(|r| if r == target { value.scale_real(&pow2(self.row_k[r])) } else { Scalar::zero() })
            .collect();
        let sq: Vec<Vec<Scalar>> = self.normalized.iter().map(|row| pivots.iter().map(|&p| row[p].clone()).collect()).collect();
        let x = solve_square(&sq, &rhs)?;
        let mut full = vec![Scalar::zero(); self.col_k.len()];
        for (xp, &p) in x.into_iter().zip(pivots) {
            full[p] = xp;
        }
        Some(self.unscale(full))
    }
}

/// Checks that `fit` has a pole of exact order `s` at zero `i` and nothing else
/// on the circle above the rank tolerance.
pub(crate) fn certify_order(fit: &FitOutcome, i: usize, s: usize, rank_tol_ln: f64) -> bool {
    let mut ok = true;
    for (zi, part) in fit.parts.iter().enumerate() {
        for (k, a) in part.coefficients.iter().enumerate() {
            let sz = a.ln_abs() + fit.row_scale_ln(&part.pole, k + 1) - fit.data_ln;
            let big = sz > rank_tol_ln;
            if zi == i && k + 1 == s {
                ok &= big;
            } else if zi != i || k + 1 > s {
                ok &= !big;
            }
        }
    }
    ok
}

#[derive(Clone, Debug)]
pub struct KillPolesResult {
    /// Basis of the null space, as coefficient vectors over the members.
    pub combinations: Vec<Vec<Scalar>>,
    pub rank: usize,
    /// Prefix over which the combinations are free of the fit error, which
    /// grows like (outer/radius)^n past the fitting window.
    pub valid_len: usize,
    /// a_{-s} of every member, one row per (zero, s).
    pub residues: Vec<Vec<Scalar>>,
    pub fits: Vec<Vec<PrincipalPart>>,
}

fn combine(members: &[PowerSeries], c: &[Scalar]) -> Result<PowerSeries> {
    let terms: Vec<(Scalar, &PowerSeries)> = c.iter().cloned().zip(members.iter()).collect();
    PowerSeries::linear_combination(&terms)
}

/// Length over which a combination fitted on the last third of `len`
/// coefficients keeps the contamination from singularities at `outer` below
/// 2^(-bits/4) of its own size.
pub(crate) fn contamination_free_len(len: usize, radius: f64, outer: f64, bits: usize) -> usize {
    let q = (outer / radius).ln();
    if !q.is_finite() || q <= 0.0 {
        return len;
    }
    let start = len - len / 3;
    let ln_delta = (start as f64 * -q).max(-(bits as f64) * std::f64::consts::LN_2) + 1e3f64.ln();
    let ln_eps = -(bits as f64) / 4.0 * std::f64::consts::LN_2;
    let n = ((ln_eps - ln_delta) / q).floor();
    if n <= 0.0 {
        0
    } else {
        (n as usize).min(len)
    }
}

/// Combinations of `members` with no polar part on the circle of `group`.
pub fn kill_poles(
    members: &[PowerSeries],
    group: &CircleGroup,
    outer_radius: f64,
    ctx: &PrecisionContext,
) -> Result<KillPolesResult> {
    if !group.geometric {
        return Err(Error::CircleHypothesisViolated(format!(
            "circle of radius {} is not geometric",
            group.radius
        )));
    }
    let series: Vec<&[Scalar]> = members.iter().map(PowerSeries::coeffs).collect();
    let on = vec![true; members.len()];
    let sys = CircleSystem::build(&series, &on, group, &[], outer_radius, ctx.bits(), ctx.tol.circle_tol)?;
    let len = members.iter().map(PowerSeries::len).min().unwrap_or(0);
    let valid_len = contamination_free_len(len, group.radius, outer_radius, ctx.bits());
    Ok(KillPolesResult {
        combinations: sys.null_combinations(),
        rank: sys.rank(),
        valid_len,
        residues: sys.residues.clone(),
        fits: sys.fits.iter().map(|f| f.as_ref().map(|f| f.parts.clone()).unwrap_or_default()).collect(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PrescribedPole {
    #[serde(skip)]
    pub series: PowerSeries,
    pub combination: Vec<Scalar>,
    pub zeta: Scalar,
    pub order: usize,
    /// Principal part of the combination refitted at `zeta`.
    pub principal: PrincipalPart,
    /// The refit shows a pole of exactly this order and no other pole on the circle.
    pub certified: bool,
}

/// For every zero of multiplicity tau and every s <= tau, the combination of
/// `members` whose polar part on the circle is (1 - z/zeta)^{-s}.
pub fn prescribe_poles(
    members: &[PowerSeries],
    group: &CircleGroup,
    outer_radius: f64,
    ctx: &PrecisionContext,
) -> Result<Vec<PrescribedPole>> {
    if !group.geometric {
        return Err(Error::CircleHypothesisViolated(format!(
            "circle of radius {} is not geometric",
            group.radius
        )));
    }
    let series: Vec<&[Scalar]> = members.iter().map(PowerSeries::coeffs).collect();
    let on = vec![true; members.len()];
    let bits = ctx.bits();
    let sys = CircleSystem::build(&series, &on, group, &[], outer_radius, bits, ctx.tol.circle_tol)?;
    let expected = group.multiplicity();
    if sys.rank() < expected {
        return Err(Error::RankDeficient { radius: group.radius, rank: sys.rank(), expected });
    }
    let mut out = Vec::with_capacity(expected);
    for (t, &(i, s)) in sys.rows.iter().enumerate() {
        let c = sys
            .prescribed_combination(group, t)
            .ok_or(Error::RankDeficient { radius: group.radius, rank: sys.rank(), expected })?;
        let f = combine(members, &c)?;
        let refit = fit_principal(f.coeffs(), group, &[], outer_radius, bits, ctx.tol.circle_tol)?;
        let certified = certify_order(&refit, i, s, sys.rank_tol_ln);
        out.push(PrescribedPole {
            series: f,
            combination: c,
            zeta: group.zeros[i].location.clone(),
            order: s,
            principal: refit.parts[i].clone(),
            certified,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{series_from_rational, Polynomial, Root};
    use crate::recurrence::{estimate_radius, RadiusMethod};

    fn rat(num: &[i64], den: &[i64], n: usize) -> PowerSeries {
        series_from_rational(&Polynomial::from_i64(num), &Polynomial::from_i64(den), n, &PrecisionContext::exact())
            .unwrap()
    }

    fn group(zs: &[(Scalar, usize)]) -> CircleGroup {
        CircleGroup {
            radius: zs[0].0.abs_f64(),
            zeros: zs.iter().map(|(z, t)| Root { location: z.clone(), multiplicity: *t }).collect(),
            geometric: true,
        }
    }

    fn pm_half() -> CircleGroup {
        group(&[(Scalar::from_ratio(1, 2), 1), (Scalar::from_ratio(-1, 2), 1)])
    }

    #[test]
    fn residue_matrix_of_the_symmetric_pair() {
        let ctx = PrecisionContext::default();
        let m = [rat(&[1], &[1, 0, -4], 150), rat(&[0, 1], &[1, 0, -4], 150)];
        let k = kill_poles(&m, &pm_half(), 1.0, &ctx).unwrap();
        assert_eq!(k.rank, 2);
        assert!(k.combinations.is_empty());
        let want = [[(-1, 4), (-1, 8)], [(1, 4), (-1, 8)]];
        for (r, row) in want.iter().enumerate() {
            for (c, &(p, q)) in row.iter().enumerate() {
                assert!(k.residues[r][c].close_to(&Scalar::from_ratio(p, q), 1e-30), "{r} {c}");
            }
        }
    }

    #[test]
    fn shared_pole_is_removed() {
        let ctx = PrecisionContext::default();
        let g = group(&[(Scalar::from_ratio(1, 2), 1)]);
        let m = [rat(&[2, -3], &[1, -3, 2], 200), rat(&[1], &[1, -2], 200)];
        let k = kill_poles(&m, &g, 1.0, &ctx).unwrap();
        assert_eq!(k.rank, 1);
        assert_eq!(k.combinations.len(), 1);
        let c = &k.combinations[0];
        let ratio = &c[1] / &c[0];
        assert!(ratio.close_to(&Scalar::from_i64(-1), 1e-30));
        let f = combine(&m, c).unwrap().truncated(k.valid_len);
        assert!(k.valid_len >= 32);
        let r = estimate_radius(f.coeffs(), RadiusMethod::RootTestRegression).unwrap();
        assert!((r.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn analytic_members_have_full_null_space() {
        let ctx = PrecisionContext::default();
        let m = [rat(&[1], &[1, -1], 150), rat(&[1], &[1, 1], 150)];
        let k = kill_poles(&m, &pm_half(), 1.0, &ctx).unwrap();
        assert_eq!(k.rank, 0);
        assert_eq!(k.combinations.len(), 2);
    }

    #[test]
    fn prescribed_simple_poles() {
        let ctx = PrecisionContext::default();
        let m = [rat(&[1], &[1, 0, -4], 150), rat(&[0, 1], &[1, 0, -4], 150)];
        let p = prescribe_poles(&m, &pm_half(), 1.0, &ctx).unwrap();
        assert_eq!(p.len(), 2);
        // e1 + 2 e2 = 1/(1-2z), e1 - 2 e2 = 1/(1+2z)
        assert!(p[0].combination[0].close_to(&Scalar::one(), 1e-30));
        assert!(p[0].combination[1].close_to(&Scalar::from_i64(2), 1e-30));
        assert!(p[1].combination[0].close_to(&Scalar::one(), 1e-30));
        assert!(p[1].combination[1].close_to(&Scalar::from_i64(-2), 1e-30));
        assert!(p.iter().all(|x| x.certified && x.order == 1));
    }

    #[test]
    fn single_member_is_normalized() {
        let ctx = PrecisionContext::default();
        let g = group(&[(Scalar::from_ratio(1, 2), 1)]);
        let m = [rat(&[3], &[1, -2], 150)];
        let p = prescribe_poles(&m, &g, 1.0, &ctx).unwrap();
        assert!(p[0].combination[0].close_to(&Scalar::from_ratio(1, 3), 1e-30));
    }

    #[test]
    fn double_pole_orders() {
        let ctx = PrecisionContext::default();
        let g = group(&[(Scalar::from_ratio(1, 2), 2)]);
        let m = [rat(&[1, 1], &[1, -4, 4], 150), rat(&[0, 1], &[1, -4, 4], 150)];
        let p = prescribe_poles(&m, &g, 1.0, &ctx).unwrap();
        assert_eq!(p.iter().map(|x| x.order).collect::<Vec<_>>(), vec![1, 2]);
        assert!(p.iter().all(|x| x.certified));
        assert!(p[1].principal.coefficients[1].close_to(&Scalar::from_ratio(1, 4), 1e-20));
        assert!(p[1].principal.coefficients[0].abs_f64() < 1e-20);
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let ctx = PrecisionContext::default();
        let m = [rat(&[1], &[1, -2], 150), rat(&[2], &[1, -2], 150)];
        assert!(matches!(prescribe_poles(&m, &pm_half(), 1.0, &ctx), Err(Error::RankDeficient { rank: 1, .. })));
    }
}
