use crate::error::{Error, Result};
use crate::numeric::{PrecisionContext, Scalar};
use crate::recurrence::{estimate_radius, RadiusMethod, Recurrence, Solution, MIN_SAMPLES};
use crate::transforms::{antidifference_with_tol, deflate_recurrence, scale_recurrence, AntidifferenceBranch};

#[derive(Clone, Debug)]
pub(crate) struct Lift {
    pub member: usize,
    /// lifted = member - c * pilot
    pub c: Scalar,
    pub len: usize,
    pub mu: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct EvgrafovPlan {
    pub pilot: usize,
    pub shift_n0: usize,
    pub lifts: Vec<Lift>,
    pub deflation_residual: f64,
}

/// Member whose ratio sequence f_{n-1}/f_n varies least over the last quarter.
fn pick_pilot(members: &[&[Scalar]]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, f) in members.iter().enumerate() {
        let len = f.len();
        let mut ratios = Vec::new();
        let mut broken = false;
        for n in (3 * len / 4).max(1)..len {
            if f[n].is_zero() {
                broken = true;
                break;
            }
            ratios.push((&f[n - 1] / &f[n]).to_c64());
        }
        if broken || ratios.len() < 2 {
            continue;
        }
        let k = ratios.len() as f64;
        let mean = ratios.iter().fold((0.0, 0.0), |a, r| (a.0 + r.0 / k, a.1 + r.1 / k));
        let var = ratios.iter().map(|r| (r.0 - mean.0).powi(2) + (r.1 - mean.1).powi(2)).sum::<f64>() / k;
        let rel = var / (mean.0 * mean.0 + mean.1 * mean.1).max(f64::MIN_POSITIVE);
        if rel < best.1 {
            best = (i, rel);
        }
    }
    best.0
}

/// One past the last coefficient of `p` that is zero or negligible next to its neighbours.
fn first_index_after_zeros(p: &[Scalar], ctx: &PrecisionContext) -> usize {
    let thr = ctx.float_ln_zero_threshold();
    let mut last_zero = None;
    for n in 0..p.len() {
        let l = p[n].ln_abs();
        let nb = [n.checked_sub(1), Some(n + 1)]
            .iter()
            .flatten()
            .filter(|&&k| k < p.len())
            .map(|&k| p[k].ln_abs())
            .fold(f64::NEG_INFINITY, f64::max);
        if l == f64::NEG_INFINITY || (!ctx.is_exact() && l < nb + thr) {
            last_zero = Some(n);
        }
    }
    last_zero.map_or(0, |z| z + 1)
}

/// Scale by the pilot, deflate by lambda = 1/zeta and antidifference the
/// other members. `rows[i]` are the coefficients at n = m + i.
pub(crate) fn plan(
    rows: &[Vec<Scalar>],
    m: usize,
    members: &[&[Scalar]],
    zeta: &Scalar,
    ctx: &PrecisionContext,
    trunc_tol_ln: f64,
    deflation_tol: f64,
) -> Result<EvgrafovPlan> {
    if members.len() <= 1 {
        return Ok(EvgrafovPlan { pilot: 0, shift_n0: 0, lifts: Vec::new(), deflation_residual: 0.0 });
    }
    let len = members.iter().map(|f| f.len()).min().unwrap_or(0);
    let members: Vec<&[Scalar]> = members.iter().map(|f| &f[..len]).collect();
    let pilot = pick_pilot(&members);
    let p = members[pilot];
    let n0 = first_index_after_zeros(p, ctx);
    if len < n0 + MIN_SAMPLES || len < n0 + m + 2 {
        return Err(Error::ZeroPilotCoefficient);
    }
    let last = len - 1 - n0;
    let shifted_rows: Vec<Vec<Scalar>> = rows[n0..n0 + last + 1 - m].to_vec();
    let shifted = Recurrence::table(m, shifted_rows)?;
    let zeta = zeta.promote(ctx);
    let lambda = zeta.recip();
    let mut gamma = Vec::with_capacity(last + 1);
    let mut zp = Scalar::one_in(ctx);
    for k in 0..=last {
        if k > 0 {
            zp = &zp * &zeta;
        }
        gamma.push(&p[n0 + k].promote(ctx) * &zp);
    }
    let scaled = scale_recurrence(&shifted, &gamma, ctx)?;
    let deflated = deflate_recurrence(&scaled.recurrence, &lambda, last, Some(deflation_tol), ctx)?;
    let mut lifts = Vec::with_capacity(members.len() - 1);
    for (i, f) in members.iter().enumerate() {
        if i == pilot {
            continue;
        }
        let hat: Vec<Scalar> = f[n0..].iter().map(|x| x.promote(ctx)).collect();
        let g = scaled.map_solution(&hat);
        let big_f = deflated.map_solution(&g);
        let mu = match estimate_radius(&big_f, RadiusMethod::RootTestRegression) {
            Ok(e) => 1.0 / e.value,
            Err(Error::AllZeroTail) => {
                return Err(Error::LiftFailed(format!("member {i} is proportional to the pilot")));
            }
            Err(e) => return Err(e),
        };
        let anti = antidifference_with_tol(&big_f, &lambda, Some(mu), ctx, trunc_tol_ln)?;
        if anti.branch != AntidifferenceBranch::Sol1 {
            return Err(Error::LiftFailed(format!(
                "member {i} grows faster than the circle (mu = {mu}, |lambda| = {})",
                lambda.abs_f64()
            )));
        }
        let c = &g[0] - &anti.values[0];
        lifts.push(Lift { member: i, c, len: n0 + anti.reliable_len, mu });
    }
    Ok(EvgrafovPlan { pilot, shift_n0: n0, lifts, deflation_residual: deflated.max_residual })
}

#[derive(Clone, Debug)]
pub struct EvgrafovOutcome {
    pub kept: Solution,
    pub pilot_index: usize,
    pub lifted: Vec<Solution>,
    /// Multiple of the pilot removed from each lifted member.
    pub constants: Vec<Scalar>,
    pub shift_n0: usize,
    pub deflation_residual: f64,
    pub mus: Vec<f64>,
}

/// Separates members that share the circle of a single simple zero `zeta`:
/// the pilot keeps the singularity, the others are lifted past the circle by
/// subtracting the right multiple of the pilot.
pub fn evgrafov_step(rec: &Recurrence, members: &[Solution], zeta: &Scalar, ctx: &PrecisionContext) -> Result<EvgrafovOutcome> {
    if members.is_empty() {
        return Err(Error::InvalidInput("no members on the circle".into()));
    }
    let m = rec.order();
    let len = members.iter().map(Solution::len).min().unwrap_or(0);
    if len <= m {
        return Err(Error::InsufficientData(format!("{len} coefficients for an order-{m} recurrence")));
    }
    let rows = rec.coeff_table(len - 1, ctx)?;
    let series: Vec<Vec<Scalar>> = members.iter().map(|s| s.coeffs().iter().map(|x| x.promote(ctx)).collect()).collect();
    let refs: Vec<&[Scalar]> = series.iter().map(Vec::as_slice).collect();
    let defl_tol = if ctx.is_exact() { 0.0 } else { (-(ctx.bits() as f64) / 2.0).exp2().max(ctx.residual_tol()) };
    let plan = plan(&rows, m, &refs, zeta, ctx, ctx.truncation_tol_ln(), defl_tol)?;
    let pilot = &series[plan.pilot];
    let mut lifted = Vec::with_capacity(plan.lifts.len());
    let mut constants = Vec::new();
    let mut mus = Vec::new();
    let radius = zeta.abs_f64();
    for l in &plan.lifts {
        let coeffs: Vec<Scalar> = (0..l.len).map(|n| &series[l.member][n] - &(&l.c * &pilot[n])).collect();
        if coeffs.len() >= MIN_SAMPLES {
            let est = estimate_radius(&coeffs, RadiusMethod::RootTestRegression)?;
            if est.value <= radius * (1.0 + ctx.tol.circle_tol) {
                return Err(Error::LiftFailed(format!("lifted radius {} does not exceed {radius}", est.value)));
            }
        }
        let init = coeffs[..m.min(coeffs.len())].to_vec();
        let src = &members[l.member];
        lifted.push(Solution {
            series: crate::numeric::PowerSeries::explicit(coeffs)?,
            initial_conditions: init,
            recurrence: src.recurrence.clone(),
        });
        constants.push(l.c.clone());
        mus.push(l.mu);
    }
    Ok(EvgrafovOutcome {
        kept: members[plan.pilot].clone(),
        pilot_index: plan.pilot,
        lifted,
        constants,
        shift_n0: plan.shift_n0,
        deflation_residual: plan.deflation_residual,
        mus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recurrence::forward_solve;

    #[test]
    fn separates_the_two_geometric_solutions() {
        let ex = PrecisionContext::exact();
        let rec = Recurrence::constant_i64(&[-5, 6]).unwrap();
        let e1 = forward_solve(&rec, &[Scalar::one(), Scalar::zero()], 500, &ex).unwrap();
        let e2 = forward_solve(&rec, &[Scalar::zero(), Scalar::one()], 500, &ex).unwrap();
        let out = evgrafov_step(&rec, &[e1, e2], &Scalar::from_ratio(1, 3), &ex).unwrap();
        assert_eq!(out.lifted.len(), 1);
        assert!(out.shift_n0 > 0);
        let kept = estimate_radius(out.kept.coeffs(), RadiusMethod::RootTestRegression).unwrap();
        assert!((kept.value - 1.0 / 3.0).abs() < 1e-6);
        let lifted = estimate_radius(out.lifted[0].coeffs(), RadiusMethod::RootTestRegression).unwrap();
        assert!((lifted.value - 0.5).abs() < 1e-6, "{}", lifted.value);
        assert!(out.deflation_residual == 0.0);
    }

    #[test]
    fn single_member_is_kept() {
        let ex = PrecisionContext::exact();
        let rec = Recurrence::constant_i64(&[-5, 6]).unwrap();
        let e1 = forward_solve(&rec, &[Scalar::one(), Scalar::one()], 100, &ex).unwrap();
        let out = evgrafov_step(&rec, &[e1.clone()], &Scalar::from_ratio(1, 3), &ex).unwrap();
        assert!(out.lifted.is_empty());
        assert_eq!(out.kept.coeffs(), e1.coeffs());
    }

    #[test]
    fn vanishing_pilot_is_rejected() {
        let ex = PrecisionContext::exact();
        let rec = Recurrence::constant_i64(&[-5, 6]).unwrap();
        let z = Solution {
            series: crate::numeric::PowerSeries::explicit(vec![Scalar::zero(); 60]).unwrap(),
            initial_conditions: vec![Scalar::zero(); 2],
            recurrence: String::new(),
        };
        let r = evgrafov_step(&rec, &[z.clone(), z], &Scalar::from_ratio(1, 3), &ex);
        assert!(matches!(r, Err(Error::ZeroPilotCoefficient)));
    }
}
