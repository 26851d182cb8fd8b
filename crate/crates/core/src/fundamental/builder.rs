use rayon::prelude::*;
use serde::Serialize;

use super::circles::{group_circles, CircleGroup, RateInfo, RateSource};
use super::evgrafov;
use super::poles::{certify_order, contamination_free_len, CircleSystem};
use super::principal::{fit_principal, radius_above_noise, PrincipalPart};
use super::provenance::{provenance_jsonl, Branch, ProvenanceRecord};
use crate::error::{Error, Result};
use crate::numeric::linalg::rref;
use crate::numeric::{
    poly_roots, poly_roots_seeded, Polynomial, PowerSeries, PrecisionContext, Root, Scalar, SeriesSource,
};
use crate::recurrence::forward_with_table;
use crate::recurrence::{char_poly, RadiusEstimate, Recurrence, Solution, MIN_SAMPLES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MemberOrigin {
    /// Polar part prescribed on a geometric circle.
    Prescribed,
    /// Pilot kept by the scale/deflate/lift step on a single-zero circle.
    Evgrafov,
    /// Pivot member kept as is because the functionals lost rank.
    RankDeficient,
}

#[derive(Clone, Debug, Serialize)]
pub struct FundamentalMember {
    #[serde(skip)]
    pub solution: Solution,
    /// Initial conditions, i.e. coordinates over the unit-initial-condition basis.
    pub coordinates: Vec<Scalar>,
    pub circle: usize,
    /// `None` when no singularity is visible above the rounding noise.
    pub radius: Option<RadiusEstimate>,
    pub singular_points: Vec<Scalar>,
    pub pole_orders: Vec<(Scalar, usize)>,
    pub principal_parts: Vec<PrincipalPart>,
    pub origin: MemberOrigin,
    /// Exact-order certificate for prescribed members; true otherwise.
    pub certified: bool,
    /// ln of the error level of each coefficient of the solution.
    #[serde(skip)]
    pub noise_ln: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CircleAccount {
    pub radius: f64,
    pub zeros: Vec<Root>,
    pub geometric: bool,
    /// Zeros on the circle counted with multiplicity.
    pub expected: usize,
    pub produced: usize,
    pub rank: Option<usize>,
    pub branch: Branch,
}

#[derive(Clone, Debug, Serialize)]
pub struct FundamentalSystem {
    pub members: Vec<FundamentalMember>,
    pub circles: Vec<CircleAccount>,
    pub provenance: Vec<ProvenanceRecord>,
    pub working_bits: usize,
    pub rate_source: RateSource,
    /// Full numerical rank of the coordinate matrix.
    pub independent: bool,
    pub warnings: Vec<String>,
}

impl FundamentalSystem {
    pub fn provenance_jsonl(&self) -> String {
        provenance_jsonl(&self.provenance)
    }
}

/// Extra margin on the projected error of a cancelled polar part.
const KILL_MARGIN_LN: f64 = 16.0 * std::f64::consts::LN_2;

#[derive(Clone, Debug)]
struct PoolMember {
    coords: Vec<Scalar>,
    series: Vec<Scalar>,
    /// Polar parts cancelled only up to the accuracy of their fit, as
    /// (ln amplitude, ln growth): |leftover_k| <= exp(amp + k growth).
    leftovers: Vec<(f64, f64)>,
}

fn add_leftover(out: &mut Vec<(f64, f64)>, amp: f64, growth: f64) {
    if !amp.is_finite() {
        return;
    }
    match out.iter_mut().find(|(_, g)| (g - growth).abs() <= 1e-12 * growth.abs().max(1.0)) {
        Some(t) => t.0 = t.0.max(amp),
        None => out.push((amp, growth)),
    }
}

fn combine(pool: &[PoolMember], c: &[Scalar]) -> PoolMember {
    let m = pool[0].coords.len();
    let used: Vec<usize> = (0..pool.len()).filter(|&l| !c[l].is_zero()).collect();
    let len = used.iter().map(|&l| pool[l].series.len()).min().unwrap_or(0);
    let mut coords = vec![Scalar::zero(); m];
    let mut series = vec![Scalar::zero(); len];
    let mut leftovers = Vec::new();
    for &l in &used {
        for (x, y) in coords.iter_mut().zip(&pool[l].coords) {
            *x = &*x + &(&c[l] * y);
        }
        for (x, y) in series.iter_mut().zip(&pool[l].series) {
            *x = &*x + &(&c[l] * y);
        }
        for &(a, g) in &pool[l].leftovers {
            add_leftover(&mut leftovers, a + c[l].ln_abs(), g);
        }
    }
    PoolMember { coords, series, leftovers }
}

/// Records that the polar part of `p` on the circle of radius `r` was
/// cancelled by a fit over the last third of the series: the residue error is
/// of the order of the noise there, and grows like r^{-k} from there on.
fn mark_cancelled(p: &mut PoolMember, r: f64, noise: &Noise) {
    let nz = noise.of(p);
    let len = nz.len();
    if len == 0 {
        return;
    }
    let lr = r.ln();
    let amp = (len - len / 3..len).map(|k| nz[k] + k as f64 * lr).fold(f64::NEG_INFINITY, f64::max);
    add_leftover(&mut p.leftovers, amp + KILL_MARGIN_LN, -lr);
}

fn normalize(p: &mut PoolMember) {
    let top = p.coords.iter().map(Scalar::ln_abs).fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return;
    }
    let k = super::principal::ln_to_pow2(top);
    let s = super::principal::pow2(-k);
    for x in p.coords.iter_mut().chain(p.series.iter_mut()) {
        *x = x.scale_real(&s);
    }
    for t in p.leftovers.iter_mut() {
        t.0 -= k as f64 * std::f64::consts::LN_2;
    }
}

struct Noise {
    base: Vec<f64>,
    eps_ln: f64,
}

impl Noise {
    /// Error level of a combination: eps times the size of its terms, or the
    /// leftovers of earlier cancellations when larger.
    fn of(&self, p: &PoolMember) -> Vec<f64> {
        let cl = p.coords.iter().map(Scalar::ln_abs).fold(f64::NEG_INFINITY, f64::max);
        (0..p.series.len())
            .map(|k| {
                let round = cl + self.base[k] + self.eps_ln + ((k + 2) as f64).ln();
                p.leftovers.iter().map(|(a, g)| a + k as f64 * g).fold(round, f64::max)
            })
            .collect()
    }
}

fn unit(m: usize, i: usize) -> Vec<Scalar> {
    (0..m).map(|j| if i == j { Scalar::one() } else { Scalar::zero() }).collect()
}

/// Fundamental system of `rec` from N+1 coefficients per member.
pub fn build_fundamental_system(rec: &Recurrence, n: usize, ctx: &PrecisionContext) -> Result<FundamentalSystem> {
    build_fundamental_system_with_rates(rec, n, None, ctx)
}

/// As [`build_fundamental_system`], with the convergence class of the
/// coefficient zeros supplied instead of read from the recurrence.
pub fn build_fundamental_system_with_rates(
    rec: &Recurrence,
    n: usize,
    rate: Option<RateInfo>,
    ctx: &PrecisionContext,
) -> Result<FundamentalSystem> {
    let m = rec.order();
    if n + 1 < 3 * MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "N = {n}; at least {} coefficients are needed",
            3 * MIN_SAMPLES
        )));
    }
    let (_, alpha) = char_poly(rec)?;
    let roots0 = poly_roots(&alpha, ctx)?;
    let moduli: Vec<f64> = roots0.roots.iter().map(|r| r.location.abs_f64()).collect();
    let rmin = moduli.iter().cloned().fold(f64::INFINITY, f64::min);
    let rmax = moduli.iter().cloned().fold(0.0, f64::max);
    let spread = (n as f64 * (rmax / rmin).log2()).ceil().max(0.0) as usize;
    let work_bits = ctx.bits() + spread + 64;
    let wctx = ctx.float_at(work_bits);
    let roots = if roots0.is_exact() {
        roots0
    } else {
        poly_roots_seeded(&alpha, Some(&roots0.flatten()), &wctx)?
    };
    let (rate, rate_source) = match rate {
        Some(r) => (r, RateSource::Declared),
        None => RateInfo::from_recurrence(rec, n, ctx)?,
    };
    let circle_tol = ctx.tol.circle_tol;
    let circles = group_circles(&roots, &rate, circle_tol)?;
    for c in &circles {
        if c.multiplicity() >= 2 && !c.geometric {
            return Err(Error::CircleHypothesisViolated(format!(
                "circle of radius {} carries {} zeros but its coefficients do not converge geometrically",
                c.radius,
                c.multiplicity()
            )));
        }
    }

    let table = rec.coeff_table(n, &wctx)?;
    let basis: Vec<Vec<Scalar>> = (0..m)
        .into_par_iter()
        .map(|i| forward_with_table(rec, &table, &unit(m, i), n, &wctx).series.into_coeffs())
        .collect();
    // Float coefficients are known only to their own precision.
    let coeff_bits = (m..=n).filter_map(|k| rec.coeffs_at(k).ok()).flatten().filter_map(|c| c.precision()).min();
    let eps_bits = coeff_bits.map_or(work_bits, |b| b.min(work_bits));
    let noise = Noise {
        base: (0..=n).map(|k| basis.iter().map(|b| b[k].ln_abs()).fold(f64::NEG_INFINITY, f64::max)).collect(),
        eps_ln: -(eps_bits as f64 - 24.0) * std::f64::consts::LN_2,
    };
    let mut pool: Vec<PoolMember> =
        basis.into_iter().enumerate().map(|(i, series)| PoolMember { coords: unit(m, i), series, leftovers: Vec::new() }).collect();

    let mut members: Vec<(PoolMember, FundamentalMember)> = Vec::with_capacity(m);
    let mut accounts = Vec::with_capacity(circles.len());
    let mut provenance = Vec::new();
    let mut warnings = Vec::new();
    let defl_tol = (-(ctx.bits() as f64) / 2.0).exp2().max(wctx.residual_tol());
    // Lifted members keep a multiple of the pilot of relative size (mu/|lambda|)^(N-n);
    // the prefix is cut where that reaches 2^(-bits/4), as for pole-free combinations.
    let lift_tol_ln = -(ctx.bits() as f64) / 4.0 * std::f64::consts::LN_2;

    for (k, circle) in circles.iter().enumerate() {
        if pool.is_empty() {
            return Err(Error::NonTermination { produced: members.len(), expected: m });
        }
        let r = circle.radius;
        let outer = circles.get(k + 1).map_or(2.0 * r, |c| c.radius);
        let split = (r * outer).sqrt();
        let radii: Vec<Option<RadiusEstimate>> =
            pool.par_iter().map(|p| radius_above_noise(&p.series, &noise.of(p))).collect();
        let on: Vec<bool> = radii.iter().map(|e| e.is_some_and(|e| e.value < split)).collect();
        let stage = k;

        if circle.geometric {
            let nuisance: Vec<(Scalar, usize)> = circles[k + 1..].iter().flat_map(CircleGroup::zero_pairs).collect();
            let exact_remainder = circles[k + 1..].iter().all(|c| c.geometric);
            let lemma = lemma_check(&pool, &on, circle, &noise, &wctx)?;
            let refs: Vec<&[Scalar]> = pool.iter().map(|p| p.series.as_slice()).collect();
            let sys = CircleSystem::build(&refs, &on, circle, &nuisance, outer, work_bits, circle_tol)?;
            let rank = sys.rank();
            let expected = circle.multiplicity();
            let fit_res = sys.fits.iter().flatten().map(|f| f.residual).fold(0.0, f64::max);
            let mut rec_kill = ProvenanceRecord::new(stage, r, Branch::KillPoles)
                .residual("fit", fit_res)
                .residual("lemma_radius_ratio", lemma / r);
            rec_kill.rank = Some(rank);
            provenance.push(rec_kill);

            let mut produced = 0;
            if rank == expected {
                let mut worst_cert: usize = 0;
                for (t, &(i, s)) in sys.rows.iter().enumerate() {
                    let c = sys
                        .prescribed_combination(circle, t)
                        .ok_or(Error::RankDeficient { radius: r, rank, expected })?;
                    let mut p = combine(&pool, &c);
                    mark_cancelled(&mut p, r, &noise);
                    let refit = fit_principal(&p.series, circle, &nuisance, outer, work_bits, circle_tol)?;
                    let certified = certify_order(&refit, i, s, sys.rank_tol_ln);
                    if !certified {
                        worst_cert += 1;
                    }
                    let zeta = circle.zeros[i].location.clone();
                    let fm = member_record(rec, &p, k, vec![zeta.clone()], vec![(zeta, s)], refit.parts, MemberOrigin::Prescribed, certified);
                    members.push((p, fm));
                    produced += 1;
                }
                let mut rec_pre = ProvenanceRecord::new(stage, r, Branch::Prescribe).residual("uncertified", worst_cert as f64);
                rec_pre.rank = Some(rank);
                provenance.push(rec_pre);
            } else {
                warnings.push(format!(
                    "circle of radius {r}: functional rank {rank} is below the {expected} zeros on it; pivot members kept"
                ));
                for &pv in &sys.rref.pivots {
                    let p = pool[pv].clone();
                    let (sing, orders, parts) = match &sys.fits[pv] {
                        Some(fit) => {
                            let mut sing = Vec::new();
                            let mut orders = Vec::new();
                            for part in &fit.parts {
                                let scales: Vec<f64> = (1..=part.coefficients.len())
                                    .map(|s| fit.row_scale_ln(&part.pole, s) - fit.data_ln)
                                    .collect();
                                if let Some(o) = part.order_above(&scales.iter().map(|x| -x).collect::<Vec<_>>(), sys.rank_tol_ln) {
                                    sing.push(part.pole.clone());
                                    orders.push((part.pole.clone(), o));
                                }
                            }
                            (sing, orders, fit.parts.clone())
                        }
                        None => (Vec::new(), Vec::new(), Vec::new()),
                    };
                    let fm = member_record(rec, &p, k, sing, orders, parts, MemberOrigin::RankDeficient, false);
                    members.push((p, fm));
                    produced += 1;
                }
                let mut rec_pre = ProvenanceRecord::new(stage, r, Branch::Prescribe);
                rec_pre.rank = Some(rank);
                provenance.push(rec_pre);
            }

            let mut next = Vec::new();
            for c in sys.null_combinations() {
                let mut p = combine(&pool, &c);
                mark_cancelled(&mut p, r, &noise);
                normalize(&mut p);
                if !exact_remainder {
                    let keep = contamination_free_len(p.series.len(), r, outer, ctx.bits());
                    p.series.truncate(keep.max(3 * MIN_SAMPLES).min(p.series.len()));
                }
                if let Some(e) = radius_above_noise(&p.series, &noise.of(&p)) {
                    if e.value <= r * (1.0 + circle_tol) {
                        return Err(Error::CircleHypothesisViolated(format!(
                            "a pole-free combination still has radius {} on the circle of radius {r}",
                            e.value
                        )));
                    }
                }
                next.push(p);
            }
            accounts.push(CircleAccount {
                radius: r,
                zeros: circle.zeros.clone(),
                geometric: true,
                expected,
                produced,
                rank: Some(rank),
                branch: Branch::Prescribe,
            });
            pool = next;
        } else {
            let zeta = circle.zeros[0].location.clone();
            let on_idx: Vec<usize> = (0..pool.len()).filter(|&i| on[i]).collect();
            let mut rec_ev = ProvenanceRecord::new(stage, r, Branch::Evgrafov);
            if on_idx.is_empty() {
                warnings.push(format!("circle of radius {r}: no member has this radius"));
                rec_ev.rank = Some(0);
                provenance.push(rec_ev);
                accounts.push(CircleAccount {
                    radius: r,
                    zeros: circle.zeros.clone(),
                    geometric: false,
                    expected: 1,
                    produced: 0,
                    rank: Some(0),
                    branch: Branch::Evgrafov,
                });
                continue;
            }
            let refs: Vec<&[Scalar]> = on_idx.iter().map(|&i| pool[i].series.as_slice()).collect();
            let plan = evgrafov::plan(&table, m, &refs, &zeta, &wctx, lift_tol_ln, defl_tol)?;
            let pilot_idx = on_idx[plan.pilot];
            let pilot = pool[pilot_idx].clone();
            let mut lifted = Vec::with_capacity(plan.lifts.len());
            let mut min_len = usize::MAX;
            let mut mu_max: f64 = 0.0;
            for l in &plan.lifts {
                let src = &pool[on_idx[l.member]];
                let coords: Vec<Scalar> = src.coords.iter().zip(&pilot.coords).map(|(a, b)| a - &(&l.c * b)).collect();
                let series: Vec<Scalar> =
                    (0..l.len.min(src.series.len())).map(|i| &src.series[i] - &(&l.c * &pilot.series[i])).collect();
                let mut leftovers = src.leftovers.clone();
                for &(a, g) in &pilot.leftovers {
                    add_leftover(&mut leftovers, a + l.c.ln_abs(), g);
                }
                let mut p = PoolMember { coords, series, leftovers };
                normalize(&mut p);
                if let Some(e) = radius_above_noise(&p.series, &noise.of(&p)) {
                    if e.value <= r * (1.0 + circle_tol) {
                        return Err(Error::LiftFailed(format!("lifted radius {} does not exceed {r}", e.value)));
                    }
                }
                min_len = min_len.min(p.series.len());
                mu_max = mu_max.max(l.mu);
                lifted.push(p);
            }
            rec_ev.rank = Some(1);
            rec_ev.shift_n0 = Some(plan.shift_n0);
            rec_ev = rec_ev.residual("deflation", plan.deflation_residual);
            if !plan.lifts.is_empty() {
                rec_ev = rec_ev.residual("mu_max", mu_max).residual("lifted_len_min", min_len as f64);
            }
            provenance.push(rec_ev);
            let fm = member_record(rec, &pilot, k, vec![zeta], Vec::new(), Vec::new(), MemberOrigin::Evgrafov, true);
            members.push((pilot, fm));
            accounts.push(CircleAccount {
                radius: r,
                zeros: circle.zeros.clone(),
                geometric: false,
                expected: 1,
                produced: 1,
                rank: Some(1),
                branch: Branch::Evgrafov,
            });
            let mut next: Vec<PoolMember> = (0..pool.len()).filter(|i| !on[*i]).map(|i| pool[i].clone()).collect();
            next.extend(lifted);
            pool = next;
        }
    }
    if !pool.is_empty() || members.len() != m {
        return Err(Error::NonTermination { produced: members.len(), expected: m });
    }

    let coords: Vec<Vec<Scalar>> = members.iter().map(|(p, _)| p.coords.clone()).collect();
    let thr = wctx.float_ln_zero_threshold();
    let independent = rref(&coords, Some(thr)).rank() == m;
    if !independent {
        warnings.push("members are numerically dependent".into());
    }
    let members: Vec<FundamentalMember> = members
        .into_par_iter()
        .map(|(p, mut fm)| {
            fm.noise_ln = noise.of(&p);
            fm.radius = radius_above_noise(&p.series, &fm.noise_ln);
            fm
        })
        .collect();
    Ok(FundamentalSystem { members, circles: accounts, provenance, working_bits: work_bits, rate_source, independent, warnings })
}

/// Smallest radius of beta f over the members on the circle, beta being the
/// product of (1 - z/zeta)^tau over the circle zeros; must exceed the circle.
fn lemma_check(
    pool: &[PoolMember],
    on: &[bool],
    circle: &CircleGroup,
    noise: &Noise,
    wctx: &PrecisionContext,
) -> Result<f64> {
    let beta = Polynomial::from_zeros_normalized(&circle.zero_pairs()).promote(wctx);
    let beta_ln = beta.coeffs().iter().map(Scalar::abs_f64).sum::<f64>().ln();
    let deg = beta.degree().unwrap_or(0);
    let checks: Vec<Result<f64>> = pool
        .par_iter()
        .zip(on.par_iter())
        .enumerate()
        .filter(|(_, (_, &o))| o)
        .map(|(idx, (p, _))| {
            let f = PowerSeries::with_source(p.series.clone(), SeriesSource::Explicit);
            let g = crate::numeric::series_poly_mul(&f, &beta);
            let nz = noise.of(p);
            let gn: Vec<f64> = (0..nz.len())
                .map(|k| (k.saturating_sub(deg)..=k).map(|i| nz[i]).fold(f64::NEG_INFINITY, f64::max) + beta_ln)
                .collect();
            match radius_above_noise(g.coeffs(), &gn) {
                Some(e) if e.value <= circle.radius * (1.0 + wctx.tol.circle_tol) => Err(Error::CircleHypothesisViolated(
                    format!(
                        "member {idx} keeps radius {} after removing the zeros on the circle of radius {}",
                        e.value, circle.radius
                    ),
                )),
                Some(e) => Ok(e.value),
                None => Ok(f64::INFINITY),
            }
        })
        .collect();
    let mut worst = f64::INFINITY;
    for c in checks {
        worst = worst.min(c?);
    }
    Ok(worst)
}

#[allow(clippy::too_many_arguments)]
fn member_record(
    rec: &Recurrence,
    p: &PoolMember,
    circle: usize,
    singular_points: Vec<Scalar>,
    pole_orders: Vec<(Scalar, usize)>,
    principal_parts: Vec<PrincipalPart>,
    origin: MemberOrigin,
    certified: bool,
) -> FundamentalMember {
    let series = PowerSeries::with_source(
        p.series.clone(),
        SeriesSource::RecurrenceGenerated { recurrence: rec.label.clone(), initial_conditions: p.coords.clone() },
    );
    FundamentalMember {
        solution: Solution { series, initial_conditions: p.coords.clone(), recurrence: rec.label.clone() },
        coordinates: p.coords.clone(),
        circle,
        radius: None,
        singular_points,
        pole_orders,
        principal_parts,
        origin,
        certified,
        noise_ln: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recurrence::Perturbation;

    fn radii(fs: &FundamentalSystem) -> Vec<f64> {
        fs.members.iter().map(|m| m.radius.unwrap().value).collect()
    }

    #[test]
    fn distinct_moduli() {
        let ex = PrecisionContext::exact();
        let rec = Recurrence::constant_i64(&[-5, 6]).unwrap();
        let fs = build_fundamental_system(&rec, 400, &ex).unwrap();
        let r = radii(&fs);
        assert!((r[0] - 1.0 / 3.0).abs() < 1e-6 && (r[1] - 0.5).abs() < 1e-6, "{r:?}");
        assert!(fs.independent);
        assert_eq!(fs.members[0].singular_points[0], Scalar::from_ratio(1, 3));
        assert_eq!(fs.members[1].pole_orders, vec![(Scalar::from_ratio(1, 2), 1)]);
    }

    #[test]
    fn symmetric_pair() {
        let ex = PrecisionContext::exact();
        let rec = Recurrence::constant_i64(&[0, -4]).unwrap();
        let fs = build_fundamental_system(&rec, 200, &ex).unwrap();
        assert_eq!(fs.circles.len(), 1);
        assert_eq!(fs.circles[0].rank, Some(2));
        // 1/(1-2z) and 1/(1+2z)
        let a = &fs.members[0].principal_parts;
        assert!(a[0].coefficients[0].close_to(&Scalar::from_ratio(-1, 2), 1e-20));
        assert!(a[1].coefficients[0].abs_f64() < 1e-20);
        let b = &fs.members[1].principal_parts;
        assert!(b[1].coefficients[0].close_to(&Scalar::from_ratio(1, 2), 1e-20));
        assert!(fs.members.iter().all(|m| m.certified));
    }

    #[test]
    fn three_poles_on_two_circles() {
        let ex = PrecisionContext::exact();
        // alpha = (1-2z)(1+2z)(1-z) = 1 - z - 4z^2 + 4z^3
        let rec = Recurrence::constant_i64(&[-1, -4, 4]).unwrap();
        let fs = build_fundamental_system(&rec, 300, &ex).unwrap();
        let r = radii(&fs);
        assert!((r[0] - 0.5).abs() < 1e-6 && (r[1] - 0.5).abs() < 1e-6 && (r[2] - 1.0).abs() < 1e-6, "{r:?}");
        let poles: Vec<Scalar> = fs.members.iter().map(|m| m.singular_points[0].clone()).collect();
        assert_eq!(poles, vec![Scalar::from_ratio(1, 2), Scalar::from_ratio(-1, 2), Scalar::one()]);
    }

    #[test]
    fn double_zero() {
        let ex = PrecisionContext::exact();
        let rec = Recurrence::constant_i64(&[-4, 4]).unwrap();
        let fs = build_fundamental_system(&rec, 200, &ex).unwrap();
        let orders: Vec<usize> = fs.members.iter().map(|m| m.pole_orders[0].1).collect();
        assert_eq!(orders, vec![1, 2]);
        assert!(fs.members[1].principal_parts[0].coefficients[1].close_to(&Scalar::from_ratio(1, 4), 1e-12));
    }

    #[test]
    fn nongeometric_perturbation_uses_the_lift() {
        let ctx = PrecisionContext::bigfloat(256).unwrap();
        let rec = Recurrence::perturbed(
            vec![Scalar::from_i64(-5), Scalar::from_i64(6)],
            vec![Scalar::one(), Scalar::from_i64(-1)],
            vec![Perturbation::InverseN, Perturbation::InverseN],
        )
        .unwrap();
        let fs = build_fundamental_system(&rec, 400, &ctx).unwrap();
        let r = radii(&fs);
        assert!((r[0] - 1.0 / 3.0).abs() < 1e-2 && (r[1] - 0.5).abs() < 1e-2, "{r:?}");
        assert!(fs.provenance.iter().any(|p| p.branch == Branch::Evgrafov));
        assert!(fs.provenance_jsonl().lines().count() == fs.provenance.len());
    }

    #[test]
    fn shared_circle_without_geometric_rate_is_rejected() {
        let ctx = PrecisionContext::default();
        let rec = Recurrence::perturbed(
            vec![Scalar::zero(), Scalar::from_i64(-4)],
            vec![Scalar::one(), Scalar::zero()],
            vec![Perturbation::InverseN, Perturbation::InverseN],
        )
        .unwrap();
        let r = build_fundamental_system(&rec, 200, &ctx);
        assert!(matches!(r, Err(Error::CircleHypothesisViolated(_))));
    }
}
