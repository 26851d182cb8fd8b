use serde::Serialize;

use super::row::RowSequenceReport;
use super::{poly_independence_test, row_sequence, IndependenceReport, VectorSeries};
use crate::error::{Error, Result};
use crate::fundamental::{
    build_fundamental_system_with_rates, fit_principal, group_circles, radius_above_noise, rank_tolerance_ln,
    CircleAccount, CircleGroup, FundamentalMember, FundamentalSystem, PrincipalPart, ProvenanceRecord, RateInfo,
};
use crate::numeric::linalg::solve_square;
use crate::numeric::{Polynomial, PowerSeries, PrecisionContext, RootSet, Scalar};
use crate::rates::RateClass;
use crate::recurrence::{estimate_radius, RadiusMethod, Recurrence};

/// Relative distance between a witness radius and |zeta| accepted as "singular on the circle".
const SINGULAR_MATCH: f64 = 0.05;

/// Recurrence read off the denominators past the shift n0, and the shifted
/// family z^nu f_k whose coefficients n0, n0+1, ... solve it.
#[derive(Clone, Debug, Serialize)]
pub struct InducedRecurrence {
    #[serde(skip)]
    pub recurrence: Recurrence,
    pub n0: usize,
    /// (k, nu) of each member of `family`.
    pub pairs: Vec<(usize, usize)>,
    #[serde(skip)]
    pub family: Vec<PowerSeries>,
}

fn negligible_lead(q: &Polynomial, big_m: usize, exact: bool, ctx: &PrecisionContext) -> bool {
    let b = q.coeff(big_m);
    if b.is_zero() {
        return true;
    }
    !exact && b.ln_abs() < q.max_ln_abs() + ctx.float_ln_zero_threshold()
}

/// Order-|m| recurrence with coefficients alpha_{n,j} = b_{n+n0,j} from the
/// denominators q_{n+n0} = 1 + b_1 z + ... + b_{|m|} z^{|m|}.
///
/// n0 is the smallest shift for which every denominator used has q(0) = 1 and
/// a nonvanishing top coefficient.
pub fn induced_recurrence(
    vs: &VectorSeries,
    report: &RowSequenceReport,
    ctx: &PrecisionContext,
) -> Result<InducedRecurrence> {
    let limit = report.limit()?;
    let big_m = vs.total_index();
    let exact = limit.is_exact();
    let a = *report.ns.first().ok_or(Error::DegenerateDenominators)?;
    let b = *report.ns.last().ok_or(Error::DegenerateDenominators)?;
    let last_bad = report
        .denominators
        .iter()
        .filter(|d| d.q.coeff(0).is_zero() || negligible_lead(&d.q, big_m, exact, ctx))
        .map(|d| d.n)
        .max();
    let start = last_bad.map_or(a, |n| n + 1).max(a).max(big_m);
    if start > b {
        return Err(Error::DegenerateDenominators);
    }
    let n0 = start - big_m;
    let rows: Vec<Vec<Scalar>> = report
        .denominators
        .iter()
        .filter(|d| d.n >= start)
        .map(|d| {
            let c0 = d.q.coeff(0).recip();
            (1..=big_m).map(|j| &d.q.coeff(j) * &c0).collect()
        })
        .collect();
    let recurrence = Recurrence::table(big_m, rows)?
        .with_limit(limit.coeffs()[1..].to_vec())?
        .with_label(format!("induced[m = {:?}, n0 = {n0}]", vs.multi_index()));
    let pairs = vs.index_pairs();
    let family = pairs
        .iter()
        .map(|&(k, nu)| PowerSeries::explicit((0..=b - n0).map(|i| vs.shifted_coeff(k, nu, n0 + i)).collect()))
        .collect::<Result<_>>()?;
    Ok(InducedRecurrence { recurrence, n0, pairs, family })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SingularityKind {
    SystemPole { order: usize },
    SystemSingularity,
    Unclassified,
}

/// Polynomial combination sum p_k f_k exhibiting a singularity.
#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    /// p_k with deg p_k < m_k; identically zero when m_k = 0.
    pub polynomials: Vec<Polynomial>,
    pub principal_part: Option<PrincipalPart>,
    /// Radius of the combination.
    pub radius: Option<f64>,
    /// Radius after removing the fitted principal parts on the circle.
    pub radius_after: Option<f64>,
    pub fitted_order: Option<usize>,
    pub verified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SingularityEntry {
    pub zeta: Scalar,
    pub multiplicity: usize,
    #[serde(flatten)]
    pub kind: SingularityKind,
    pub rate: RateClass,
    pub rate_r2: f64,
    pub circle_radius: f64,
    pub witness: Option<Witness>,
    pub evidence: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SystemSingularityReport {
    pub entries: Vec<SingularityEntry>,
    pub limit_q: Polynomial,
    pub independence: IndependenceReport,
    pub shift_n0: usize,
    pub total_index: usize,
    /// Every zero of the limit denominator converges geometrically.
    pub all_geometric: bool,
    /// The zeros of the limit denominator have pairwise distinct moduli.
    pub distinct_moduli: bool,
    /// Sum of the orders of the reported system poles.
    pub pole_count: usize,
    pub circles: Vec<CircleAccount>,
    pub provenance: Vec<ProvenanceRecord>,
    pub working_bits: usize,
    pub warnings: Vec<String>,
}

impl SystemSingularityReport {
    /// (zeta, order) of every system pole.
    pub fn poles(&self) -> Vec<(Scalar, usize)> {
        self.entries
            .iter()
            .filter_map(|e| match e.kind {
                SingularityKind::SystemPole { order } => Some((e.zeta.clone(), order)),
                _ => None,
            })
            .collect()
    }
}

fn nearest(zs: &[Scalar], z: &Scalar) -> Option<(usize, f64)> {
    zs.iter()
        .enumerate()
        .map(|(i, w)| (i, (w - z).abs_f64()))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
}

fn same_point(a: &Scalar, b: &Scalar) -> bool {
    (a - b).abs_f64() <= 1e-8 * a.abs_f64().max(1e-300)
}

struct Combination {
    polynomials: Vec<Polynomial>,
    series: Vec<Scalar>,
    /// Rounding level of each coefficient from the size of its terms.
    noise: Vec<f64>,
}

/// Expresses a member through the shifted family and rebuilds sum p_k f_k.
fn combination_of(
    vs: &VectorSeries,
    induced: &InducedRecurrence,
    coords: &[Scalar],
    ctx: &PrecisionContext,
) -> Option<Combination> {
    let big_m = induced.pairs.len();
    let h: Vec<Vec<Scalar>> = (0..big_m).map(|i| induced.family.iter().map(|g| g.coeff(i)).collect()).collect();
    let rhs: Vec<Scalar> = coords.iter().map(|c| if ctx.is_exact() && c.is_exact() { c.clone() } else { c.promote(ctx) }).collect();
    let w = solve_square(&h, &rhs)?;
    let mut polys = vec![Vec::new(); vs.dim()];
    for (k, mk) in vs.multi_index().iter().enumerate() {
        polys[k] = vec![Scalar::zero(); *mk];
    }
    for (&(k, nu), c) in induced.pairs.iter().zip(&w) {
        polys[k][nu] = c.clone();
    }
    let len = vs.min_len();
    let eps = if w.iter().all(Scalar::is_exact) {
        f64::NEG_INFINITY
    } else {
        -(ctx.bits() as f64 - 24.0) * std::f64::consts::LN_2 + (w.len() as f64 + 1.0).ln()
    };
    let mut series = Vec::with_capacity(len);
    let mut noise = Vec::with_capacity(len);
    for n in 0..len {
        let mut acc = Scalar::zero();
        let mut top = f64::NEG_INFINITY;
        for (&(k, nu), c) in induced.pairs.iter().zip(&w) {
            if c.is_zero() {
                continue;
            }
            let t = c * &vs.shifted_coeff(k, nu, n);
            top = top.max(t.ln_abs());
            acc = &acc + &t;
        }
        series.push(acc);
        noise.push(top + eps);
    }
    Some(Combination { polynomials: polys.into_iter().map(Polynomial::new).collect(), series, noise })
}

impl Combination {
    /// Keeps the coefficients covered by the member it reproduces, with the
    /// member's error level where that is larger.
    fn bounded_by(mut self, m: &FundamentalMember, n0: usize) -> Self {
        let len = (n0 + m.noise_ln.len()).min(self.series.len());
        self.series.truncate(len);
        self.noise.truncate(len);
        for (x, y) in self.noise[n0.min(len)..].iter_mut().zip(&m.noise_ln) {
            *x = x.max(*y);
        }
        self
    }
}

/// Fits the principal parts of the combination on the circle of `zeta`,
/// reads the order at `zeta` and checks that the radius grows once the parts
/// are removed.
#[allow(clippy::too_many_arguments)]
fn verify_pole(
    comb: Combination,
    group: &CircleGroup,
    nuisance: &[(Scalar, usize)],
    outer: f64,
    zeta: &Scalar,
    bits: usize,
    circle_tol: f64,
) -> Witness {
    let radius = radius_above_noise(&comb.series, &comb.noise).map(|e| e.value);
    let mut witness = Witness {
        polynomials: comb.polynomials,
        principal_part: None,
        radius,
        radius_after: None,
        fitted_order: None,
        verified: false,
    };
    let Ok(fit) = fit_principal(&comb.series, group, nuisance, outer, bits, circle_tol) else {
        return witness;
    };
    if fit.analytic {
        return witness;
    }
    let rank_tol = rank_tolerance_ln(fit.tol, bits);
    let Some(part) = fit.parts.iter().find(|p| same_point(&p.pole, zeta)) else {
        return witness;
    };
    let order = (1..=part.coefficients.len())
        .rev()
        .find(|&s| part.coefficients[s - 1].ln_abs() + fit.row_scale_ln(zeta, s) - fit.data_ln > rank_tol);
    witness.fitted_order = order;
    witness.principal_part = Some(part.clone());
    let len = comb.series.len();
    let mut pp = vec![Scalar::zero(); len];
    for p in &fit.parts {
        for (acc, x) in pp.iter_mut().zip(p.series(len, bits)) {
            *acc = &*acc + &x;
        }
    }
    let fit_ln = fit.tol.max(fit.residual).ln();
    let rounding = &comb.noise;
    let rest: Vec<Scalar> = comb.series.iter().zip(&pp).map(|(a, b)| a - b).collect();
    let noise: Vec<f64> = pp.iter().zip(rounding).map(|(p, r)| (p.ln_abs() + fit_ln).max(*r)).collect();
    let after = radius_above_noise(&rest, &noise);
    witness.radius_after = after.map(|e| e.value);
    witness.verified = order.is_some() && after.is_none_or(|e| e.value > zeta.abs_f64() * (1.0 + circle_tol));
    witness
}

fn group_of(c: &CircleAccount) -> CircleGroup {
    CircleGroup { radius: c.radius, zeros: c.zeros.clone(), geometric: c.geometric }
}

/// Classifies each zero of the limit denominator as a system pole (with its
/// order) or a system singularity of (f, m), with a witness combination for
/// every classification the fundamental system supports.
pub fn classify_singularities(
    vs: &VectorSeries,
    n_range: (usize, usize),
    ctx: &PrecisionContext,
) -> Result<SystemSingularityReport> {
    let independence = poly_independence_test(vs, n_range, ctx)?;
    if !independence.independent {
        return Err(Error::HypothesisViolated(format!(
            "the series are polynomially dependent for this multi-index (rank {} < {})",
            independence.rank, independence.expected
        )));
    }
    let rs = row_sequence(vs, n_range, ctx)?;
    let limit = rs.limit()?.clone();
    let rates = RateInfo::PerZero(rs.trajectories.iter().map(|t| (t.target.clone(), t.rate.is_geometric())).collect());
    let roots = RootSet { roots: rs.limit_zeros.clone(), residual_bound: 0.0 };
    let circle_tol = ctx.tol.circle_tol;
    let groups = group_circles(&roots, &rates, circle_tol)?;
    for g in &groups {
        if g.multiplicity() >= 2 && !g.geometric {
            return Err(Error::HypothesisViolated(format!(
                "{} zeros share the circle of radius {} without geometric convergence",
                g.multiplicity(),
                g.radius
            )));
        }
    }
    let induced = induced_recurrence(vs, &rs, ctx)?;
    let n_max = n_range.1 - induced.n0;
    let fs: FundamentalSystem = build_fundamental_system_with_rates(&induced.recurrence, n_max, Some(rates), ctx)
        .map_err(|e| match e {
            Error::CircleHypothesisViolated(s) => Error::HypothesisViolated(s),
            e => e,
        })?;

    // Witnesses are formed at the working precision of the builder so that the
    // cancelled inner poles stay below the parts being fitted.
    let bits = fs.working_bits;
    let wctx = ctx.float_at(bits);
    let mut entries = Vec::new();
    let mut warnings = fs.warnings.clone();
    for root in &rs.limit_zeros {
        let zeta = &root.location;
        let tau = root.multiplicity;
        let traj = rs.rate_near(zeta);
        let rate = traj.map_or(RateClass::Undetermined, |t| t.rate);
        let rate_r2 = traj.map_or(0.0, |t| t.r2);
        let ci = fs
            .circles
            .iter()
            .enumerate()
            .filter_map(|(i, c)| nearest(&c.zeros.iter().map(|r| r.location.clone()).collect::<Vec<_>>(), zeta).map(|(_, d)| (i, d)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
            .map(|x| x.0);
        let Some(ci) = ci else {
            entries.push(SingularityEntry {
                zeta: zeta.clone(),
                multiplicity: tau,
                kind: SingularityKind::Unclassified,
                rate,
                rate_r2,
                circle_radius: zeta.abs_f64(),
                witness: None,
                evidence: "zero not found among the circles of the fundamental system".into(),
            });
            continue;
        };
        let circle = &fs.circles[ci];
        let outer = fs.circles.get(ci + 1).map_or(2.0 * circle.radius, |c| c.radius);
        let nuisance: Vec<(Scalar, usize)> = fs.circles[ci + 1..]
            .iter()
            .flat_map(|c| c.zeros.iter().map(|r| (r.location.clone(), r.multiplicity)))
            .collect();
        let on_circle = fs.members.iter().filter(|m| m.circle == ci);
        let (kind, witness, evidence) = if circle.geometric {
            let best = on_circle
                .filter_map(|m| {
                    m.pole_orders.iter().filter(|(z, _)| same_point(z, zeta)).map(|(_, s)| *s).max().map(|s| (s, m))
                })
                .max_by_key(|x| x.0);
            match best {
                None => (SingularityKind::Unclassified, None, "no member of the fundamental system has a pole here".to_string()),
                Some((s, m)) => match combination_of(vs, &induced, &m.coordinates, &wctx).map(|c| c.bounded_by(m, induced.n0)) {
                    None => (SingularityKind::Unclassified, None, "member is not a combination of the shifted family".into()),
                    Some(comb) => {
                        let w = verify_pole(comb, &group_of(circle), &nuisance, outer, zeta, bits, circle_tol);
                        if w.verified && s == tau && w.fitted_order == Some(tau) {
                            let ev = format!("geometric rate; witness pole of order {tau} removed by its principal part");
                            (SingularityKind::SystemPole { order: tau }, Some(w), ev)
                        } else {
                            let ev = format!(
                                "witness failed: member order {s}, fitted order {:?}, multiplicity {tau}, radius after removal {:?}",
                                w.fitted_order, w.radius_after
                            );
                            (SingularityKind::Unclassified, Some(w), ev)
                        }
                    }
                },
            }
        } else {
            let m = on_circle.clone().find(|m| m.singular_points.iter().any(|z| same_point(z, zeta)));
            let w = m.and_then(|m| combination_of(vs, &induced, &m.coordinates, &wctx)).map(|comb| {
                let radius = estimate_radius(&comb.series, RadiusMethod::RootTestRegression).ok().map(|e| e.value);
                let verified = radius.is_some_and(|r| (r - zeta.abs_f64()).abs() <= SINGULAR_MATCH * zeta.abs_f64());
                Witness {
                    polynomials: comb.polynomials,
                    principal_part: None,
                    radius,
                    radius_after: None,
                    fitted_order: None,
                    verified,
                }
            });
            let ev = match &w {
                Some(w) if w.verified => format!("{rate:?} rate; witness radius {:?}", w.radius),
                Some(w) => format!("{rate:?} rate; witness radius {:?} does not match the circle", w.radius),
                None => format!("{rate:?} rate; no witness"),
            };
            (SingularityKind::SystemSingularity, w, ev)
        };
        entries.push(SingularityEntry {
            zeta: zeta.clone(),
            multiplicity: tau,
            kind,
            rate,
            rate_r2,
            circle_radius: circle.radius,
            witness,
            evidence,
        });
    }
    let big_m = vs.total_index();
    let all_geometric = rs.trajectories.iter().all(|t| t.rate.is_geometric());
    let distinct_moduli = groups.iter().all(|g| g.multiplicity() == 1);
    let pole_count = entries
        .iter()
        .map(|e| match e.kind {
            SingularityKind::SystemPole { order } => order,
            _ => 0,
        })
        .sum();
    if all_geometric && pole_count != big_m {
        warnings.push(format!("{pole_count} system poles counted with order, expected {big_m}"));
    }
    Ok(SystemSingularityReport {
        entries,
        limit_q: limit,
        independence,
        shift_n0: induced.n0,
        total_index: big_m,
        all_geometric,
        distinct_moduli,
        pole_count,
        circles: fs.circles,
        provenance: fs.provenance,
        working_bits: fs.working_bits,
        warnings,
    })
}
