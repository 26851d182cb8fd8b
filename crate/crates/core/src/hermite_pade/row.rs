use rayon::prelude::*;
use serde::Serialize;

use super::{hp_denominators, VectorSeries};
use crate::error::{Error, Result};
use crate::numeric::stats::fit_line;
use num_traits::Zero;

use crate::numeric::real::{convergents, Real};
use crate::numeric::{poly_roots, Polynomial, PrecisionContext, Root, Scalar};
use crate::rates::{classify_trajectory, RateClass, GEOMETRIC_SLOPE, MIN_R2, SUBGEOMETRIC_SLOPE};

/// Number of trailing n over which the denominators must have settled.
pub const STABLE_TAIL: usize = 8;
/// Largest coefficient change between consecutive denominators in that tail, float data.
pub const STABLE_TOL: f64 = 1e-6;
/// Fewest n accepted for a row sequence.
pub const MIN_ROW_LEN: usize = 16;

#[derive(Clone, Debug, Serialize)]
pub struct DenominatorEntry {
    pub n: usize,
    pub q: Polynomial,
    pub kernel_dimension: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitStatus {
    Detected,
    /// The denominators did not settle over the tail.
    NotSettled,
    /// They settled on a polynomial of degree below |m| or vanishing at 0.
    Degenerate,
}

/// Zeros of q_n followed across n toward one zero of the limit.
#[derive(Clone, Debug, Serialize)]
pub struct ZeroTrajectory {
    /// Zero of the limit denominator (or of the last q_n when no limit was found).
    pub target: Scalar,
    /// zeta_{n,k} for each n of the report; `None` where no zero could be assigned.
    pub points: Vec<Option<Scalar>>,
    /// Two trajectories claimed one zero somewhere along the way.
    pub collided: bool,
    pub rate: RateClass,
    /// Extrapolated limit used for the rate fit.
    pub fitted_limit: Scalar,
    pub slope: f64,
    pub r2: f64,
}

/// Decay of the consecutive coefficient changes max |q_{n+1} - q_n|.
#[derive(Clone, Debug, Serialize)]
pub struct ThetaEstimate {
    pub theta: Option<f64>,
    pub class: RateClass,
    pub slope: f64,
    pub r2: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RowSequenceReport {
    pub ns: Vec<usize>,
    pub denominators: Vec<DenominatorEntry>,
    pub status: LimitStatus,
    pub limit_q: Option<Polynomial>,
    pub limit_zeros: Vec<Root>,
    pub trajectories: Vec<ZeroTrajectory>,
    pub theta_global: ThetaEstimate,
    /// max |q_n - q_limit| for each n, when the limit was detected.
    pub q_errors: Vec<f64>,
}

impl RowSequenceReport {
    pub fn limit(&self) -> Result<&Polynomial> {
        self.limit_q.as_ref().ok_or(Error::LimitNotDetected)
    }

    /// Rate of the trajectory heading to the zero nearest `zeta`.
    pub fn rate_near(&self, zeta: &Scalar) -> Option<&ZeroTrajectory> {
        self.trajectories.iter().min_by(|a, b| {
            let da = (&a.target - zeta).abs_f64();
            let db = (&b.target - zeta).abs_f64();
            da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
        })
    }
}

fn detect_limit(qs: &[Polynomial], big_m: usize, exact: bool) -> (LimitStatus, Option<Polynomial>) {
    let tail = &qs[qs.len() - STABLE_TAIL..];
    let stable_exactly = exact && tail.windows(2).all(|w| w[0] == w[1]);
    let variation = tail.windows(2).map(|w| w[0].distance(&w[1])).fold(0.0, f64::max);
    if !stable_exactly && variation >= STABLE_TOL {
        return (LimitStatus::NotSettled, None);
    }
    let last = tail.last().unwrap();
    let q = if exact && !stable_exactly { rationalize(last, variation).unwrap_or_else(|| last.clone()) } else { last.clone() };
    if q.degree() != Some(big_m) || q.coeff(0).is_zero() {
        return (LimitStatus::Degenerate, None);
    }
    let c0 = q.coeff(0).recip();
    (LimitStatus::Detected, Some(q.scale(&c0)))
}

/// Largest denominator tried when snapping a converging exact denominator to its limit.
const MAX_LIMIT_DEN_BITS: u64 = 32;

fn snap(x: &Real, tol: f64) -> Option<Real> {
    let q = x.to_rational();
    if q.is_zero() {
        return Some(Real::zero());
    }
    convergents(&q, MAX_LIMIT_DEN_BITS)
        .into_iter()
        .find(|c| {
            let d = Real::Exact(c - &q).abs().to_f64();
            // a match this close is not a coincidence when tol * den^2 is small
            let den = c.denom().bits() as i32;
            d <= tol && tol * 2f64.powi(2 * den) < 1e-6
        })
        .map(Real::Exact)
}

/// Nearest polynomial with small rational coefficients to a denominator that
/// still moves by `variation` per step, or `None` when there is none.
fn rationalize(q: &Polynomial, variation: f64) -> Option<Polynomial> {
    let tol = 1e2 * variation;
    q.coeffs()
        .iter()
        .map(|c| Some(Scalar::new(snap(&c.re, tol)?, snap(&c.im, tol)?)))
        .collect::<Option<Vec<_>>>()
        .map(Polynomial::new)
}

/// Continues each target backward through the zeros of q_n by nearest neighbours.
fn follow(targets: &[Scalar], zeros: &[Vec<Scalar>]) -> Vec<(Vec<Option<Scalar>>, bool)> {
    let t = targets.len();
    let mut prev: Vec<Scalar> = targets.to_vec();
    let mut points = vec![vec![None; zeros.len()]; t];
    let mut collided = vec![false; t];
    for i in (0..zeros.len()).rev() {
        let zs = &zeros[i];
        let mut claimed = vec![false; zs.len()];
        for k in 0..t {
            let dist: Vec<f64> = zs.iter().map(|z| (z - &prev[k]).abs_f64()).collect();
            let nearest = dist.iter().cloned().fold(f64::INFINITY, f64::min);
            let pick = (0..zs.len())
                .filter(|&j| !claimed[j])
                .min_by(|&a, &b| dist[a].partial_cmp(&dist[b]).unwrap_or(std::cmp::Ordering::Equal));
            match pick {
                Some(j) if dist[j] <= nearest * (1.0 + 1e-9) + f64::MIN_POSITIVE => {
                    claimed[j] = true;
                    points[k][i] = Some(zs[j].clone());
                    prev[k] = zs[j].clone();
                }
                _ => collided[k] = true,
            }
        }
    }
    points.into_iter().zip(collided).collect()
}

fn theta_from_differences(ns: &[usize], qs: &[Polynomial]) -> ThetaEstimate {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut last_live = None;
    for i in 0..qs.len() - 1 {
        let d = (&qs[i + 1] - &qs[i]).max_ln_abs();
        if d.is_finite() {
            xs.push(ns[i] as f64);
            ys.push(d);
            last_live = Some(i);
        }
    }
    let settled = match last_live {
        None => true,
        Some(i) => i + STABLE_TAIL < qs.len(),
    };
    let fit = fit_line(&xs, &ys);
    let (slope, r2) = fit.map_or((f64::NAN, 0.0), |f| (f.slope, f.r2));
    let class = if settled {
        RateClass::Geometric { theta: 0.0 }
    } else if slope <= GEOMETRIC_SLOPE && r2 >= MIN_R2 {
        RateClass::Geometric { theta: slope.exp() }
    } else if (SUBGEOMETRIC_SLOPE..=0.0).contains(&slope) {
        RateClass::Subgeometric
    } else {
        RateClass::Undetermined
    };
    let theta = match class {
        RateClass::Geometric { theta } => Some(theta),
        _ => None,
    };
    ThetaEstimate { theta, class, slope, r2, samples: xs.len() }
}

/// Denominators q_n for n in `n_range` and the behaviour of their zeros.
///
/// The limit counts as detected when the denominators stop changing over the
/// last [`STABLE_TAIL`] values of n (exactly for rational data, to within
/// [`STABLE_TOL`] otherwise) on a polynomial of degree |m| with q(0) != 0.
/// Without a limit the report still carries trajectories toward the zeros of
/// the last q_n.
pub fn row_sequence(vs: &VectorSeries, n_range: (usize, usize), ctx: &PrecisionContext) -> Result<RowSequenceReport> {
    let (a, b) = n_range;
    if b < a || b - a + 1 < MIN_ROW_LEN {
        return Err(Error::InsufficientData(format!("a row sequence needs at least {MIN_ROW_LEN} values of n")));
    }
    let big_m = vs.total_index();
    let ns: Vec<usize> = (a..=b).collect();
    let hps = hp_denominators(vs, &ns, ctx)?;
    let qs: Vec<Polynomial> = hps.iter().map(|h| h.0.clone()).collect();
    let exact = qs.iter().all(Polynomial::is_exact);
    let (status, limit_q) = detect_limit(&qs, big_m, exact);

    let zeros: Vec<Vec<Scalar>> = qs
        .par_iter()
        .map(|q| match q.degree() {
            Some(d) if d > 0 => poly_roots(q, ctx).map(|r| r.flatten()),
            _ => Ok(Vec::new()),
        })
        .collect::<Result<_>>()?;
    let limit_zeros = match &limit_q {
        Some(q) => poly_roots(q, ctx)?.roots,
        None => Vec::new(),
    };
    let targets: Vec<Scalar> = if limit_q.is_some() {
        limit_zeros.iter().flat_map(|r| std::iter::repeat_n(r.location.clone(), r.multiplicity)).collect()
    } else {
        zeros.last().cloned().unwrap_or_default()
    };
    let bits = ctx.bits();
    let trajectories = follow(&targets, &zeros)
        .into_iter()
        .zip(targets)
        .map(|((points, collided), target)| {
            let complete: Option<Vec<Scalar>> = points.iter().cloned().collect();
            match complete {
                Some(xs) if !collided => {
                    let fit = classify_trajectory(&ns, &xs, bits);
                    ZeroTrajectory {
                        target,
                        points,
                        collided,
                        rate: fit.class,
                        fitted_limit: fit.limit,
                        slope: fit.slope,
                        r2: fit.r2,
                    }
                }
                _ => ZeroTrajectory {
                    fitted_limit: target.clone(),
                    target,
                    points,
                    collided: true,
                    rate: RateClass::Undetermined,
                    slope: f64::NAN,
                    r2: 0.0,
                },
            }
        })
        .collect();
    let theta_global = theta_from_differences(&ns, &qs);
    let q_errors = match &limit_q {
        Some(l) => qs.iter().map(|q| q.distance(l)).collect(),
        None => Vec::new(),
    };
    let denominators = ns
        .iter()
        .zip(hps)
        .map(|(&n, (q, kernel_dimension))| DenominatorEntry { n, q, kernel_dimension })
        .collect();
    Ok(RowSequenceReport { ns, denominators, status, limit_q, limit_zeros, trajectories, theta_global, q_errors })
}

#[cfg(test)]
mod tests {
    use super::super::tests::rational;
    use super::*;
    use crate::numeric::PowerSeries;

    #[test]
    fn exact_limit_for_two_geometric_series() {
        let ex = PrecisionContext::exact();
        let vs = VectorSeries::new(vec![rational(&[1], &[1, -2], 60), rational(&[1], &[1, -3], 60)], vec![1, 1]).unwrap();
        let rs = row_sequence(&vs, (2, 50), &ex).unwrap();
        assert_eq!(rs.status, LimitStatus::Detected);
        assert_eq!(rs.limit().unwrap(), &Polynomial::from_i64(&[1, -5, 6]));
        assert!(rs.denominators.iter().all(|d| d.q == Polynomial::from_i64(&[1, -5, 6])));
        assert_eq!(rs.trajectories.len(), 2);
        assert!(rs.trajectories.iter().all(|t| t.rate == RateClass::Geometric { theta: 0.0 }));
        assert_eq!(rs.theta_global.theta, Some(0.0));
    }

    #[test]
    fn geometric_rate_of_a_pade_row() {
        let ex = PrecisionContext::exact();
        // 1/(1-2z) + 1/(1-z) = (2 - 3z) / ((1-2z)(1-z))
        let vs = VectorSeries::new(vec![rational(&[2, -3], &[1, -3, 2], 80)], vec![1]).unwrap();
        let rs = row_sequence(&vs, (20, 60), &ex).unwrap();
        let theta = rs.theta_global.theta.unwrap();
        assert!((theta - 0.5).abs() < 0.1, "{theta}");
        match rs.trajectories[0].rate {
            RateClass::Geometric { theta } => assert!((theta - 0.5).abs() < 0.1),
            c => panic!("{c:?}"),
        }
        // zeta_n = (2^{n-1}+1)/(2^n+1) is exact
        let p = rs.trajectories[0].points[0].clone().unwrap();
        assert_eq!(p, Scalar::from_ratio((1 << 19) + 1, (1 << 20) + 1));
    }

    #[test]
    fn algebraic_branch_point() {
        let ctx = PrecisionContext::bigfloat(128).unwrap();
        let mut c = vec![Scalar::one()];
        for n in 1..2000usize {
            let prev = c[n - 1].clone();
            c.push((&prev * &Scalar::from_ratio(2 * n as i64 - 3, 2 * n as i64)).promote(&ctx));
        }
        let vs = VectorSeries::new(vec![PowerSeries::explicit(c).unwrap()], vec![1]).unwrap();
        let rs = row_sequence(&vs, (1000, 1999), &ctx).unwrap();
        assert_eq!(rs.status, LimitStatus::Detected);
        let t = &rs.trajectories[0];
        assert_eq!(t.rate, RateClass::Subgeometric);
        assert!((t.fitted_limit.abs_f64() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn too_few_values_of_n() {
        let ex = PrecisionContext::exact();
        let vs = VectorSeries::new(vec![rational(&[1], &[1, -2], 60)], vec![1]).unwrap();
        assert!(matches!(row_sequence(&vs, (2, 10), &ex), Err(Error::InsufficientData(_))));
    }
}
