use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::stats::fit_line;
use crate::numeric::{PrecisionContext, Root, RootSet, Scalar};
use crate::rates::{classify_trajectory, GEOMETRIC_SLOPE, MIN_R2};
use crate::recurrence::{RateHint, Recurrence};

/// Zeros of the limit alpha polynomial sharing one modulus.
#[derive(Clone, Debug)]
pub struct CircleGroup {
    pub radius: f64,
    pub zeros: Vec<Root>,
    pub geometric: bool,
}

impl CircleGroup {
    /// Number of zeros counted with multiplicity.
    pub fn multiplicity(&self) -> usize {
        self.zeros.iter().map(|r| r.multiplicity).sum()
    }

    pub fn zero_pairs(&self) -> Vec<(Scalar, usize)> {
        self.zeros.iter().map(|r| (r.location.clone(), r.multiplicity)).collect()
    }
}

/// Whether the coefficient zeros converge geometrically.
#[derive(Clone, Debug)]
pub enum RateInfo {
    Uniform { geometric: bool },
    /// Per-zero flags; a zero takes the flag of the nearest listed location.
    PerZero(Vec<(Scalar, bool)>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateSource {
    Declared,
    Estimated,
}

impl RateInfo {
    /// Declared rate of the coefficient provider, or an estimate from the decay
    /// of consecutive row differences when the provider does not know.
    pub fn from_recurrence(rec: &Recurrence, n_max: usize, ctx: &PrecisionContext) -> Result<(RateInfo, RateSource)> {
        let declared = match rec.rate_hint() {
            RateHint::Constant | RateHint::Geometric => Some(true),
            RateHint::NonGeometric => Some(false),
            RateHint::Unknown => None,
        };
        if let Some(g) = declared {
            return Ok((RateInfo::Uniform { geometric: g }, RateSource::Declared));
        }
        let m = rec.order();
        let fctx = ctx.float_at(ctx.bits().clamp(64, 128));
        let rows = rec.coeff_table(n_max.max(m + 8), &fctx)?;
        let diffs: Vec<f64> = rows
            .windows(2)
            .map(|w| {
                w[0].iter()
                    .zip(&w[1])
                    .map(|(a, b)| (b - a).ln_abs())
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let half = diffs.len() / 2;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, d) in diffs.iter().enumerate().skip(half) {
            if d.is_finite() && *d > fctx.float_ln_zero_threshold() {
                xs.push((m + i) as f64);
                ys.push(*d);
            }
        }
        let geometric = if xs.len() < 4 {
            true
        } else {
            match fit_line(&xs, &ys) {
                Some(f) => f.slope <= GEOMETRIC_SLOPE && f.r2 >= MIN_R2,
                None => true,
            }
        };
        Ok((RateInfo::Uniform { geometric }, RateSource::Estimated))
    }

    /// Flags from trajectories of the coefficient zeros, `trajectories[k][i]`
    /// being the zero approaching `limits[k]` at n = `ns[i]`.
    pub fn from_zero_table(limits: &[Scalar], ns: &[usize], trajectories: &[Vec<Scalar>], bits: usize) -> RateInfo {
        RateInfo::PerZero(
            limits
                .iter()
                .zip(trajectories)
                .map(|(z, t)| (z.clone(), classify_trajectory(ns, t, bits).class.is_geometric()))
                .collect(),
        )
    }

    pub fn is_geometric(&self, zeta: &Scalar) -> bool {
        match self {
            RateInfo::Uniform { geometric } => *geometric,
            RateInfo::PerZero(list) => {
                let mut best: Option<(f64, bool)> = None;
                for (z, g) in list {
                    let d = (z - zeta).abs_f64();
                    if best.is_none_or(|b| d < b.0) {
                        best = Some((d, *g));
                    }
                }
                best.is_some_and(|b| b.1)
            }
        }
    }
}

/// Partitions the zeros by modulus, sorted by increasing radius.
///
/// Consecutive moduli within `tol` (relative) share a circle; moduli that
/// differ by more than `tol` but less than `2 tol` are rejected as ambiguous.
pub fn group_circles(roots: &RootSet, rate: &RateInfo, tol: f64) -> Result<Vec<CircleGroup>> {
    let mut zs: Vec<(f64, Root)> = roots.roots.iter().map(|r| (r.location.abs_f64(), r.clone())).collect();
    zs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut groups: Vec<Vec<(f64, Root)>> = Vec::new();
    for (r, root) in zs {
        if let Some(g) = groups.last_mut() {
            let prev = g.last().unwrap().0;
            let rel = (r - prev) / r.max(f64::MIN_POSITIVE);
            if rel <= tol {
                g.push((r, root));
                continue;
            }
            if rel < 2.0 * tol {
                return Err(Error::AmbiguousGrouping { r1: prev, r2: r });
            }
        }
        groups.push(vec![(r, root)]);
    }
    Ok(groups
        .into_iter()
        .map(|g| {
            let total: usize = g.iter().map(|x| x.1.multiplicity).sum();
            let radius = g.iter().map(|x| x.0 * x.1.multiplicity as f64).sum::<f64>() / total as f64;
            let geometric = g.iter().all(|x| rate.is_geometric(&x.1.location));
            CircleGroup { radius, zeros: g.into_iter().map(|x| x.1).collect(), geometric }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{poly_roots, Polynomial};

    fn groups(c: &[i64]) -> Vec<CircleGroup> {
        let ex = PrecisionContext::exact();
        let roots = poly_roots(&Polynomial::from_i64(c), &ex).unwrap();
        group_circles(&roots, &RateInfo::Uniform { geometric: true }, 1e-3).unwrap()
    }

    #[test]
    fn distinct_moduli() {
        let g = groups(&[1, -5, 6]);
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].zeros[0].location, Scalar::from_ratio(1, 3));
        assert_eq!(g[1].zeros[0].location, Scalar::from_ratio(1, 2));
    }

    #[test]
    fn symmetric_pair() {
        let g = groups(&[1, 0, -4]);
        assert_eq!(g.len(), 1);
        assert!((g[0].radius - 0.5).abs() < 1e-15);
        assert_eq!(g[0].zeros.len(), 2);
    }

    #[test]
    fn double_zero() {
        let g = groups(&[1, -4, 4]);
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].zeros.len(), 1);
        assert_eq!(g[0].zeros[0].multiplicity, 2);
    }

    #[test]
    fn ambiguous_moduli() {
        let roots = RootSet {
            roots: vec![
                Root { location: Scalar::from_f64(0.5, 0.0, 64), multiplicity: 1 },
                Root { location: Scalar::from_f64(-0.5 * (1.0 + 1.5e-3), 0.0, 64), multiplicity: 1 },
            ],
            residual_bound: 0.0,
        };
        let r = group_circles(&roots, &RateInfo::Uniform { geometric: true }, 1e-3);
        assert!(matches!(r, Err(Error::AmbiguousGrouping { .. })));
    }

    #[test]
    fn estimated_rates() {
        let ctx = PrecisionContext::default();
        let rows: Vec<Vec<Scalar>> = (2..200)
            .map(|n| vec![&Scalar::from_i64(-5) + &Scalar::from_ratio(1, n), Scalar::from_i64(6)])
            .collect();
        let rec = Recurrence::table(2, rows).unwrap();
        let (info, src) = RateInfo::from_recurrence(&rec, 199, &ctx).unwrap();
        assert_eq!(src, RateSource::Estimated);
        assert!(!info.is_geometric(&Scalar::one()));
        let rows: Vec<Vec<Scalar>> = (2..200)
            .map(|n| vec![&Scalar::from_i64(-5) + &Scalar::from_ratio(1, 1i64 << n), Scalar::from_i64(6)])
            .take(55)
            .collect();
        let rec = Recurrence::table(2, rows).unwrap();
        let (info, _) = RateInfo::from_recurrence(&rec, 56, &ctx).unwrap();
        assert!(info.is_geometric(&Scalar::one()));
    }
}
