//! Type II Hermite-Padé approximation of a vector of power series and the
//! classification of the poles and singularities of the system.

mod classify;
mod row;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::linalg::{nullspace, rref};
use crate::numeric::{series_poly_mul, Polynomial, PowerSeries, PrecisionContext, Scalar};

pub use classify::{
    classify_singularities, induced_recurrence, InducedRecurrence, SingularityEntry, SingularityKind,
    SystemSingularityReport, Witness,
};
pub use row::{row_sequence, DenominatorEntry, LimitStatus, RowSequenceReport, ThetaEstimate, ZeroTrajectory};

/// Components f_1..f_d with the multi-index m = (m_1, ..., m_d).
#[derive(Clone, Debug)]
pub struct VectorSeries {
    components: Vec<PowerSeries>,
    multi_index: Vec<usize>,
}

impl VectorSeries {
    pub fn new(components: Vec<PowerSeries>, multi_index: Vec<usize>) -> Result<VectorSeries> {
        if components.is_empty() {
            return Err(Error::InvalidInput("at least one series is required".into()));
        }
        if components.len() != multi_index.len() {
            return Err(Error::InvalidInput(format!(
                "{} series but a multi-index of length {}",
                components.len(),
                multi_index.len()
            )));
        }
        if multi_index.iter().all(|&m| m == 0) {
            return Err(Error::InvalidInput("multi-index must not be identically zero".into()));
        }
        Ok(VectorSeries { components, multi_index })
    }

    pub fn components(&self) -> &[PowerSeries] {
        &self.components
    }

    pub fn multi_index(&self) -> &[usize] {
        &self.multi_index
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// |m|
    pub fn total_index(&self) -> usize {
        self.multi_index.iter().sum()
    }

    /// Number of coefficients available in every component.
    pub fn min_len(&self) -> usize {
        self.components.iter().map(PowerSeries::len).min().unwrap_or(0)
    }

    pub fn promote(&self, ctx: &PrecisionContext) -> VectorSeries {
        VectorSeries {
            components: self.components.iter().map(|f| f.promote(ctx)).collect(),
            multi_index: self.multi_index.clone(),
        }
    }

    /// The pairs (k, nu) with nu < m_k, in the order used for unknowns and columns.
    pub fn index_pairs(&self) -> Vec<(usize, usize)> {
        self.multi_index.iter().enumerate().flat_map(|(k, &mk)| (0..mk).map(move |nu| (k, nu))).collect()
    }

    /// Coefficient n of z^nu f_k.
    pub(crate) fn shifted_coeff(&self, k: usize, nu: usize, n: usize) -> Scalar {
        if n < nu {
            Scalar::zero()
        } else {
            self.components[k].coeff(n - nu)
        }
    }

    fn all_exact(&self, upto: usize) -> bool {
        self.components.iter().all(|f| f.coeffs().iter().take(upto + 1).all(Scalar::is_exact))
    }
}

/// (n, m) approximant: q with deg q <= |m| and p_k with deg p_k <= n - m_k.
#[derive(Clone, Debug, Serialize)]
pub struct HermitePadeApproximant {
    pub n: usize,
    pub q: Polynomial,
    pub p: Vec<Polynomial>,
    /// Dimension of the solution space of the interpolation conditions.
    pub kernel_dimension: usize,
}

impl HermitePadeApproximant {
    /// Coefficients n - m_k + 1 ..= n of q f_k - p_k for every k, concatenated.
    pub fn order_conditions(&self, vs: &VectorSeries) -> Vec<Scalar> {
        let mut out = Vec::new();
        for (k, f) in vs.components.iter().enumerate() {
            let mk = vs.multi_index[k];
            if mk == 0 {
                continue;
            }
            let g = series_poly_mul(&f.truncated(self.n + 1), &self.q);
            for i in self.n + 1 - mk..=self.n {
                out.push(&g.coeff(i) - &self.p[k].coeff(i));
            }
        }
        out
    }
}

/// Float tolerance for rank decisions, or `None` for exact elimination.
pub(crate) fn rank_tol(exact_data: bool, ctx: &PrecisionContext) -> Option<f64> {
    if exact_data && ctx.is_exact() {
        None
    } else {
        Some(ctx.float_ln_zero_threshold())
    }
}

/// Divides a row by the power of two nearest its largest entry.
pub(crate) fn normalize_row(row: &mut [Scalar]) {
    let top = row.iter().map(Scalar::ln_abs).fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return;
    }
    let k = (top / std::f64::consts::LN_2).round() as i64;
    if k == 0 {
        return;
    }
    let s = crate::numeric::Real::from_i64(2).powi(k.unsigned_abs());
    let s = if k > 0 { s.recip() } else { s };
    for x in row.iter_mut() {
        *x = x.scale_real(&s);
    }
}

fn check_len(vs: &VectorSeries, n: usize) -> Result<()> {
    let len = vs.min_len();
    if len < n + 1 {
        return Err(Error::TruncationTooShort { required: n + 1, available: len });
    }
    Ok(())
}

/// Solves the |m| interpolation conditions [z^nu q f_k]_n = 0 for q.
///
/// When the conditions leave more than one free direction, the basis vector
/// with the most leading zero coefficients is used. q is scaled so that its
/// lowest nonzero coefficient is 1.
pub fn hp_solve(vs: &VectorSeries, n: usize, ctx: &PrecisionContext) -> Result<HermitePadeApproximant> {
    let (q, kernel_dimension) = hp_denominator(vs, n, ctx)?;
    let p = vs
        .components
        .iter()
        .zip(&vs.multi_index)
        .map(|(f, &mk)| {
            let g = series_poly_mul(&f.truncated(n + 1), &q);
            g.taylor_polynomial(n - mk)
        })
        .collect();
    Ok(HermitePadeApproximant { n, q, p, kernel_dimension })
}

/// The denominator q of [`hp_solve`] and the kernel dimension.
pub(crate) fn hp_denominator(vs: &VectorSeries, n: usize, ctx: &PrecisionContext) -> Result<(Polynomial, usize)> {
    let mmax = vs.multi_index.iter().copied().max().unwrap_or(0);
    if n < mmax {
        return Err(Error::InvalidInput(format!("n = {n} is below the largest index {mmax}")));
    }
    check_len(vs, n)?;
    let big_m = vs.total_index();
    let exact = vs.all_exact(n);
    let tol = rank_tol(exact, ctx);
    let conv = |x: Scalar| if exact && ctx.is_exact() { x } else { x.promote(ctx) };
    let mut a: Vec<Vec<Scalar>> = vs
        .index_pairs()
        .into_iter()
        .map(|(k, nu)| {
            // sum_j b_j f_{k, n - nu - j}
            (0..=big_m).map(|j| if nu + j > n { Scalar::zero() } else { conv(vs.components[k].coeff(n - nu - j)) }).collect()
        })
        .collect();
    if tol.is_some() {
        for row in a.iter_mut() {
            normalize_row(row);
        }
    }
    let basis = nullspace(&a, tol);
    let kernel_dimension = basis.len();
    let lowest = |v: &Vec<Scalar>| v.iter().position(|x| !x.is_zero()).unwrap_or(v.len());
    let mut b = basis
        .into_iter()
        .fold(None::<Vec<Scalar>>, |best, v| match best {
            Some(bv) if lowest(&bv) >= lowest(&v) => Some(bv),
            _ => Some(v),
        })
        .ok_or_else(|| Error::InvalidInput("interpolation conditions have only the trivial solution".into()))?;
    if let Some(t) = tol {
        let top = b.iter().map(Scalar::ln_abs).fold(f64::NEG_INFINITY, f64::max);
        for x in b.iter_mut() {
            if x.ln_abs() <= top + t {
                *x = Scalar::zero();
            }
        }
    }
    let lead = b[lowest(&b)].recip();
    let b: Vec<Scalar> = b.iter().map(|x| if x.is_zero() { Scalar::zero() } else { x * &lead }).collect();
    Ok((Polynomial::new(b), kernel_dimension))
}

/// Denominators for every n in `ns`, computed in parallel.
pub(crate) fn hp_denominators(vs: &VectorSeries, ns: &[usize], ctx: &PrecisionContext) -> Result<Vec<(Polynomial, usize)>> {
    ns.par_iter().map(|&n| hp_denominator(vs, n, ctx)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct IndependenceReport {
    pub independent: bool,
    pub rank: usize,
    pub expected: usize,
    pub window: (usize, usize),
}

/// Whether no combination sum p_k f_k with deg p_k < m_k is a polynomial,
/// judged by the rank of the coefficient slices n in `window` of the z^nu f_k.
pub fn poly_independence_test(
    vs: &VectorSeries,
    window: (usize, usize),
    ctx: &PrecisionContext,
) -> Result<IndependenceReport> {
    let (n1, n2) = window;
    let big_m = vs.total_index();
    if n2 < n1 || n2 - n1 < 2 * big_m {
        return Err(Error::WindowTooShort { required: 2 * big_m });
    }
    check_len(vs, n2)?;
    let exact = vs.all_exact(n2);
    let tol = rank_tol(exact, ctx);
    let pairs = vs.index_pairs();
    let mut a: Vec<Vec<Scalar>> = (n1..=n2)
        .map(|n| {
            pairs
                .iter()
                .map(|&(k, nu)| {
                    let x = vs.shifted_coeff(k, nu, n);
                    if tol.is_some() {
                        x.promote(ctx)
                    } else {
                        x
                    }
                })
                .collect()
        })
        .collect();
    if tol.is_some() {
        for row in a.iter_mut() {
            normalize_row(row);
        }
    }
    let rank = rref(&a, tol).rank();
    Ok(IndependenceReport { independent: rank == big_m, rank, expected: big_m, window })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::series_from_rational;

    pub(crate) fn rational(num: &[i64], den: &[i64], n: usize) -> PowerSeries {
        series_from_rational(&Polynomial::from_i64(num), &Polynomial::from_i64(den), n, &PrecisionContext::exact())
            .unwrap()
    }

    fn two_geometric(n: usize) -> VectorSeries {
        VectorSeries::new(vec![rational(&[1], &[1, -2], n), rational(&[1], &[1, -3], n)], vec![1, 1]).unwrap()
    }

    #[test]
    fn two_geometric_series() {
        let ex = PrecisionContext::exact();
        let vs = two_geometric(10);
        let hp = hp_solve(&vs, 2, &ex).unwrap();
        assert_eq!(hp.q, Polynomial::from_i64(&[1, -5, 6]));
        assert_eq!(hp.p[0], Polynomial::from_i64(&[1, -3]));
        assert_eq!(hp.p[1], Polynomial::from_i64(&[1, -2]));
        assert_eq!(hp.kernel_dimension, 1);
        let r = series_poly_mul(&vs.components()[0], &hp.q);
        assert!(r.coeffs()[2..].iter().all(Scalar::is_zero));
        assert!(hp.order_conditions(&vs).iter().all(Scalar::is_zero));
    }

    #[test]
    fn pade_of_a_geometric_series() {
        let ex = PrecisionContext::exact();
        let vs = VectorSeries::new(vec![rational(&[1], &[1, -2], 30)], vec![1]).unwrap();
        for n in 1..=30 {
            assert_eq!(hp_solve(&vs, n, &ex).unwrap().q, Polynomial::from_i64(&[1, -2]));
        }
    }

    #[test]
    fn polynomial_data_has_a_larger_kernel() {
        let ex = PrecisionContext::exact();
        let vs = VectorSeries::new(vec![PowerSeries::from_i64(&[1, 2, 0, 0, 0, 0])], vec![1]).unwrap();
        let hp = hp_solve(&vs, 5, &ex).unwrap();
        assert_eq!(hp.kernel_dimension, 2);
        assert_eq!(hp.q, Polynomial::from_i64(&[0, 1]));
        assert!(hp.order_conditions(&vs).iter().all(Scalar::is_zero));
    }

    #[test]
    fn float_matches_exact() {
        let ctx = PrecisionContext::default();
        let vs = two_geometric(40);
        let hp = hp_solve(&vs, 40, &ctx).unwrap();
        assert!(hp.q.distance(&Polynomial::from_i64(&[1, -5, 6])) < 1e-40);
    }

    #[test]
    fn short_series_is_rejected() {
        let ex = PrecisionContext::exact();
        let r = hp_solve(&two_geometric(5), 8, &ex);
        assert_eq!(r.unwrap_err(), Error::TruncationTooShort { required: 9, available: 6 });
    }

    #[test]
    fn independence() {
        let vs = VectorSeries::new(vec![rational(&[1], &[1, -2], 40), rational(&[2], &[1, -2], 40)], vec![1, 1]).unwrap();
        let ind = two_geometric(40);
        let single = VectorSeries::new(vec![rational(&[1], &[1, -2], 40)], vec![2]).unwrap();
        for ctx in [PrecisionContext::exact(), PrecisionContext::bigfloat(128).unwrap()] {
            assert!(!poly_independence_test(&vs, (10, 30), &ctx).unwrap().independent);
            assert!(poly_independence_test(&ind, (10, 30), &ctx).unwrap().independent);
            assert!(!poly_independence_test(&single, (10, 30), &ctx).unwrap().independent);
        }
        assert_eq!(
            poly_independence_test(&ind, (10, 12), &PrecisionContext::exact()).unwrap_err(),
            Error::WindowTooShort { required: 4 }
        );
    }
}
