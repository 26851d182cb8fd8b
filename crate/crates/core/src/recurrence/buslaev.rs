use super::radius::{estimate_radius, RadiusEstimate, RadiusMethod};
use super::{char_poly, Recurrence};
use crate::error::{Error, Result};
use crate::numeric::{poly_roots, Polynomial, PrecisionContext, Root, Scalar};

/// Zeros of the limit polynomial that lie on the circle of convergence of a solution.
#[derive(Clone, Debug)]
pub struct BuslaevClassification {
    pub r0: RadiusEstimate,
    pub circle_zeros: Vec<Root>,
    /// Product of (1 - z/zeta)^tau over the circle zeros.
    pub beta: Polynomial,
    /// Number of circle zeros counted with multiplicity.
    pub ell: usize,
    /// beta divides the limit alpha polynomial (exactly in exact mode).
    pub divides_alpha: bool,
}

pub fn buslaev_classify(rec: &Recurrence, f: &[Scalar], ctx: &PrecisionContext) -> Result<BuslaevClassification> {
    let (_, alpha) = char_poly(rec)?;
    let r0 = estimate_radius(f, RadiusMethod::RootTestRegression)?;
    let roots = poly_roots(&alpha, ctx)?;
    let tol = ctx.tol.circle_tol;
    let circle_zeros: Vec<Root> = roots
        .roots
        .into_iter()
        .filter(|r| (r.location.abs_f64() - r0.value).abs() <= tol * r0.value)
        .collect();
    if circle_zeros.is_empty() {
        return Err(Error::NoMatchingCircle { radius: r0.value });
    }
    let pairs: Vec<(Scalar, usize)> = circle_zeros.iter().map(|r| (r.location.clone(), r.multiplicity)).collect();
    let beta = Polynomial::from_zeros_normalized(&pairs);
    let ell = pairs.iter().map(|p| p.1).sum();
    let (_, rem) = alpha.promote(ctx).div_rem(&beta);
    let divides_alpha = if ctx.is_exact() && beta.is_exact() {
        rem.is_zero()
    } else {
        rem.is_zero() || rem.max_ln_abs() <= alpha.max_ln_abs() + ctx.float_ln_zero_threshold() + 10f64.ln()
    };
    Ok(BuslaevClassification { r0, circle_zeros, beta, ell, divides_alpha })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recurrence::forward_solve;

    #[test]
    fn generic_solution_sits_on_the_inner_circle() {
        let ex = PrecisionContext::exact();
        let r = Recurrence::constant_i64(&[-5, 6]).unwrap();
        let s = forward_solve(&r, &[Scalar::from_i64(1), Scalar::from_i64(1)], 120, &ex).unwrap();
        let b = buslaev_classify(&r, s.coeffs(), &ex).unwrap();
        assert_eq!(b.ell, 1);
        assert_eq!(b.circle_zeros[0].location, Scalar::from_ratio(1, 3));
        assert_eq!(b.beta, Polynomial::from_i64(&[1, -3]));
        assert!(b.divides_alpha);
    }

    #[test]
    fn symmetric_pair_has_two_circle_zeros() {
        let ex = PrecisionContext::exact();
        let r = Recurrence::constant_i64(&[0, -4]).unwrap();
        let s = forward_solve(&r, &[Scalar::from_i64(1), Scalar::from_i64(1)], 120, &ex).unwrap();
        let b = buslaev_classify(&r, s.coeffs(), &ex).unwrap();
        assert_eq!(b.ell, 2);
        assert_eq!(b.beta, Polynomial::from_i64(&[1, 0, -4]));
    }

    #[test]
    fn off_circle_growth_has_no_match() {
        let ex = PrecisionContext::exact();
        let r = Recurrence::constant_i64(&[-5, 6]).unwrap();
        let f: Vec<Scalar> = (0..100).map(|n| Scalar::from_i64(5).powi(n)).collect();
        assert!(matches!(buslaev_classify(&r, &f, &ex), Err(Error::NoMatchingCircle { .. })));
    }
}
