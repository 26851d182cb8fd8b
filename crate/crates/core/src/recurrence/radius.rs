use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::stats::fit_line;
use crate::numeric::Scalar;

pub const MIN_SAMPLES: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RadiusMethod {
    RatioTest,
    RootTestRegression,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadiusEstimate {
    pub value: f64,
    pub method: RadiusMethod,
    pub confidence_width: f64,
    /// First and last index of the coefficient window used.
    pub window: (usize, usize),
}

/// Estimates the radius of convergence from c_0..c_N.
///
/// The ratio test averages log |c_n / c_{n+1}| over the last quarter. The root
/// test regresses log |c_n| on n over the last half, using block maxima so
/// that zero or small terms do not bias the slope.
pub fn estimate_radius(c: &[Scalar], method: RadiusMethod) -> Result<RadiusEstimate> {
    let len = c.len();
    if len < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{len} coefficients, at least {MIN_SAMPLES} required"
        )));
    }
    let n = len - 1;
    let logs: Vec<f64> = c.iter().map(Scalar::ln_abs).collect();
    if logs[n / 2..].iter().all(|l| *l == f64::NEG_INFINITY) {
        return Err(Error::AllZeroTail);
    }
    match method {
        RadiusMethod::RatioTest => ratio_test(&logs),
        RadiusMethod::RootTestRegression => root_test(&logs),
    }
}

fn ratio_test(logs: &[f64]) -> Result<RadiusEstimate> {
    let n = logs.len() - 1;
    let start = 3 * n / 4;
    let d: Vec<f64> = (start..n)
        .filter(|&k| logs[k].is_finite() && logs[k + 1].is_finite())
        .map(|k| logs[k] - logs[k + 1])
        .collect();
    if d.is_empty() {
        return Err(Error::InsufficientData("no consecutive nonzero coefficients in the last quarter".into()));
    }
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    let value = mean.exp();
    let width = d.iter().map(|x| (x.exp() - value).abs()).fold(0.0, f64::max);
    Ok(RadiusEstimate { value, method: RadiusMethod::RatioTest, confidence_width: width, window: (start, n) })
}

fn root_test(logs: &[f64]) -> Result<RadiusEstimate> {
    let n = logs.len() - 1;
    let start = n / 2;
    let span = n - start + 1;
    let block = (span / 20).clamp(4, 16);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut k = start;
    while k + block <= n + 1 {
        let end = k + block;
        let mut best: Option<usize> = None;
        for i in k..end {
            if logs[i].is_finite() && best.is_none_or(|b| logs[i] > logs[b]) {
                best = Some(i);
            }
        }
        if let Some(i) = best {
            xs.push(i as f64);
            ys.push(logs[i]);
        }
        k = end;
    }
    if xs.len() < 3 {
        xs.clear();
        ys.clear();
        for (i, l) in logs.iter().enumerate().skip(start) {
            if l.is_finite() {
                xs.push(i as f64);
                ys.push(*l);
            }
        }
    }
    let fit = fit_line(&xs, &ys)
        .ok_or_else(|| Error::InsufficientData("too few nonzero coefficients in the last half".into()))?;
    let value = (-fit.slope).exp();
    let width = value * ((2.0 * fit.slope_stderr).exp() - 1.0);
    Ok(RadiusEstimate {
        value,
        method: RadiusMethod::RootTestRegression,
        confidence_width: width,
        window: (start, n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(n: usize, f: impl Fn(usize) -> Scalar) -> Vec<Scalar> {
        (0..n).map(f).collect()
    }

    #[test]
    fn ratio_test_on_difference_of_powers() {
        let c = seq(200, |n| &Scalar::from_i64(3).powi(n as u64) - &Scalar::from_i64(2).powi(n as u64));
        let e = estimate_radius(&c, RadiusMethod::RatioTest).unwrap();
        assert!((e.value * 3.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn root_test_on_sparse_series() {
        let c = seq(100, |n| if n % 2 == 0 { Scalar::from_i64(4).powi(n as u64 / 2) } else { Scalar::zero() });
        let e = estimate_radius(&c, RadiusMethod::RootTestRegression).unwrap();
        assert!((e.value - 0.5).abs() < 1e-6, "{}", e.value);
        assert!(estimate_radius(&c, RadiusMethod::RatioTest).is_err());
    }

    #[test]
    fn errors() {
        let c = seq(10, |_| Scalar::one());
        assert!(matches!(estimate_radius(&c, RadiusMethod::RatioTest), Err(Error::InsufficientData(_))));
        let c = seq(40, |n| if n < 5 { Scalar::one() } else { Scalar::zero() });
        assert_eq!(estimate_radius(&c, RadiusMethod::RootTestRegression).unwrap_err(), Error::AllZeroTail);
    }
}
