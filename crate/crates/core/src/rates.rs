//! Convergence-rate classification of scalar sequences.

use serde::Serialize;

use crate::numeric::stats::fit_line;
use crate::numeric::Scalar;

pub const GEOMETRIC_SLOPE: f64 = -0.051_293_294_387_550_53; // ln 0.95
pub const SUBGEOMETRIC_SLOPE: f64 = -0.001_000_500_333_583_533_5; // ln 0.999
pub const MIN_R2: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "class")]
pub enum RateClass {
    /// |x_n - x| <= C theta^n; theta = 0 when the sequence stabilizes exactly.
    Geometric { theta: f64 },
    Subgeometric,
    Undetermined,
}

impl RateClass {
    pub fn is_geometric(&self) -> bool {
        matches!(self, RateClass::Geometric { .. })
    }
}

#[derive(Clone, Debug)]
pub struct RateFit {
    pub class: RateClass,
    /// Limit estimate: the last value for geometric sequences, an extrapolation otherwise.
    pub limit: Scalar,
    pub slope: f64,
    pub r2: f64,
}

fn geometric_from(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, bool)> {
    if xs.len() < 4 {
        return None;
    }
    let f = fit_line(xs, ys)?;
    Some((f.slope, f.r2, f.slope <= GEOMETRIC_SLOPE && f.r2 >= MIN_R2))
}

/// Least squares x_n ~ L + c1/n + c2/n^2 over the given points, in f64.
fn richardson(ns: &[usize], vals: &[(f64, f64)]) -> Option<(f64, f64)> {
    let k = ns.len();
    if k < 4 {
        return None;
    }
    let rows: Vec<[f64; 3]> = ns
        .iter()
        .map(|&n| {
            let t = 1.0 / n.max(1) as f64;
            [1.0, t, t * t]
        })
        .collect();
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb_re = [0.0f64; 3];
    let mut atb_im = [0.0f64; 3];
    for (r, v) in rows.iter().zip(vals) {
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += r[i] * r[j];
            }
            atb_re[i] += r[i] * v.0;
            atb_im[i] += r[i] * v.1;
        }
    }
    let solve = |b: [f64; 3]| -> Option<f64> {
        let mut m = ata;
        let mut b = b;
        for c in 0..3 {
            let p = (c..3).max_by(|&a, &bb| m[a][c].abs().partial_cmp(&m[bb][c].abs()).unwrap())?;
            if m[p][c].abs() < 1e-300 {
                return None;
            }
            m.swap(c, p);
            b.swap(c, p);
            for r in c + 1..3 {
                let f = m[r][c] / m[c][c];
                for j in c..3 {
                    m[r][j] -= f * m[c][j];
                }
                b[r] -= f * b[c];
            }
        }
        let mut x = [0.0; 3];
        for i in (0..3).rev() {
            let mut acc = b[i];
            for j in i + 1..3 {
                acc -= m[i][j] * x[j];
            }
            x[i] = acc / m[i][i];
        }
        Some(x[0])
    };
    Some((solve(atb_re)?, solve(atb_im)?))
}

/// Classifies the convergence of x_n (n = `ns`) toward its limit.
///
/// Consecutive differences below 2^-(bits-16) |x| count as zero. A sequence
/// whose differences decay geometrically is Geometric with theta read off the
/// slope of log |x_{n+1} - x_n|. Otherwise the limit is extrapolated in powers
/// of 1/n and the slope of log |x_n - x| decides between Subgeometric and
/// Undetermined.
pub fn classify_trajectory(ns: &[usize], xs: &[Scalar], bits: usize) -> RateFit {
    let last = xs.last().cloned().unwrap_or_else(Scalar::zero);
    let floor = last.ln_abs().max(-700.0) - (bits as f64 - 16.0) * std::f64::consts::LN_2;
    let mut dn = Vec::new();
    let mut dl = Vec::new();
    let mut last_live = None;
    for k in 0..xs.len().saturating_sub(1) {
        let d = (&xs[k + 1] - &xs[k]).ln_abs();
        if d > floor {
            dn.push(ns[k] as f64);
            dl.push(d);
            last_live = Some(k);
        }
    }
    let settled = match last_live {
        None => true,
        Some(k) => xs.len() >= 4 && k + 4 < xs.len(),
    };
    if settled {
        let theta = match geometric_from(&dn, &dl) {
            Some((s, _, true)) => s.exp(),
            _ => 0.0,
        };
        return RateFit { class: RateClass::Geometric { theta }, limit: last, slope: theta.ln(), r2: 1.0 };
    }
    if let Some((slope, r2, true)) = geometric_from(&dn, &dl) {
        return RateFit { class: RateClass::Geometric { theta: slope.exp() }, limit: last, slope, r2 };
    }
    let half = xs.len() / 2;
    let c64: Vec<(f64, f64)> = xs.iter().map(Scalar::to_c64).collect();
    let Some((lre, lim)) = richardson(&ns[half..], &c64[half..]) else {
        return RateFit { class: RateClass::Undetermined, limit: last, slope: f64::NAN, r2: 0.0 };
    };
    let mut en = Vec::new();
    let mut el = Vec::new();
    for (n, v) in ns.iter().zip(&c64) {
        let e = ((v.0 - lre).powi(2) + (v.1 - lim).powi(2)).sqrt();
        if e > 0.0 {
            en.push(*n as f64);
            el.push(e.ln());
        }
    }
    let bitsz = last.re.precision().unwrap_or(bits).max(64);
    let limit = Scalar::from_f64(lre, lim, bitsz);
    let Some(f) = fit_line(&en, &el) else {
        return RateFit { class: RateClass::Undetermined, limit, slope: f64::NAN, r2: 0.0 };
    };
    let class = if f.slope <= GEOMETRIC_SLOPE && f.r2 >= MIN_R2 {
        RateClass::Geometric { theta: f.slope.exp() }
    } else if (SUBGEOMETRIC_SLOPE..=0.0).contains(&f.slope) {
        RateClass::Subgeometric
    } else {
        RateClass::Undetermined
    };
    RateFit { class, limit, slope: f.slope, r2: f.r2 }
}
