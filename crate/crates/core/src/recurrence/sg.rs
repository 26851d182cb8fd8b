use serde::Serialize;

use super::{alpha_poly_at, Recurrence};
use crate::error::{Error, Result};
use crate::numeric::stats::fit_line;
use crate::numeric::{poly_roots_seeded, PrecisionContext, Scalar};

/// Bounds on the zeros of alpha_n(z) over a tail window of n.
#[derive(Clone, Debug, Serialize)]
pub struct SgBound {
    /// Smallest zero modulus seen in the window.
    pub s: f64,
    /// Largest zero modulus seen in the window.
    pub g: f64,
    pub window: (usize, usize),
    /// Largest zero modulus grows like a power of n with exponent above 1/2.
    pub g_growing: bool,
}

/// S and G over n in [n_max - w + 1, n_max] with w = (n_max - m + 1) / 2.
pub fn sg_bounds(rec: &Recurrence, n_max: usize, ctx: &PrecisionContext) -> Result<SgBound> {
    let m = rec.order();
    if n_max < m {
        return Err(Error::InsufficientData(format!("n_max = {n_max} is below the order {m}")));
    }
    let w = (n_max - m).div_ceil(2).max(1);
    let start = n_max + 1 - w;
    let fctx = ctx.float_at(ctx.bits().min(128));
    let mut seeds: Option<Vec<Scalar>> = None;
    let mut s = f64::INFINITY;
    let mut g: f64 = 0.0;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for n in start..=n_max {
        let a = alpha_poly_at(rec, n)?;
        let roots = poly_roots_seeded(&a, seeds.as_deref(), &fctx)?;
        let flat = roots.flatten();
        let mods: Vec<f64> = flat.iter().map(Scalar::abs_f64).collect();
        let lo = mods.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = mods.iter().cloned().fold(0.0, f64::max);
        s = s.min(lo);
        g = g.max(hi);
        xs.push((n as f64).ln());
        ys.push(hi.ln());
        seeds = Some(flat);
    }
    let g_growing = xs.len() >= 4 && fit_line(&xs, &ys).is_some_and(|f| f.slope > 0.5);
    Ok(SgBound { s, g, window: (start, n_max), g_growing })
}
