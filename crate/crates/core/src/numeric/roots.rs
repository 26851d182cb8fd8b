use std::f64::consts::PI;

use num_traits::Zero;

use super::poly::Polynomial;
use super::precision::PrecisionContext;
use super::real::{convergents, Real};
use super::scalar::Scalar;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Root {
    pub location: Scalar,
    pub multiplicity: usize,
}

/// Roots with multiplicities; `residual_bound` is the largest relative backward
/// error, 0 when every root was verified exactly.
#[derive(Clone, Debug, serde::Serialize)]
pub struct RootSet {
    pub roots: Vec<Root>,
    pub residual_bound: f64,
}

impl RootSet {
    pub fn total_multiplicity(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    /// Every root repeated by its multiplicity.
    pub fn flatten(&self) -> Vec<Scalar> {
        self.roots
            .iter()
            .flat_map(|r| std::iter::repeat_n(r.location.clone(), r.multiplicity))
            .collect()
    }

    pub fn is_exact(&self) -> bool {
        self.residual_bound == 0.0 && self.roots.iter().all(|r| r.location.is_exact())
    }
}

fn logsumexp(v: impl Iterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = v.filter(|x| *x > f64::NEG_INFINITY).collect();
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// ln of |p(z)| / sum |a_k| |z|^k.
fn ln_backward_error(p: &Polynomial, abs_ln: &[f64], z: &Scalar) -> f64 {
    let v = p.eval(z).ln_abs();
    let lz = z.ln_abs();
    let scale = logsumexp(abs_ln.iter().enumerate().map(|(k, a)| {
        if k == 0 {
            *a
        } else {
            a + k as f64 * lz
        }
    }));
    v - scale
}

/// Starting points spread on circles read off the Newton polygon of |a_k|.
fn newton_polygon_seeds(abs_ln: &[f64], bits: usize) -> Vec<Scalar> {
    let n = abs_ln.len() - 1;
    let pts: Vec<(usize, f64)> = abs_ln
        .iter()
        .enumerate()
        .filter(|(_, a)| **a > f64::NEG_INFINITY)
        .map(|(k, a)| (k, *a))
        .collect();
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 2];
            let (x2, y2) = hull[hull.len() - 1];
            let cross = (x2 as f64 - x1 as f64) * (p.1 - y1) - (y2 - y1) * (p.0 as f64 - x1 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut seeds = Vec::with_capacity(n);
    for w in hull.windows(2) {
        let (i, yi) = w[0];
        let (j, yj) = w[1];
        let cnt = j - i;
        let r = ((yi - yj) / cnt as f64).clamp(-600.0, 600.0).exp();
        for t in 0..cnt {
            let ang = 2.0 * PI * t as f64 / cnt as f64 + 2.0 * PI * i as f64 / n as f64 + 0.4;
            seeds.push(Scalar::from_f64(r * ang.cos(), r * ang.sin(), bits));
        }
    }
    seeds
}

struct AberthOutcome {
    roots: Vec<Scalar>,
    iterations: usize,
}

fn aberth(p: &Polynomial, seeds: Vec<Scalar>, bits: usize, max_iter: usize) -> AberthOutcome {
    let n = seeds.len();
    let abs_ln: Vec<f64> = p.coeffs().iter().map(Scalar::ln_abs).collect();
    let stop_ln = -((bits as f64) - 8.0) * std::f64::consts::LN_2;
    let mut z = seeds;
    let mut done = vec![false; n];
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let mut active = false;
        for i in 0..n {
            if done[i] {
                continue;
            }
            active = true;
            let (pv, dpv) = p.eval_with_derivative(&z[i]);
            if pv.is_zero() {
                done[i] = true;
                continue;
            }
            let mut s = Scalar::zero();
            for j in 0..n {
                if j != i {
                    let d = &z[i] - &z[j];
                    if !d.is_zero() {
                        s = &s + &d.recip();
                    }
                }
            }
            let denom = &dpv - &(&pv * &s);
            if denom.is_zero() {
                let nudge = Scalar::from_f64(1e-3, 1e-3, bits);
                z[i] = &z[i] + &(&nudge * &Scalar::real(Real::from_f64(z[i].abs_f64().max(1e-300), bits)));
                continue;
            }
            let w = &pv / &denom;
            z[i] = &z[i] - &w;
            let small_step = w.ln_abs() <= z[i].ln_abs() + stop_ln;
            if small_step || ln_backward_error(p, &abs_ln, &z[i]) <= stop_ln {
                done[i] = true;
            }
        }
        if !active {
            break;
        }
    }
    AberthOutcome { roots: z, iterations }
}

/// Groups approximations closer than `radius`; returns (centroid, size).
fn cluster(z: &[Scalar], radius_ln: f64) -> Vec<(Scalar, usize)> {
    let n = z.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut j = i;
        while p[j] != r {
            let nx = p[j];
            p[j] = r;
            j = nx;
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (&z[i] - &z[j]).ln_abs() <= radius_ln {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|(k, _)| *k == r) {
            Some((_, v)) => v.push(i),
            None => groups.push((r, vec![i])),
        }
    }
    groups
        .into_iter()
        .map(|(_, idx)| {
            let mut s = Scalar::zero();
            for &i in &idx {
                s = &s + &z[i];
            }
            let c = &s / &Scalar::from_i64(idx.len() as i64);
            (c, idx.len())
        })
        .collect()
}

/// Newton on the (mult-1)-th derivative, which has a simple root at a root of
/// multiplicity `mult`.
fn refine_multiple(p: &Polynomial, c: Scalar, mult: usize, bits: usize) -> Scalar {
    let mut d = p.clone();
    for _ in 1..mult {
        d = d.derivative();
    }
    let stop_ln = -((bits as f64) - 8.0) * std::f64::consts::LN_2;
    let mut x = c;
    for _ in 0..60 {
        let (v, dv) = d.eval_with_derivative(&x);
        if v.is_zero() || dv.is_zero() {
            break;
        }
        let step = &v / &dv;
        x = &x - &step;
        if step.ln_abs() <= x.ln_abs().max(-700.0) + stop_ln {
            break;
        }
    }
    x
}

fn rational_candidates(x: &Real, bits: usize) -> Vec<Real> {
    let q = x.to_rational();
    if q.is_zero() {
        return vec![Real::zero()];
    }
    let tol_ln = -(bits as f64) / 2.0 * std::f64::consts::LN_2;
    let scale_ln = x.ln_abs().max(0.0);
    convergents(&q, (bits / 4) as u64)
        .into_iter()
        .filter(|c| {
            let d = Real::Exact(c - &q).ln_abs();
            d <= scale_ln + tol_ln
        })
        .take(1)
        .map(Real::Exact)
        .collect()
}

/// Exact root of `p` near the float approximation `c`, if one exists with small height.
fn rationalize_root(p: &Polynomial, c: &Scalar, mult: usize, bits: usize) -> Option<Scalar> {
    let tiny_im = c.im.ln_abs() <= c.ln_abs().max(-700.0) - (bits as f64) / 2.0 * std::f64::consts::LN_2;
    let re_c = if c.re.ln_abs() <= c.ln_abs().max(-700.0) - (bits as f64) / 2.0 * std::f64::consts::LN_2 {
        vec![Real::zero()]
    } else {
        rational_candidates(&c.re, bits)
    };
    let im_c = if tiny_im { vec![Real::zero()] } else { rational_candidates(&c.im, bits) };
    for re in &re_c {
        for im in &im_c {
            let cand = Scalar::new(re.clone(), im.clone());
            let mut d = p.clone();
            let mut ok = true;
            for k in 0..mult {
                if k > 0 {
                    d = d.derivative();
                }
                if !d.eval(&cand).is_zero() {
                    ok = false;
                    break;
                }
            }
            if ok {
                return Some(cand);
            }
        }
    }
    None
}

fn sort_roots(roots: &mut [Root]) {
    roots.sort_by(|a, b| {
        let (ma, mb) = (a.location.ln_abs(), b.location.ln_abs());
        let close = (ma - mb).abs() <= 1e-12 * (1.0 + ma.abs().max(mb.abs()));
        if close {
            a.location.arg_f64().partial_cmp(&b.location.arg_f64()).unwrap()
        } else {
            ma.partial_cmp(&mb).unwrap()
        }
    });
}

/// Drops rounding-level imaginary parts from the roots of a real polynomial.
/// A root keeps its imaginary part when it could be one half of a conjugate pair.
fn snap_real(centers: &mut [(Scalar, usize)], radius_ln: f64) {
    let ims: Vec<f64> = centers.iter().map(|(c, _)| c.im.ln_abs()).collect();
    for i in 0..centers.len() {
        if ims[i] == f64::NEG_INFINITY || ims[i] > radius_ln {
            continue;
        }
        let nearest = (0..centers.len())
            .filter(|&j| j != i)
            .map(|j| (&centers[i].0 - &centers[j].0).ln_abs())
            .fold(f64::INFINITY, f64::min);
        if ims[i] + 4f64.ln() < nearest {
            centers[i].0 = Scalar::real(centers[i].0.re.clone());
        }
    }
}

pub fn poly_roots(p: &Polynomial, ctx: &PrecisionContext) -> Result<RootSet> {
    poly_roots_seeded(p, None, ctx)
}

/// Roots of `p` by simultaneous (Aberth-Ehrlich) iteration.
///
/// `seeds`, when given with one entry per nonzero root, replace the
/// Newton-polygon starting points; used to follow roots of slowly varying
/// polynomials.
pub fn poly_roots_seeded(p: &Polynomial, seeds: Option<&[Scalar]>, ctx: &PrecisionContext) -> Result<RootSet> {
    let deg = p
        .degree()
        .ok_or_else(|| Error::InvalidInput("roots of the zero polynomial".into()))?;
    let bits = ctx.bits();
    let mut out: Vec<Root> = Vec::new();
    let k0 = p.coeffs().iter().take_while(|c| c.is_zero()).count();
    if k0 > 0 {
        out.push(Root { location: Scalar::zero_in(ctx), multiplicity: k0 });
    }
    let r = Polynomial::new(p.coeffs()[k0..].to_vec());
    let rdeg = deg - k0;
    let mut residual: f64 = 0.0;
    if rdeg == 1 {
        let root = -(&r.coeff(0) / &r.coeff(1));
        out.push(Root { location: root.promote(ctx), multiplicity: 1 });
    } else if rdeg >= 2 {
        let rf = r.to_float(bits);
        let abs_ln: Vec<f64> = rf.coeffs().iter().map(Scalar::ln_abs).collect();
        let start = match seeds {
            Some(s) if s.len() == rdeg && s.iter().all(|x| !x.is_zero()) => {
                let mut v: Vec<Scalar> = s.iter().map(|x| x.to_float(bits)).collect();
                for i in 0..v.len() {
                    for j in 0..i {
                        if v[i] == v[j] {
                            let bump = Scalar::from_f64(1.0 + 1e-6 * (i as f64), 1e-6 * (i as f64), bits);
                            v[i] = &v[i] * &bump;
                        }
                    }
                }
                v
            }
            _ => newton_polygon_seeds(&abs_ln, bits),
        };
        let outcome = aberth(&rf, start, bits, ctx.tol.max_root_iterations);
        let tol_ln = -(bits as f64) / 4.0 * std::f64::consts::LN_10;
        let worst = outcome
            .roots
            .iter()
            .map(|z| ln_backward_error(&rf, &abs_ln, z))
            .fold(f64::NEG_INFINITY, f64::max);
        if worst > tol_ln {
            return Err(Error::DidNotConverge { iterations: outcome.iterations, residual: worst.exp() });
        }
        let max_ln = outcome.roots.iter().map(Scalar::ln_abs).fold(f64::NEG_INFINITY, f64::max);
        let radius_ln = ctx.tol.clustering_radius.ln() + max_ln;
        let exact_poly = r.is_exact();
        let mut all_exact = true;
        let mut found: Vec<Root> = Vec::new();
        let mut centers = cluster(&outcome.roots, radius_ln);
        if r.coeffs().iter().all(Scalar::is_real) {
            snap_real(&mut centers, radius_ln);
        }
        for (c, mult) in centers {
            let c = if mult > 1 { refine_multiple(&rf, c, mult, bits) } else { c };
            let mut loc = None;
            if ctx.is_exact() && exact_poly {
                loc = rationalize_root(&r, &c, mult, bits);
            }
            match loc {
                Some(x) => found.push(Root { location: x, multiplicity: mult }),
                None => {
                    all_exact = false;
                    residual = residual.max(ln_backward_error(&rf, &abs_ln, &c).exp()).max((-(bits as f64)).exp2());
                    found.push(Root { location: c, multiplicity: mult });
                }
            }
        }
        if ctx.is_exact() && exact_poly && all_exact {
            let lead = r.leading().unwrap().clone();
            let pairs: Vec<(Scalar, usize)> = found.iter().map(|x| (x.location.clone(), x.multiplicity)).collect();
            if Polynomial::from_roots(&pairs).scale(&lead) != r {
                for f in found.iter_mut() {
                    f.location = f.location.to_float(bits);
                }
                residual = 2f64.powi(-(bits as i32));
            }
        }
        out.extend(found);
    }
    sort_roots(&mut out);
    if !ctx.is_exact() {
        for r in out.iter_mut() {
            r.location = r.location.promote(ctx);
        }
    }
    Ok(RootSet { roots: out, residual_bound: residual })
}
