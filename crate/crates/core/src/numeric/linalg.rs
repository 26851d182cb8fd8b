//! Small dense linear algebra over `Scalar`.

use super::real::Real;
use super::scalar::Scalar;

pub type Matrix = Vec<Vec<Scalar>>;

/// Reduced row echelon form with ascending pivot columns.
#[derive(Clone, Debug)]
pub struct Rref {
    pub matrix: Matrix,
    pub pivots: Vec<usize>,
}

impl Rref {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

fn max_ln(a: &[Vec<Scalar>]) -> f64 {
    a.iter().flatten().map(Scalar::ln_abs).fold(f64::NEG_INFINITY, f64::max)
}

/// Row reduction. With `rel_tol_ln = None` only exact zeros count as zero;
/// otherwise entries below `exp(rel_tol_ln) * max|a|` do.
pub fn rref(a: &[Vec<Scalar>], rel_tol_ln: Option<f64>) -> Rref {
    let mut m: Matrix = a.to_vec();
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let cut = rel_tol_ln.map(|t| t + max_ln(a));
    let negligible = |x: &Scalar| match cut {
        None => x.is_zero(),
        Some(c) => x.ln_abs() <= c,
    };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (best, best_ln) = (r..rows)
            .map(|i| (i, m[i][c].ln_abs()))
            .fold((r, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_ln == f64::NEG_INFINITY || negligible(&m[best][c]) {
            continue;
        }
        let pick = if cut.is_none() {
            (r..rows).find(|&i| !m[i][c].is_zero()).unwrap_or(best)
        } else {
            best
        };
        m.swap(r, pick);
        let inv = m[r][c].recip();
        for j in 0..cols {
            m[r][j] = if j == c { Scalar::one() } else { &m[r][j] * &inv };
        }
        for i in 0..rows {
            if i == r || m[i][c].is_zero() {
                continue;
            }
            let f = m[i][c].clone();
            for j in 0..cols {
                if j == c {
                    m[i][j] = Scalar::zero();
                } else if !m[r][j].is_zero() {
                    m[i][j] = &m[i][j] - &(&f * &m[r][j]);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    Rref { matrix: m, pivots }
}

/// Basis of the right null space, one vector per free column in ascending order.
pub fn nullspace(a: &[Vec<Scalar>], rel_tol_ln: Option<f64>) -> Vec<Vec<Scalar>> {
    let cols = a.first().map_or(0, Vec::len);
    let red = rref(a, rel_tol_ln);
    let mut basis = Vec::new();
    for f in 0..cols {
        if red.pivots.contains(&f) {
            continue;
        }
        let mut v = vec![Scalar::zero(); cols];
        v[f] = Scalar::one();
        for (i, &p) in red.pivots.iter().enumerate() {
            v[p] = -&red.matrix[i][f];
        }
        basis.push(v);
    }
    basis
}

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn solve_square(a: &[Vec<Scalar>], b: &[Scalar]) -> Option<Vec<Scalar>> {
    let n = a.len();
    let mut m: Matrix = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    for c in 0..n {
        let (best, best_ln) = (c..n)
            .map(|i| (i, m[i][c].ln_abs()))
            .fold((c, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_ln == f64::NEG_INFINITY {
            return None;
        }
        m.swap(c, best);
        let inv = m[c][c].recip();
        for i in c + 1..n {
            if m[i][c].is_zero() {
                continue;
            }
            let f = &m[i][c] * &inv;
            for j in c..=n {
                m[i][j] = &m[i][j] - &(&f * &m[c][j]);
            }
        }
    }
    let mut x = vec![Scalar::zero(); n];
    for i in (0..n).rev() {
        let mut acc = m[i][n].clone();
        for j in i + 1..n {
            acc = &acc - &(&m[i][j] * &x[j]);
        }
        x[i] = &acc / &m[i][i];
    }
    Some(x)
}

fn dot_conj(a: &[Scalar], b: &[Scalar]) -> Scalar {
    let mut s = Scalar::zero();
    for (x, y) in a.iter().zip(b) {
        s = &s + &(&x.conj() * y);
    }
    s
}

fn norm2(a: &[Scalar], bits: usize) -> Real {
    let mut s = Real::zero();
    for x in a {
        s = &s + &x.norm_sqr();
    }
    s.sqrt(bits)
}

/// Least squares min |A x - b| by Gram-Schmidt QR with one reorthogonalization.
///
/// Returns the solution and the relative residual |Ax - b| / |b|, or `None`
/// when the columns are numerically dependent.
pub fn least_squares(a: &[Vec<Scalar>], b: &[Scalar], bits: usize) -> Option<(Vec<Scalar>, f64)> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    if rows < cols || cols == 0 {
        return None;
    }
    let mut q: Vec<Vec<Scalar>> = Vec::with_capacity(cols);
    let mut r = vec![vec![Scalar::zero(); cols]; cols];
    let dep_ln = -((bits as f64) / 2.0) * std::f64::consts::LN_2;
    for j in 0..cols {
        let mut v: Vec<Scalar> = (0..rows).map(|i| a[i][j].clone()).collect();
        let orig_ln = norm2(&v, bits).ln_abs();
        for _pass in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let c = dot_conj(qi, &v);
                for (vk, qk) in v.iter_mut().zip(qi) {
                    *vk = &*vk - &(&c * qk);
                }
                r[i][j] = &r[i][j] + &c;
            }
        }
        let nv = norm2(&v, bits);
        if nv.is_zero() || nv.ln_abs() <= orig_ln + dep_ln {
            return None;
        }
        r[j][j] = Scalar::real(nv.clone());
        let inv = Scalar::real(nv.recip());
        q.push(v.iter().map(|x| x * &inv).collect());
    }
    let qb: Vec<Scalar> = q.iter().map(|qi| dot_conj(qi, b)).collect();
    let mut x = vec![Scalar::zero(); cols];
    for i in (0..cols).rev() {
        let mut acc = qb[i].clone();
        for j in i + 1..cols {
            acc = &acc - &(&r[i][j] * &x[j]);
        }
        x[i] = &acc / &r[i][i];
    }
    let mut res = Real::zero();
    for i in 0..rows {
        let mut ax = Scalar::zero();
        for j in 0..cols {
            ax = &ax + &(&a[i][j] * &x[j]);
        }
        res = &res + &(&ax - &b[i]).norm_sqr();
    }
    let bn = norm2(b, bits);
    let rel = if bn.is_zero() { 0.0 } else { (0.5 * res.ln_abs() - bn.ln_abs()).exp() };
    Some((x, rel))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(v: &[&[i64]]) -> Matrix {
        v.iter().map(|r| r.iter().map(|&x| Scalar::from_i64(x)).collect()).collect()
    }

    #[test]
    fn rref_and_nullspace_exact() {
        let a = m(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        let red = rref(&a, None);
        assert_eq!(red.pivots, vec![0, 1]);
        let ns = nullspace(&a, None);
        assert_eq!(ns.len(), 1);
        for row in &a {
            let s = row.iter().zip(&ns[0]).fold(Scalar::zero(), |acc, (x, y)| &acc + &(x * y));
            assert!(s.is_zero());
        }
    }

    #[test]
    fn solve_square_exact() {
        let a = m(&[&[2, 1], &[1, 3]]);
        let x = solve_square(&a, &[Scalar::from_i64(3), Scalar::from_i64(5)]).unwrap();
        assert_eq!(x, vec![Scalar::from_ratio(4, 5), Scalar::from_ratio(7, 5)]);
        assert!(solve_square(&m(&[&[1, 2], &[2, 4]]), &[Scalar::one(), Scalar::one()]).is_none());
    }

    #[test]
    fn least_squares_consistent_system() {
        let bits = 128;
        let a: Matrix = (0..6)
            .map(|i| vec![Scalar::one().to_float(bits), Scalar::from_i64(i).to_float(bits)])
            .collect();
        let b: Vec<Scalar> = (0..6).map(|i| Scalar::from_i64(3 + 2 * i).to_float(bits)).collect();
        let (x, rel) = least_squares(&a, &b, bits).unwrap();
        assert!(rel < 1e-30);
        assert!(x[0].close_to(&Scalar::from_i64(3), 1e-30));
        assert!(x[1].close_to(&Scalar::from_i64(2), 1e-30));
    }

    #[test]
    fn float_rank_with_tolerance() {
        let bits = 128;
        let eps = Scalar::from_f64(1e-30, 0.0, bits);
        let a: Matrix = vec![
            vec![Scalar::one().to_float(bits), Scalar::from_i64(2).to_float(bits)],
            vec![Scalar::from_i64(2).to_float(bits), &Scalar::from_i64(4).to_float(bits) + &eps],
        ];
        assert_eq!(rref(&a, Some(-20.0 * std::f64::consts::LN_10)).rank(), 1);
        assert_eq!(rref(&a, None).rank(), 2);
    }
}
