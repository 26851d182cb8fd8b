use super::Recurrence;
use crate::error::{Error, Result};
use crate::numeric::{PowerSeries, PrecisionContext, Scalar, SeriesSource};

/// A solution sequence together with what generated it.
#[derive(Clone, Debug)]
pub struct Solution {
    pub series: PowerSeries,
    pub initial_conditions: Vec<Scalar>,
    pub recurrence: String,
}

impl Solution {
    pub fn coeffs(&self) -> &[Scalar] {
        self.series.coeffs()
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }
}

/// Generates f_0..f_N from f_0..f_{m-1}.
pub fn forward_solve(rec: &Recurrence, init: &[Scalar], n: usize, ctx: &PrecisionContext) -> Result<Solution> {
    let m = rec.order();
    if init.len() != m {
        return Err(Error::BadInitialConditions { expected: m, got: init.len() });
    }
    let table = if n >= m { rec.coeff_table(n, ctx)? } else { Vec::new() };
    Ok(forward_with_table(rec, &table, init, n, ctx))
}

/// Forward recursion with rows already converted to the working arithmetic.
/// `table[i]` holds the coefficients at n = m + i.
pub(crate) fn forward_with_table(
    rec: &Recurrence,
    table: &[Vec<Scalar>],
    init: &[Scalar],
    n: usize,
    ctx: &PrecisionContext,
) -> Solution {
    let m = rec.order();
    let mut f: Vec<Scalar> = init.iter().map(|c| c.promote(ctx)).collect();
    f.truncate(n + 1);
    for k in m..=n {
        let row = &table[k - m];
        let mut acc = Scalar::zero();
        for (j, a) in row.iter().enumerate() {
            let prev = &f[k - 1 - j];
            if a.is_zero() || prev.is_zero() {
                continue;
            }
            acc = &acc - &(a * prev);
        }
        if acc.is_exact_zero() && !ctx.is_exact() {
            acc = Scalar::zero_in(ctx);
        }
        f.push(acc);
    }
    let init: Vec<Scalar> = init.to_vec();
    Solution {
        series: PowerSeries::with_source(
            f,
            SeriesSource::RecurrenceGenerated { recurrence: rec.label.clone(), initial_conditions: init.clone() },
        ),
        initial_conditions: init,
        recurrence: rec.label.clone(),
    }
}

/// Recovers f_0..f_{m-1} from the m values f_{n0-m+1}..f_{n0}.
pub fn backward_solve(rec: &Recurrence, tail: &[Scalar], n0: usize, ctx: &PrecisionContext) -> Result<Vec<Scalar>> {
    let m = rec.order();
    if tail.len() != m {
        return Err(Error::BadInitialConditions { expected: m, got: tail.len() });
    }
    if n0 + 1 < m {
        return Err(Error::InvalidInput(format!("backward solve needs n0 >= {} ", m - 1)));
    }
    let mut f: Vec<Scalar> = vec![Scalar::zero(); n0 + 1];
    for (i, t) in tail.iter().enumerate() {
        f[n0 + 1 - m + i] = t.promote(ctx);
    }
    for k in (m..=n0).rev() {
        let row: Vec<Scalar> = rec.coeffs_at(k)?.iter().map(|c| c.promote(ctx)).collect();
        let mut acc = f[k].clone();
        for j in 1..m {
            acc = &acc + &(&row[j - 1] * &f[k - j]);
        }
        f[k - m] = -(&acc / &row[m - 1]);
    }
    f.truncate(m);
    Ok(f)
}
