//! JSON input formats: recurrence table files and problem specs.
//!
//! Parsing is strict. Unknown fields are rejected and every number is read
//! exactly, so `0.1` becomes 1/10 rather than the nearest double.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite_pade::VectorSeries;
use crate::numeric::precision::DEFAULT_BITS;
use crate::numeric::real::Real;
use crate::numeric::{series_from_rational, Polynomial, PowerSeries, PrecisionContext, Scalar};
use crate::recurrence::{forward_solve, Perturbation, RateHint, Recurrence};

/// A scalar as written in an input file: "p/q", a decimal string, a JSON
/// number, or `{"re": .., "im": ..}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarInput {
    Text(String),
    Int(i64),
    Number(f64),
    Complex(ComplexInput),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexInput {
    pub re: Box<ScalarInput>,
    pub im: Box<ScalarInput>,
}

impl ScalarInput {
    pub fn to_scalar(&self) -> Result<Scalar> {
        match self {
            ScalarInput::Text(s) => Ok(Scalar::from_rational(Real::parse_rational(s)?)),
            ScalarInput::Int(v) => Ok(Scalar::from_i64(*v)),
            ScalarInput::Number(x) => {
                if !x.is_finite() {
                    return Err(Error::InvalidInput(format!("non-finite number {x}")));
                }
                // The shortest round-trip representation is read as an exact decimal.
                Ok(Scalar::from_rational(Real::parse_rational(&format!("{x:e}"))?))
            }
            ScalarInput::Complex(c) => {
                let re = c.re.to_scalar()?;
                let im = c.im.to_scalar()?;
                if !re.im.is_exact_zero() || !im.im.is_exact_zero() {
                    return Err(Error::InvalidInput("nested complex parts".into()));
                }
                Ok(Scalar::new(re.re, im.re))
            }
        }
    }

    pub fn from_scalar(z: &Scalar) -> ScalarInput {
        let part = |r: &Real| ScalarInput::Text(r.to_decimal_string());
        if z.im.is_exact_zero() {
            part(&z.re)
        } else {
            ScalarInput::Complex(ComplexInput { re: Box::new(part(&z.re)), im: Box::new(part(&z.im)) })
        }
    }
}

fn scalars(v: &[ScalarInput], what: &str) -> Result<Vec<Scalar>> {
    v.iter()
        .enumerate()
        .map(|(i, s)| s.to_scalar().map_err(|e| Error::InvalidInput(format!("{what}[{i}]: {e}"))))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateInput {
    Constant,
    Geometric,
    NonGeometric,
    Unknown,
}

impl From<RateInput> for RateHint {
    fn from(r: RateInput) -> RateHint {
        match r {
            RateInput::Constant => RateHint::Constant,
            RateInput::Geometric => RateHint::Geometric,
            RateInput::NonGeometric => RateHint::NonGeometric,
            RateInput::Unknown => RateHint::Unknown,
        }
    }
}

/// r(n) in alpha_{n,j} = base_j + scale_j r(n).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationInput {
    InverseN,
    Geometric(ScalarInput),
    Table(Vec<ScalarInput>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub scale: Vec<ScalarInput>,
    pub kinds: Vec<PerturbationInput>,
}

/// Recurrence table file.
///
/// Row i of `coeffs` holds (alpha_{n,1}, ..., alpha_{n,m}) at n = m + i and the
/// last row is held for larger n. With `perturbation`, `coeffs` must be a
/// single row, the constant part.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecurrenceTableFile {
    pub order: usize,
    pub coeffs: Vec<Vec<ScalarInput>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<Vec<ScalarInput>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationSpec>,
    /// Initial conditions f_0..f_{m-1}, for commands that analyze one solution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<ScalarInput>>,
}

impl RecurrenceTableFile {
    pub fn from_json(text: &str) -> Result<RecurrenceTableFile> {
        serde_json::from_str(text).map_err(schema_error)
    }

    pub fn to_recurrence(&self) -> Result<Recurrence> {
        let m = self.order;
        if m == 0 {
            return Err(Error::InvalidOrder);
        }
        let rows = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, r)| scalars(r, &format!("coeffs[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let mut rec = match &self.perturbation {
            None => {
                if rows.len() == 1 {
                    if rows[0].len() != m {
                        return Err(Error::InvalidInput(format!(
                            "coeffs[0] has {} entries, expected {m}",
                            rows[0].len()
                        )));
                    }
                    Recurrence::constant(rows[0].clone())?
                } else {
                    Recurrence::table(m, rows)?
                }
            }
            Some(p) => {
                if rows.len() != 1 || rows[0].len() != m {
                    return Err(Error::InvalidInput(
                        "a perturbed recurrence takes exactly one row of base coefficients".into(),
                    ));
                }
                let scale = scalars(&p.scale, "perturbation.scale")?;
                let kinds = p
                    .kinds
                    .iter()
                    .map(|k| {
                        Ok(match k {
                            PerturbationInput::InverseN => Perturbation::InverseN,
                            PerturbationInput::Geometric(r) => Perturbation::Geometric(r.to_scalar()?),
                            PerturbationInput::Table(v) => Perturbation::Table(scalars(v, "perturbation.table")?),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Recurrence::perturbed(rows[0].clone(), scale, kinds)?
            }
        };
        if let Some(l) = &self.limit {
            let l = scalars(l, "limit")?;
            if l.last().is_some_and(Scalar::is_zero) {
                return Err(Error::InvalidInput("the last limit coefficient must be nonzero".into()));
            }
            rec = rec.with_limit(l)?;
        }
        if let Some(r) = self.rate {
            rec = rec.with_rate(r.into());
        }
        Ok(rec)
    }

    pub fn initial_conditions(&self) -> Result<Option<Vec<Scalar>>> {
        self.init.as_deref().map(|v| scalars(v, "init")).transpose()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeInput {
    Exact,
    Bigfloat,
}

/// The "precision" block. Absent fields fall back to the caller's defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecisionSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circle_tol: Option<f64>,
}

impl PrecisionSpec {
    pub fn to_context(&self) -> Result<PrecisionContext> {
        let bits = self.bits.unwrap_or(DEFAULT_BITS);
        let mut ctx = match self.mode.unwrap_or(ModeInput::Bigfloat) {
            ModeInput::Exact => PrecisionContext::exact_with_bits(bits),
            ModeInput::Bigfloat => PrecisionContext::bigfloat(bits)?,
        };
        if let Some(t) = self.zero_threshold {
            ctx = ctx.with_zero_threshold(t)?;
        }
        if let Some(c) = self.circle_tol {
            if !(c > 0.0 && c < 1.0) {
                return Err(Error::InvalidInput(format!("circle_tol must lie in (0, 1), got {c}")));
            }
            ctx.tol.circle_tol = c;
        }
        Ok(ctx)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeriesSpec {
    /// num/den with ascending coefficients.
    Rational { num: Vec<ScalarInput>, den: Vec<ScalarInput> },
    Coeffs { values: Vec<ScalarInput> },
    Recurrence { table: RecurrenceTableFile, init: Vec<ScalarInput> },
}

impl SeriesSpec {
    /// The first `len` coefficients; explicit coefficient lists are used as given.
    pub fn to_series(&self, len: usize, ctx: &PrecisionContext) -> Result<PowerSeries> {
        let len = len.max(1);
        match self {
            SeriesSpec::Rational { num, den } => {
                let num = Polynomial::new(scalars(num, "num")?);
                let den = Polynomial::new(scalars(den, "den")?);
                series_from_rational(&num, &den, len - 1, ctx)
            }
            SeriesSpec::Coeffs { values } => {
                let c = scalars(values, "values")?;
                let f = PowerSeries::explicit(c)?;
                Ok(if ctx.is_exact() { f } else { f.promote(ctx) })
            }
            SeriesSpec::Recurrence { table, init } => {
                let rec = table.to_recurrence()?;
                let init = scalars(init, "init")?;
                let n = len.max(rec.order()) - 1;
                Ok(forward_solve(&rec, &init, n, ctx)?.series)
            }
        }
    }
}

/// Problem spec for the Hermite-Padé commands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub series: Vec<SeriesSpec>,
    pub multi_index: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_range: Option<[usize; 2]>,
    /// Number of coefficients generated for rational and recurrence series.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<PrecisionSpec>,
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> Result<ProblemSpec> {
        let spec: ProblemSpec = serde_json::from_str(text).map_err(schema_error)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.series.is_empty() {
            return Err(Error::InvalidInput("series: at least one series is required".into()));
        }
        if self.series.len() != self.multi_index.len() {
            return Err(Error::InvalidInput(format!(
                "multi_index: {} entries for {} series",
                self.multi_index.len(),
                self.series.len()
            )));
        }
        if self.multi_index.iter().all(|&m| m == 0) {
            return Err(Error::InvalidInput("multi_index: must not be identically zero".into()));
        }
        if let Some([a, b]) = self.n_range {
            if a > b {
                return Err(Error::InvalidInput(format!("n_range: empty range [{a}, {b}]")));
            }
        }
        Ok(())
    }

    /// Number of coefficients to generate: `length`, or enough for `n_range` with a margin.
    pub fn resolved_length(&self, n_max: usize) -> usize {
        self.length.unwrap_or(n_max + 1 + n_max / 5 + 8)
    }

    pub fn vector_series(&self, len: usize, ctx: &PrecisionContext) -> Result<VectorSeries> {
        let comps = self
            .series
            .iter()
            .enumerate()
            .map(|(k, s)| s.to_series(len, ctx).map_err(|e| annotate(e, &format!("series[{k}]"))))
            .collect::<Result<Vec<_>>>()?;
        VectorSeries::new(comps, self.multi_index.clone())
    }
}

fn annotate(e: Error, at: &str) -> Error {
    match e {
        Error::InvalidInput(msg) => Error::InvalidInput(format!("{at}: {msg}")),
        other => other,
    }
}

fn schema_error(e: serde_json::Error) -> Error {
    Error::InvalidInput(format!("schema: {e}"))
}
