use std::path::Path;

use recurpade::fundamental::build_fundamental_system;
use recurpade::hermite_pade::RowSequenceReport;
use recurpade::io::{ProblemSpec, RecurrenceTableFile};
use recurpade::numeric::poly_roots;
use recurpade::recurrence::{char_poly, estimate_radius, forward_solve, sg_bounds, RadiusMethod};
use recurpade::{classify_singularities, hp_solve, row_sequence, Error, PrecisionContext, Recurrence, Scalar};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{resolve_precision, Command, RunArgs, RunConfig};
use crate::plots::{Plot, PlotSet};

pub const DEFAULT_RECURRENCE_N: usize = 400;
pub const DEFAULT_ANALYSIS_N: usize = 200;

/// What a command produced. `error` is set when the analysis failed after the
/// input was accepted; `result` may then hold partial results.
pub struct Outcome {
    pub config: RunConfig,
    pub result: Value,
    pub error: Option<Error>,
    pub plots: PlotSet,
}

/// Failures before any analysis ran: unreadable or invalid input, bad flags.
#[derive(Debug)]
pub struct UsageError(pub anyhow::Error);

impl From<anyhow::Error> for UsageError {
    fn from(e: anyhow::Error) -> Self {
        UsageError(e)
    }
}

impl From<Error> for UsageError {
    fn from(e: Error) -> Self {
        UsageError(e.into())
    }
}

fn read(path: &Path) -> Result<String, UsageError> {
    std::fs::read_to_string(path).map_err(|e| UsageError(anyhow::anyhow!("cannot read {}: {e}", path.display())))
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

fn or_error<T: Serialize>(r: recurpade::Result<T>) -> Value {
    match r {
        Ok(x) => to_value(&x),
        Err(e) => json!({ "error": { "kind": e.kind(), "message": e.to_string() } }),
    }
}

pub fn run(command: &Command) -> Result<Outcome, UsageError> {
    let args = command.args();
    match command {
        Command::AnalyzeRecurrence(_) | Command::BuildFundamental(_) => {
            let table = RecurrenceTableFile::from_json(&read(&args.input)?)?;
            let rec = table.to_recurrence()?;
            let (ctx, precision) = resolve_precision(args, None)?;
            let mut config = RunConfig::new(command, precision);
            if matches!(command, Command::AnalyzeRecurrence(_)) {
                let init = table.initial_conditions()?;
                let n = args.n_max.unwrap_or(DEFAULT_ANALYSIS_N);
                if n < rec.order().max(1) {
                    return Err(anyhow::anyhow!("--n-max {n} is below the order {}", rec.order()).into());
                }
                config.n_max = Some(n);
                Ok(analyze_recurrence(config, &rec, init, n, &ctx, args))
            } else {
                let n = args.n_max.unwrap_or(DEFAULT_RECURRENCE_N);
                config.n_max = Some(n);
                Ok(build_fundamental(config, &rec, n, &ctx, args))
            }
        }
        Command::HermitePade(_) | Command::RowSequence(_) | Command::Classify(_) => {
            let spec = ProblemSpec::from_json(&read(&args.input)?)?;
            let (ctx, precision) = resolve_precision(args, spec.precision.as_ref())?;
            let mut config = RunConfig::new(command, precision);
            let range = match (spec.n_range, args.n_max) {
                (Some([a, b]), None) => [a, b],
                (Some([a, _]), Some(n)) if a <= n => [a, n],
                (Some([a, _]), Some(n)) => return Err(anyhow::anyhow!("--n-max {n} is below the start {a} of n_range").into()),
                (None, Some(n)) => [n / 2, n],
                (None, None) => return Err(anyhow::anyhow!("n_range is missing; give it in the spec or pass --n-max").into()),
            };
            let len = spec.resolved_length(range[1]);
            config.n_range = Some(range);
            config.length = Some(len);
            let vs = spec.vector_series(len, &ctx)?;
            let (a, b) = (range[0], range[1]);
            Ok(match command {
                Command::HermitePade(_) => {
                    config.n_max = Some(b);
                    let (result, error) = match hp_solve(&vs, b, &ctx) {
                        Ok(h) => {
                            let oc = h.order_conditions(&vs);
                            let worst = oc.iter().map(Scalar::abs_f64).fold(0.0, f64::max);
                            let exact = oc.iter().all(Scalar::is_zero);
                            let v = json!({
                                "approximant": to_value(&h),
                                "order_conditions": { "count": oc.len(), "max_abs": worst, "all_zero": exact },
                            });
                            (v, None)
                        }
                        Err(e) => (Value::Null, Some(e)),
                    };
                    Outcome { config, result, error, plots: PlotSet::default() }
                }
                Command::RowSequence(_) => {
                    let (result, error, plots) = match row_sequence(&vs, (a, b), &ctx) {
                        Ok(rs) => {
                            let plots = if args.emit_plots { row_plots(&rs) } else { PlotSet::default() };
                            (to_value(&rs), None, plots)
                        }
                        Err(e) => (Value::Null, Some(e), PlotSet::default()),
                    };
                    Outcome { config, result, error, plots }
                }
                _ => {
                    // The row sequence is recomputed only when its plot data or a
                    // partial result is wanted.
                    let rows = || row_sequence(&vs, (a, b), &ctx);
                    match classify_singularities(&vs, (a, b), &ctx) {
                        Ok(rep) => {
                            let plots = match args.emit_plots.then(rows) {
                                Some(Ok(rs)) => row_plots(&rs),
                                _ => PlotSet::default(),
                            };
                            let poles: Vec<Value> =
                                rep.poles().iter().map(|(z, s)| json!({ "zeta": to_value(z), "order": s })).collect();
                            let result = json!({ "system_poles": poles, "report": to_value(&rep) });
                            Outcome { config, result, error: None, plots }
                        }
                        Err(e) => {
                            let partial = rows();
                            let plots = match (&partial, args.emit_plots) {
                                (Ok(rs), true) => row_plots(rs),
                                _ => PlotSet::default(),
                            };
                            let result = json!({ "partial": { "row_sequence": or_error(partial) } });
                            Outcome { config, result, error: Some(e), plots }
                        }
                    }
                }
            })
        }
    }
}

fn analyze_recurrence(
    config: RunConfig,
    rec: &Recurrence,
    init: Option<Vec<Scalar>>,
    n: usize,
    ctx: &PrecisionContext,
    args: &RunArgs,
) -> Outcome {
    let m = rec.order();
    let (p, alpha) = match char_poly(rec) {
        Ok(x) => x,
        Err(e) => return Outcome { config, result: Value::Null, error: Some(e), plots: PlotSet::default() },
    };
    let roots = poly_roots(&p, ctx);
    let zeros = poly_roots(&alpha, ctx);
    let (roots, zeros) = match (roots, zeros) {
        (Ok(r), Ok(z)) => (r, z),
        (Err(e), _) | (_, Err(e)) => {
            return Outcome { config, result: Value::Null, error: Some(e), plots: PlotSet::default() }
        }
    };
    let mut moduli: Vec<f64> = zeros.roots.iter().map(|r| r.location.abs_f64()).collect();
    moduli.sort_by(f64::total_cmp);
    let tol = ctx.tol.circle_tol;
    let distinct = moduli.windows(2).all(|w| w[1] - w[0] > tol * w[1]);

    let given = init.is_some();
    let init = init.unwrap_or_else(|| (0..m).map(|i| if i + 1 == m { Scalar::one() } else { Scalar::zero() }).collect());
    let (solution, plots) = match forward_solve(rec, &init, n, ctx) {
        Ok(sol) => {
            let c = sol.coeffs();
            let ratio = if c[n - 1].is_zero() { Value::Null } else { to_value(&(&c[n] / &c[n - 1])) };
            let v = json!({
                "init": to_value(&init),
                "init_given": given,
                "n": n,
                "last_ratio": ratio,
                "radius_ratio_test": or_error(estimate_radius(c, RadiusMethod::RatioTest)),
                "radius_root_test": or_error(estimate_radius(c, RadiusMethod::RootTestRegression)),
            });
            let plots = if args.emit_plots { ratio_plots("ratios.csv", c) } else { PlotSet::default() };
            (v, plots)
        }
        Err(e) => (or_error::<()>(Err(e)), PlotSet::default()),
    };
    let result = json!({
        "order": m,
        "limit": to_value(&rec.limit()),
        "char_poly": to_value(&p),
        "alpha_poly": to_value(&alpha),
        "char_roots": to_value(&roots),
        "alpha_zeros": to_value(&zeros),
        "zero_moduli": moduli,
        "distinct_moduli": distinct,
        "sg_bounds": or_error(sg_bounds(rec, n, ctx)),
        "solution": solution,
    });
    Outcome { config, result, error: None, plots }
}

fn build_fundamental(config: RunConfig, rec: &Recurrence, n: usize, ctx: &PrecisionContext, args: &RunArgs) -> Outcome {
    match build_fundamental_system(rec, n, ctx) {
        Ok(fs) => {
            let mut plots = PlotSet::default();
            if args.emit_plots {
                for (i, m) in fs.members.iter().enumerate() {
                    plots.0.extend(ratio_plots(&format!("ratios_member{i}.csv"), m.solution.series.coeffs()).0);
                }
            }
            let radii: Vec<Option<f64>> = fs.members.iter().map(|m| m.radius.map(|r| r.value)).collect();
            let result = json!({ "radii": radii, "system": to_value(&fs) });
            Outcome { config, result, error: None, plots }
        }
        Err(e) => Outcome { config, result: Value::Null, error: Some(e), plots: PlotSet::default() },
    }
}

fn ratio_plots(name: &str, c: &[Scalar]) -> PlotSet {
    let mut rows = Vec::new();
    for n in 0..c.len().saturating_sub(1) {
        if c[n].is_zero() {
            continue;
        }
        let (re, im) = (&c[n + 1] / &c[n]).to_c64();
        rows.push(vec![n.to_string(), re.to_string(), im.to_string()]);
    }
    PlotSet(vec![Plot { name: name.into(), header: vec!["n", "re", "im"], rows }])
}

fn row_plots(rs: &RowSequenceReport) -> PlotSet {
    let mut zeros = Vec::new();
    for (i, &n) in rs.ns.iter().enumerate() {
        for (k, t) in rs.trajectories.iter().enumerate() {
            if let Some(Some(z)) = t.points.get(i) {
                let (re, im) = z.to_c64();
                let err = (z - &t.target).abs_f64();
                zeros.push(vec![n.to_string(), k.to_string(), re.to_string(), im.to_string(), err.to_string()]);
            }
        }
    }
    let qnorm = rs.ns.iter().zip(&rs.q_errors).map(|(n, e)| vec![n.to_string(), e.to_string()]).collect();
    PlotSet(vec![
        Plot { name: "zeros.csv".into(), header: vec!["n", "zero_index", "re", "im", "error"], rows: zeros },
        Plot { name: "qnorm.csv".into(), header: vec!["n", "qnorm"], rows: qnorm },
    ])
}
