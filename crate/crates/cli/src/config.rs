use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Subcommand};
use recurpade::io::{ModeInput, PrecisionSpec};
use recurpade::numeric::precision::DEFAULT_BITS;
use recurpade::PrecisionContext;
use serde::Serialize;

pub const BITS_ENV: &str = "RECURPADE_PRECISION_BITS";

#[derive(Subcommand, Clone, Debug)]
pub enum Command {
    /// Characteristic roots, alpha zeros and ratio behaviour of a recurrence table.
    AnalyzeRecurrence(RunArgs),
    /// Fundamental system of a recurrence table.
    BuildFundamental(RunArgs),
    /// One Hermite-Padé approximant of a problem spec.
    HermitePade(RunArgs),
    /// Row sequence of denominators over n_range.
    RowSequence(RunArgs),
    /// System poles and singularities of a problem spec.
    Classify(RunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::AnalyzeRecurrence(_) => "analyze-recurrence",
            Command::BuildFundamental(_) => "build-fundamental",
            Command::HermitePade(_) => "hermite-pade",
            Command::RowSequence(_) => "row-sequence",
            Command::Classify(_) => "classify",
        }
    }

    pub fn args(&self) -> &RunArgs {
        match self {
            Command::AnalyzeRecurrence(a)
            | Command::BuildFundamental(a)
            | Command::HermitePade(a)
            | Command::RowSequence(a)
            | Command::Classify(a) => a,
        }
    }
}

#[derive(Args, Clone, Debug)]
pub struct RunArgs {
    /// Recurrence table (analyze-recurrence, build-fundamental) or problem spec (the others).
    #[arg(long)]
    pub input: PathBuf,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub precision_bits: Option<usize>,
    /// Exact rational arithmetic.
    #[arg(long)]
    pub exact: bool,
    /// Number of coefficients N for recurrences; upper end of n_range for problem specs.
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Write CSV plot data next to the report.
    #[arg(long)]
    pub emit_plots: bool,
    #[arg(long)]
    pub circle_tol: Option<f64>,
}

impl RunArgs {
    pub fn plot_dir(&self) -> anyhow::Result<Option<PathBuf>> {
        if !self.emit_plots {
            return Ok(None);
        }
        let Some(out) = &self.output else {
            bail!("--emit-plots needs --output; the CSV files are written next to the report");
        };
        let dir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        Ok(Some(dir.to_path_buf()))
    }
}

/// Precision after applying defaults, the environment, the spec block and the flags, in that order.
#[derive(Clone, Debug, Serialize)]
pub struct ResolvedPrecision {
    pub mode: ModeInput,
    pub bits: usize,
    pub zero_threshold: f64,
    pub circle_tol: f64,
}

pub fn resolve_precision(args: &RunArgs, block: Option<&PrecisionSpec>) -> anyhow::Result<(PrecisionContext, ResolvedPrecision)> {
    let mut p = PrecisionSpec::default();
    if let Ok(v) = std::env::var(BITS_ENV) {
        let bits: usize = v.trim().parse().with_context(|| format!("{BITS_ENV} must be a positive integer, got {v:?}"))?;
        p.bits = Some(bits);
    }
    if let Some(b) = block {
        p.mode = b.mode.or(p.mode);
        p.bits = b.bits.or(p.bits);
        p.zero_threshold = b.zero_threshold.or(p.zero_threshold);
        p.circle_tol = b.circle_tol.or(p.circle_tol);
    }
    if let Some(bits) = args.precision_bits {
        p.bits = Some(bits);
    }
    if args.exact {
        p.mode = Some(ModeInput::Exact);
    }
    if let Some(c) = args.circle_tol {
        p.circle_tol = Some(c);
    }
    let ctx = p.to_context()?;
    let resolved = ResolvedPrecision {
        mode: p.mode.unwrap_or(ModeInput::Bigfloat),
        bits: p.bits.unwrap_or(DEFAULT_BITS),
        zero_threshold: ctx.zero_threshold(),
        circle_tol: ctx.tol.circle_tol,
    };
    Ok((ctx, resolved))
}

/// Everything needed to repeat a run.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub input_path: String,
    pub output_path: Option<String>,
    pub precision: ResolvedPrecision,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_range: Option<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    pub emit_plots: bool,
}

impl RunConfig {
    pub fn new(command: &Command, precision: ResolvedPrecision) -> RunConfig {
        let a = command.args();
        RunConfig {
            command: command.name(),
            input_path: a.input.display().to_string(),
            output_path: a.output.as_ref().map(|p| p.display().to_string()),
            precision,
            n_max: None,
            n_range: None,
            length: None,
            emit_plots: a.emit_plots,
        }
    }
}
