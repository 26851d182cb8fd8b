//! `recurpade` command-line frontend.
//!
//! Exit codes: 0 on success, 1 for input and usage errors, 2 when the analysis
//! fails on a hypothesis or numerically (the report is still written).

mod commands;
mod config;
mod output;
mod plots;

use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use config::Command;

#[derive(Parser, Debug)]
#[command(name = "recurpade", version, about = "Recurrence analysis and Hermite-Padé pole detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: &Command) -> anyhow::Result<ExitCode> {
    let args = command.args();
    let plot_dir = args.plot_dir()?;
    let outcome = commands::run(command).map_err(|e| e.0)?;
    let plots = match &plot_dir {
        Some(dir) => outcome.plots.write(dir)?,
        None => Vec::new(),
    };
    let (status, error, code) = match &outcome.error {
        None => ("ok", serde_json::Value::Null, 0),
        Some(e) => {
            let code = if e.is_input_error() { 1 } else { 2 };
            ("error", json!({ "kind": e.kind(), "message": e.to_string() }), code)
        }
    };
    let report = json!({
        "tool": "recurpade",
        "version": env!("CARGO_PKG_VERSION"),
        "config": outcome.config,
        "status": status,
        "error": error,
        "result": outcome.result,
        "plots": plots,
    });
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    match &args.output {
        Some(path) => output::write_atomic(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    if let Some(e) = &outcome.error {
        eprintln!("error: {e}");
    }
    Ok(ExitCode::from(code))
}
