mod cli;
mod commands;
mod output;
mod selfcheck;

use std::process::ExitCode;

use clap::Parser;
use serde::Serialize;
use serde_json::Value;

use cli::{Cli, Globals, Resolved};
use commands::Outcome;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or inputs: exit 2.
    Usage(String),
    /// The computation itself failed: exit 1.
    Numerical(String),
    /// Reading or writing files failed: exit 1.
    Io(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

impl From<laplace_qmle::Error> for CliError {
    fn from(e: laplace_qmle::Error) -> Self {
        use laplace_qmle::Error as E;
        match e {
            E::Overflow { .. } | E::Factorization { .. } | E::NonFiniteObjective => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: Value,
    outputs: &'a [String],
}

fn write_manifest(
    g: &Globals,
    command: &str,
    resolved: &Resolved,
    outputs: &[String],
) -> Result<(), CliError> {
    let mut config = serde_json::to_value(g).expect("globals serialize");
    if let (Value::Object(c), Value::Object(r)) = (&mut config, resolved.to_value()) {
        c.extend(r);
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        outputs,
    };
    output::write_atomic(
        &g.out_dir.join("run-manifest.json"),
        &output::json(&manifest)?,
    )
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let (globals, resolved) = cli::resolve(&cli)?;
    let outcome = match &resolved {
        Resolved::Simulate(c) => commands::simulate(&globals, c)?,
        Resolved::Loglik(c) => commands::loglik(&globals, c)?,
        Resolved::Estimate(c) => commands::estimate_cmd(&globals, c)?,
        Resolved::McConsistency(c) => commands::mc_consistency(&globals, c)?,
        Resolved::BesselTable(c) => commands::bessel_table(&globals, c)?,
        Resolved::TruncationDecay(c) => commands::decay(&globals, c)?,
        Resolved::Selfcheck(c) => {
            let checks = selfcheck::run(globals.seed);
            for ch in &checks {
                println!(
                    "{} {:<32} observed {:.3e}  tolerance {:.3e}",
                    if ch.passed { "PASS" } else { "FAIL" },
                    ch.name,
                    ch.observed,
                    ch.tolerance
                );
            }
            let path = output::out_path(&globals.out_dir, &c.out);
            output::write_atomic(&path, &output::json(&checks)?)?;
            Outcome {
                outputs: vec![c.out.clone()],
                status: if checks.iter().all(|c| c.passed) {
                    0
                } else {
                    1
                },
            }
        }
    };
    write_manifest(&globals, cli.command.name(), &resolved, &outcome.outputs)?;
    Ok(outcome.status as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let body = serde_json::json!({"error": {"kind": e.kind(), "message": e.message()}});
            eprintln!("{body}");
            ExitCode::from(e.exit_code())
        }
    }
}
