//! Command-line surface and configuration resolution.
//!
//! Every subcommand reads its parameters from built-in defaults, then an
//! optional `--config` JSON file (either a flat object or a previously
//! written `run-manifest.json`), then command-line flags; later layers win.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use laplace_qmle::ParamBox;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::output::{parse_box, parse_theta};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "laplace-qmle",
    version,
    about = "Laplace-innovation QMLE for causal processes"
)]
pub struct Cli {
    /// JSON config file or run manifest; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Master seed (64-bit).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 = automatic.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for output files and the run manifest.
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Allow a true parameter outside the contraction region Θ(2).
    #[arg(long, global = true)]
    pub force: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a trajectory (or raw innovations with `--family none`).
    Simulate(SimulateArgs),
    /// Evaluate the truncated quasi-log-likelihood at a point or over a grid.
    Loglik(LoglikArgs),
    /// Maximise the truncated quasi-likelihood over a box.
    Estimate(EstimateArgs),
    /// Monte Carlo consistency experiment; exits 0 iff medians decrease in n.
    McConsistency(McArgs),
    /// Tabulate K_v(u) with its power bound.
    BesselTable(BesselArgs),
    /// Truncated vs full likelihood gap on nested prefixes of one path.
    TruncationDecay(DecayArgs),
    /// Fast invariant checks.
    Selfcheck(SelfcheckArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Loglik(_) => "loglik",
            Command::Estimate(_) => "estimate",
            Command::McConsistency(_) => "mc-consistency",
            Command::BesselTable(_) => "bessel-table",
            Command::TruncationDecay(_) => "truncation-decay",
            Command::Selfcheck(_) => "selfcheck",
        }
    }

    fn flags(&self) -> Result<Value, CliError> {
        let v = match self {
            Command::Simulate(a) => serde_json::to_value(a),
            Command::Loglik(a) => serde_json::to_value(a),
            Command::Estimate(a) => {
                let mut v = serde_json::to_value(a);
                if let Ok(Value::Object(m)) = &mut v {
                    if a.no_penalty {
                        m.insert("penalty".into(), Value::Bool(false));
                    }
                }
                v
            }
            Command::McConsistency(a) => {
                let mut v = serde_json::to_value(a);
                if let Ok(Value::Object(m)) = &mut v {
                    if a.no_penalty {
                        m.insert("penalty".into(), Value::Bool(false));
                    }
                }
                v
            }
            Command::BesselTable(a) => serde_json::to_value(a),
            Command::TruncationDecay(a) => serde_json::to_value(a),
            Command::Selfcheck(a) => serde_json::to_value(a),
        };
        v.map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// var1, var1c, arch1, ar-arch, or none for raw innovations.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    /// Comma list, JSON array, or a .json/.csv file.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    /// Also write the q values preceding the series.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub presample_out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct LoglikArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<String>,
    /// Presample CSV; adds the full likelihood as `loglik_full`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub presample: Option<String>,
    /// CSV of θ rows (header = parameter names).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<String>,
    /// JSON file `{"lower": [...], "upper": [...]}`; family default if absent.
    #[arg(long = "box")]
    #[serde(rename = "box", skip_serializing_if = "Option::is_none")]
    pub bounds: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub starts: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_evals: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xtol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ftol: Option<f64>,
    /// Drop the soft penalty outside Θ(2).
    #[arg(long)]
    #[serde(skip)]
    pub no_penalty: bool,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct McArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta0: Option<String>,
    /// Sample sizes, e.g. 250,1000,4000.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[arg(long = "box")]
    #[serde(rename = "box", skip_serializing_if = "Option::is_none")]
    pub bounds: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub starts: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_evals: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xtol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ftol: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub no_penalty: bool,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary_out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct BesselArgs {
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_min: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    /// log or linear.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spacing: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct DecayArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta0: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct SelfcheckArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Globals {
    pub seed: u64,
    pub threads: usize,
    pub out_dir: PathBuf,
    pub force: bool,
}

impl Default for Globals {
    fn default() -> Self {
        Self {
            seed: 1,
            threads: 0,
            out_dir: PathBuf::from("."),
            force: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub family: String,
    pub p: usize,
    pub theta: Option<Vec<f64>>,
    pub n: usize,
    pub burn_in: usize,
    pub out: String,
    pub presample_out: Option<String>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            family: "none".into(),
            p: 1,
            theta: None,
            n: 1000,
            burn_in: laplace_qmle::models::DEFAULT_BURN_IN,
            out: "series.csv".into(),
            presample_out: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoglikConfig {
    pub family: Option<String>,
    pub p: usize,
    pub theta: Option<Vec<f64>>,
    pub series: Option<String>,
    pub presample: Option<String>,
    pub grid: Option<String>,
    pub out: String,
}

impl Default for LoglikConfig {
    fn default() -> Self {
        Self {
            family: None,
            p: 1,
            theta: None,
            series: None,
            presample: None,
            grid: None,
            out: "profile.csv".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateConfig {
    pub family: Option<String>,
    pub p: usize,
    pub series: Option<String>,
    #[serde(rename = "box")]
    pub bounds: Option<ParamBox>,
    pub starts: usize,
    pub max_evals: usize,
    pub xtol: f64,
    pub ftol: f64,
    pub penalty: bool,
    pub out: String,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        let opt = laplace_qmle::OptimizerConfig::default();
        Self {
            family: None,
            p: 1,
            series: None,
            bounds: None,
            starts: opt.starts,
            max_evals: opt.max_evals,
            xtol: opt.xtol,
            ftol: opt.ftol,
            penalty: true,
            out: "result.json".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McCliConfig {
    pub family: Option<String>,
    pub p: usize,
    pub theta0: Option<Vec<f64>>,
    pub n: Vec<usize>,
    pub reps: usize,
    pub burn_in: usize,
    #[serde(rename = "box")]
    pub bounds: Option<ParamBox>,
    pub starts: usize,
    pub max_evals: usize,
    pub xtol: f64,
    pub ftol: f64,
    pub penalty: bool,
    pub out: String,
    pub summary_out: String,
}

impl Default for McCliConfig {
    /// A coarser optimizer than `estimate`: the sampling error being
    /// measured is orders of magnitude above 1e-4.
    fn default() -> Self {
        Self {
            family: None,
            p: 1,
            theta0: None,
            n: vec![250, 1000, 4000],
            reps: 50,
            burn_in: laplace_qmle::models::DEFAULT_BURN_IN,
            bounds: None,
            starts: 2,
            max_evals: 3000,
            xtol: 1e-4,
            ftol: 1e-4,
            penalty: true,
            out: "mc.csv".into(),
            summary_out: "mc-summary.json".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BesselConfig {
    pub v: Option<f64>,
    pub u_min: f64,
    pub u_max: f64,
    pub points: usize,
    pub spacing: String,
    pub out: String,
}

impl Default for BesselConfig {
    fn default() -> Self {
        Self {
            v: None,
            u_min: 1e-3,
            u_max: 10.0,
            points: 200,
            spacing: "log".into(),
            out: "bessel.csv".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayConfig {
    pub family: Option<String>,
    pub p: usize,
    pub theta0: Option<Vec<f64>>,
    pub n: Vec<usize>,
    pub burn_in: usize,
    pub out: String,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            family: None,
            p: 1,
            theta0: None,
            n: vec![100, 1000, 10000],
            burn_in: laplace_qmle::models::DEFAULT_BURN_IN,
            out: "decay.csv".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelfcheckConfig {
    pub out: String,
}

impl Default for SelfcheckConfig {
    fn default() -> Self {
        Self {
            out: "selfcheck.json".into(),
        }
    }
}

/// A subcommand with every parameter resolved.
#[derive(Debug, Clone, PartialEq)]
pub enum Resolved {
    Simulate(SimulateConfig),
    Loglik(LoglikConfig),
    Estimate(EstimateConfig),
    McConsistency(McCliConfig),
    BesselTable(BesselConfig),
    TruncationDecay(DecayConfig),
    Selfcheck(SelfcheckConfig),
}

impl Resolved {
    pub fn to_value(&self) -> Value {
        let v = match self {
            Resolved::Simulate(c) => serde_json::to_value(c),
            Resolved::Loglik(c) => serde_json::to_value(c),
            Resolved::Estimate(c) => serde_json::to_value(c),
            Resolved::McConsistency(c) => serde_json::to_value(c),
            Resolved::BesselTable(c) => serde_json::to_value(c),
            Resolved::TruncationDecay(c) => serde_json::to_value(c),
            Resolved::Selfcheck(c) => serde_json::to_value(c),
        };
        v.expect("configs serialize")
    }
}

const GLOBAL_KEYS: [&str; 4] = ["seed", "threads", "out_dir", "force"];

fn read_config(path: &Path, command: &str) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let Value::Object(mut map) = value else {
        return Err(CliError::Usage(format!(
            "{}: expected a JSON object",
            path.display()
        )));
    };
    // a run manifest carries the config under "config"
    if let Some(Value::String(cmd)) = map.get("command") {
        if cmd != command {
            return Err(CliError::Usage(format!(
                "{}: manifest is for '{cmd}', not '{command}'",
                path.display()
            )));
        }
        return match map.remove("config") {
            Some(Value::Object(cfg)) => Ok(cfg),
            _ => Err(CliError::Usage(format!(
                "{}: manifest has no config object",
                path.display()
            ))),
        };
    }
    Ok(map)
}

/// Rewrites flag spellings into their config form: θ strings become
/// arrays, box paths become objects, `"250,1000"` becomes `[250, 1000]`.
fn normalize(map: &mut Map<String, Value>) -> Result<(), CliError> {
    for key in ["theta", "theta0"] {
        if let Some(v) = map.get_mut(key) {
            if !v.is_null() {
                *v = serde_json::to_value(parse_theta(v)?).expect("reals serialize");
            }
        }
    }
    if let Some(v) = map.get_mut("box") {
        if !v.is_null() {
            *v = serde_json::to_value(parse_box(v)?).expect("box serializes");
        }
    }
    if let Some(Value::String(s)) = map.get("n") {
        let list = s
            .split(',')
            .map(|x| x.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| CliError::Usage(format!("n: '{s}' is not a comma list of integers")))?;
        map.insert(
            "n".into(),
            serde_json::to_value(list).expect("integers serialize"),
        );
    }
    Ok(())
}

fn typed<T: DeserializeOwned>(map: Map<String, Value>) -> Result<T, CliError> {
    serde_json::from_value(Value::Object(map)).map_err(|e| CliError::Usage(format!("config: {e}")))
}

/// Merges defaults, the config file and flags.
pub fn resolve(cli: &Cli) -> Result<(Globals, Resolved), CliError> {
    let command = cli.command.name();
    let mut map = match &cli.config {
        Some(path) => read_config(path, command)?,
        None => Map::new(),
    };
    normalize(&mut map)?;

    let Value::Object(mut flags) = cli.command.flags()? else {
        unreachable!("argument structs serialize to objects");
    };
    if let Some(s) = cli.seed {
        flags.insert("seed".into(), s.into());
    }
    if let Some(t) = cli.threads {
        flags.insert("threads".into(), t.into());
    }
    if let Some(d) = &cli.out_dir {
        flags.insert(
            "out_dir".into(),
            Value::String(d.to_string_lossy().into_owned()),
        );
    }
    if cli.force {
        flags.insert("force".into(), Value::Bool(true));
    }
    normalize(&mut flags)?;
    map.extend(flags);

    let mut global_map = Map::new();
    for key in GLOBAL_KEYS {
        if let Some(v) = map.remove(key) {
            global_map.insert(key.into(), v);
        }
    }
    let globals: Globals = typed(global_map)?;
    let resolved = match &cli.command {
        Command::Simulate(_) => Resolved::Simulate(typed(map)?),
        Command::Loglik(_) => Resolved::Loglik(typed(map)?),
        Command::Estimate(_) => Resolved::Estimate(typed(map)?),
        Command::McConsistency(_) => Resolved::McConsistency(typed(map)?),
        Command::BesselTable(_) => Resolved::BesselTable(typed(map)?),
        Command::TruncationDecay(_) => Resolved::TruncationDecay(typed(map)?),
        Command::Selfcheck(_) => Resolved::Selfcheck(typed(map)?),
    };
    Ok((globals, resolved))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("laplace-qmle").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_defaults() {
        let cli = parse(&[
            "mc-consistency",
            "--family",
            "var1",
            "--p",
            "2",
            "--theta0",
            "0.4,0.1,-0.1,0.3,1,0.3,0.8",
            "--n",
            "10,20",
            "--seed",
            "9",
            "--no-penalty",
        ]);
        let (g, r) = resolve(&cli).unwrap();
        assert_eq!(g.seed, 9);
        assert_eq!(g.threads, 0);
        let Resolved::McConsistency(c) = r else {
            panic!()
        };
        assert_eq!(c.n, vec![10, 20]);
        assert_eq!(c.theta0.unwrap().len(), 7);
        assert!(!c.penalty);
        assert_eq!(c.reps, 50);
    }

    #[test]
    fn config_file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(
            &path,
            r#"{"v": -0.5, "points": 7, "seed": 3, "threads": 2}"#,
        )
        .unwrap();
        let cli = parse(&[
            "bessel-table",
            "--config",
            path.to_str().unwrap(),
            "--points",
            "9",
        ]);
        let (g, r) = resolve(&cli).unwrap();
        assert_eq!((g.seed, g.threads), (3, 2));
        let Resolved::BesselTable(c) = r else {
            panic!()
        };
        assert_eq!(c.v, Some(-0.5));
        assert_eq!(c.points, 9);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"v": 0.5, "pionts": 7}"#).unwrap();
        let cli = parse(&["bessel-table", "--config", path.to_str().unwrap()]);
        assert!(matches!(resolve(&cli), Err(CliError::Usage(_))));
    }

    #[test]
    fn manifest_for_another_command_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        std::fs::write(&path, r#"{"command": "simulate", "config": {}}"#).unwrap();
        let cli = parse(&["bessel-table", "--config", path.to_str().unwrap()]);
        assert!(matches!(resolve(&cli), Err(CliError::Usage(_))));
    }
}
