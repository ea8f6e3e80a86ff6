//! Subcommand bodies. Each returns the output files it wrote (relative to
//! the output directory) and the process status.

use std::path::Path;

use laplace_qmle::likelihood::ProfilePoint;
use laplace_qmle::{
    bessel_bound_constant, estimate, estimate_consistency_path, family_by_name, full_loglik,
    log_bessel_k, profile_loglik, sample_innovations, simulate_path, theta2_membership,
    truncation_decay, BesselOrder, InnovationSpec, McConfig, ModelFamily, OptimizerConfig,
};
use serde::Serialize;

use crate::cli::{
    BesselConfig, DecayConfig, EstimateConfig, Globals, LoglikConfig, McCliConfig, SimulateConfig,
};
use crate::output::{
    csv_text, json, out_path, read_series, read_table, real, series_csv, write_atomic,
};
use crate::CliError;

pub struct Outcome {
    pub outputs: Vec<String>,
    pub status: i32,
}

impl Outcome {
    fn ok(outputs: Vec<String>) -> Self {
        Self { outputs, status: 0 }
    }
}

fn required<'a, T>(value: &'a Option<T>, key: &str) -> Result<&'a T, CliError> {
    value
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("missing required parameter '{key}'")))
}

fn family(name: &Option<String>, p: usize) -> Result<Box<dyn ModelFamily>, CliError> {
    Ok(family_by_name(required(name, "family")?, p)?)
}

fn emit(
    g: &Globals,
    name: &str,
    contents: &str,
    outputs: &mut Vec<String>,
) -> Result<(), CliError> {
    write_atomic(&out_path(&g.out_dir, name), contents)?;
    outputs.push(name.to_owned());
    Ok(())
}

pub fn simulate(g: &Globals, c: &SimulateConfig) -> Result<Outcome, CliError> {
    let spec = InnovationSpec::new(c.p, g.seed)?;
    let mut outputs = Vec::new();
    if c.family == "none" {
        let z = sample_innovations(spec, c.n)?;
        emit(g, &c.out, &series_csv(&z, "z", false)?, &mut outputs)?;
        return Ok(Outcome::ok(outputs));
    }
    let fam = family_by_name(&c.family, c.p)?;
    let theta = required(&c.theta, "theta")?;
    let path = simulate_path(fam.as_ref(), theta, c.n, c.burn_in, spec, g.force)?;
    emit(
        g,
        &c.out,
        &series_csv(&path.series, "x", true)?,
        &mut outputs,
    )?;
    if let Some(pre) = &c.presample_out {
        emit(
            g,
            pre,
            &series_csv(&path.presample, "x", true)?,
            &mut outputs,
        )?;
    }
    Ok(Outcome::ok(outputs))
}

pub fn loglik(g: &Globals, c: &LoglikConfig) -> Result<Outcome, CliError> {
    let fam = family(&c.family, c.p)?;
    let series = read_series(Path::new(required(&c.series, "series")?), fam.dim())?;
    let names: Vec<String> = fam.params().into_iter().map(|s| s.name).collect();
    let grid: Vec<Vec<f64>> = match (&c.grid, &c.theta) {
        (Some(path), _) => {
            let (header, rows) = read_table(Path::new(path))?;
            if header.len() != names.len() {
                return Err(CliError::Usage(format!(
                    "{path}: expected {} parameter columns, found {}",
                    names.len(),
                    header.len()
                )));
            }
            rows
        }
        (None, Some(theta)) => vec![theta.clone()],
        (None, None) => {
            return Err(CliError::Usage("loglik needs 'theta' or 'grid'".into()));
        }
    };
    let points: Vec<ProfilePoint> = profile_loglik(fam.as_ref(), &series, &grid)?;
    let presample = c
        .presample
        .as_ref()
        .map(|p| read_series(Path::new(p), fam.dim()))
        .transpose()?;

    let mut header = names;
    header.extend(["loglik", "clamp_count", "in_theta2"].map(String::from));
    if presample.is_some() {
        header.push("loglik_full".into());
    }
    let mut rows = Vec::with_capacity(points.len());
    for pt in &points {
        let mut row: Vec<String> = pt.theta.iter().map(|&x| real(x)).collect();
        row.push(real(pt.value));
        row.push(pt.clamp_count.to_string());
        row.push(pt.in_theta2.to_string());
        if let Some(pre) = &presample {
            row.push(real(
                full_loglik(fam.as_ref(), &pt.theta, &series, pre)?.value,
            ));
        }
        rows.push(row);
    }
    let mut outputs = Vec::new();
    emit(g, &c.out, &csv_text(&header, &rows)?, &mut outputs)?;
    Ok(Outcome::ok(outputs))
}

#[derive(Serialize)]
struct StartSummary {
    theta_start: Vec<f64>,
    theta_end: Vec<f64>,
    value: f64,
    evals: usize,
    converged: bool,
}

#[derive(Serialize)]
struct EstimateReport<'a> {
    family: &'a str,
    p: usize,
    n: usize,
    param_names: &'a [String],
    theta_hat: &'a [f64],
    value: f64,
    loglik: f64,
    in_theta2: bool,
    theta2_margin: f64,
    clamp_count: usize,
    box_violations: usize,
    best_start_index: usize,
    starts: Vec<StartSummary>,
    warnings: &'a [String],
}

pub fn estimate_cmd(g: &Globals, c: &EstimateConfig) -> Result<Outcome, CliError> {
    let fam = family(&c.family, c.p)?;
    let series = read_series(Path::new(required(&c.series, "series")?), fam.dim())?;
    let bounds = c.bounds.clone().unwrap_or_else(|| fam.default_box());
    let cfg = OptimizerConfig {
        starts: c.starts,
        max_evals: c.max_evals,
        xtol: c.xtol,
        ftol: c.ftol,
        seed: g.seed,
        restrict_theta2: c.penalty,
    };
    let r = estimate(fam.as_ref(), &series, &bounds, &cfg)?;
    let margin = theta2_membership(fam.as_ref(), r.theta_hat.coords())?.margin;
    let report = EstimateReport {
        family: c.family.as_deref().unwrap_or_default(),
        p: fam.dim(),
        n: series.len(),
        param_names: &r.param_names,
        theta_hat: r.theta_hat.coords(),
        value: r.value,
        loglik: r.loglik,
        in_theta2: r.in_theta2,
        theta2_margin: margin,
        clamp_count: r.clamp_count,
        box_violations: r.box_violations,
        best_start_index: r.best_start_index,
        starts: r
            .start_results
            .iter()
            .map(|s| StartSummary {
                theta_start: s.theta_start.clone(),
                theta_end: s.theta_end.clone(),
                value: s.value,
                evals: s.evals,
                converged: s.converged,
            })
            .collect(),
        warnings: &r.warnings,
    };
    let mut outputs = Vec::new();
    emit(g, &c.out, &json(&report)?, &mut outputs)?;
    Ok(Outcome::ok(outputs))
}

#[derive(Serialize)]
struct RepFailure<'a> {
    n: usize,
    rep: usize,
    error: &'a str,
}

#[derive(Serialize)]
struct McSummaryFile<'a> {
    family: &'a str,
    theta0: &'a [f64],
    summaries: &'a [laplace_qmle::McSummary],
    verdict: bool,
    failures: Vec<RepFailure<'a>>,
}

pub fn mc_consistency(g: &Globals, c: &McCliConfig) -> Result<Outcome, CliError> {
    let fam = family(&c.family, c.p)?;
    let theta0 = required(&c.theta0, "theta0")?;
    let cfg = McConfig {
        n_list: c.n.clone(),
        reps: c.reps,
        seed: g.seed,
        burn_in: c.burn_in,
        threads: g.threads,
        optimizer: OptimizerConfig {
            starts: c.starts,
            max_evals: c.max_evals,
            xtol: c.xtol,
            ftol: c.ftol,
            seed: g.seed,
            restrict_theta2: c.penalty,
        },
        bounds: c.bounds.clone(),
    };
    let report = estimate_consistency_path(fam.as_ref(), theta0, &cfg)?;

    let header: Vec<String> = ["n", "rep", "seed", "err_norm", "converged", "clamp_count"]
        .map(String::from)
        .to_vec();
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                r.rep.to_string(),
                r.seed.to_string(),
                real(r.err_norm),
                r.converged.to_string(),
                r.clamp_count.to_string(),
            ]
        })
        .collect();
    let summary = McSummaryFile {
        family: c.family.as_deref().unwrap_or_default(),
        theta0,
        summaries: &report.summaries,
        verdict: report.verdict,
        failures: report
            .rows
            .iter()
            .filter_map(|r| {
                r.error.as_deref().map(|error| RepFailure {
                    n: r.n,
                    rep: r.rep,
                    error,
                })
            })
            .collect(),
    };
    let mut outputs = Vec::new();
    emit(g, &c.out, &csv_text(&header, &rows)?, &mut outputs)?;
    emit(g, &c.summary_out, &json(&summary)?, &mut outputs)?;
    for s in &report.summaries {
        eprintln!(
            "n = {:>6}  median = {:.6}  iqr = {:.6}  max = {:.6}  failures = {}",
            s.n, s.median, s.iqr, s.max, s.failures
        );
    }
    eprintln!(
        "verdict: {}",
        if report.verdict {
            "medians decreasing"
        } else {
            "NOT decreasing"
        }
    );
    Ok(Outcome {
        outputs,
        status: if report.verdict { 0 } else { 1 },
    })
}

/// Grid of `points` values from `lo` to `hi` inclusive.
pub fn grid(lo: f64, hi: f64, points: usize, log: bool) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let last = (points - 1) as f64;
    (0..points)
        .map(|i| {
            let s = i as f64 / last;
            if i == 0 {
                lo
            } else if i == points - 1 {
                hi
            } else if log {
                (lo.ln() + s * (hi.ln() - lo.ln())).exp()
            } else {
                lo + s * (hi - lo)
            }
        })
        .collect()
}

pub fn bessel_table(g: &Globals, c: &BesselConfig) -> Result<Outcome, CliError> {
    let v = *required(&c.v, "v")?;
    let order = BesselOrder::new(v)?;
    let log = match c.spacing.as_str() {
        "log" => true,
        "linear" => false,
        other => {
            return Err(CliError::Usage(format!(
                "spacing must be log or linear, got '{other}'"
            )))
        }
    };
    if !(c.u_min > 0.0 && c.u_max >= c.u_min && c.u_max.is_finite()) || c.points == 0 {
        return Err(CliError::Usage(
            "need 0 < u_min <= u_max and points >= 1".into(),
        ));
    }
    // K_v = K_{-v}, so the bound with exponent -|v| applies to either sign
    let bound_const = if v == 0.0 {
        None
    } else {
        Some(bessel_bound_constant(-v.abs())?)
    };
    let header: Vec<String> = ["u", "k_v", "log_k_v", "bound_Au_v"]
        .map(String::from)
        .to_vec();
    let rows = grid(c.u_min, c.u_max, c.points, log)
        .into_iter()
        .map(|u| {
            let ln = log_bessel_k(order, u)?;
            let bound = bound_const.map_or(f64::NAN, |a| a * u.powf(-v.abs()));
            Ok(vec![real(u), real(ln.exp()), real(ln), real(bound)])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut outputs = Vec::new();
    emit(g, &c.out, &csv_text(&header, &rows)?, &mut outputs)?;
    Ok(Outcome::ok(outputs))
}

pub fn decay(g: &Globals, c: &DecayConfig) -> Result<Outcome, CliError> {
    let fam = family(&c.family, c.p)?;
    let theta0 = required(&c.theta0, "theta0")?;
    let points = truncation_decay(fam.as_ref(), theta0, &c.n, g.seed, c.burn_in)?;
    let header: Vec<String> = ["n", "mean_diff", "bound"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|d| vec![d.n.to_string(), real(d.mean_diff), real(d.bound)])
        .collect();
    let mut outputs = Vec::new();
    emit(g, &c.out, &csv_text(&header, &rows)?, &mut outputs)?;
    Ok(Outcome::ok(outputs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints_are_exact_for_linear() {
        let g = grid(0.1, 10.0, 5, false);
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], 0.1);
        assert_eq!(g[4], 10.0);
        let g = grid(1e-3, 10.0, 3, true);
        assert!((g[1] - 0.1).abs() < 1e-15);
        assert_eq!(g[2], 10.0);
        assert_eq!(grid(2.0, 3.0, 1, true), vec![2.0]);
    }
}
