//! The QMLE `θ̂_n = argmax_{θ ∈ Θ} L̂_n(θ)` by multistart projected
//! Nelder–Mead.
//!
//! Scale coordinates (`ParamKind::Scale`) are searched as `η = ln(θ - floor)`;
//! all other coordinates are searched as-is. Coordinates whose box interval
//! is a single point are pinned and not searched.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{truncated_value, Workspace};
use crate::models::{theta2_membership, ModelFamily, ParamBox, ParamKind, ThetaVector};
use crate::optim::{minimize, NelderMeadConfig};
use crate::series::SeriesMatrix;

/// Penalty slope applied to `max(0, -margin)` outside Θ(2).
pub const THETA2_PENALTY: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub starts: usize,
    pub max_evals: usize,
    pub xtol: f64,
    pub ftol: f64,
    pub seed: u64,
    pub restrict_theta2: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            starts: 8,
            max_evals: 2000,
            xtol: 1e-8,
            ftol: 1e-10,
            seed: 1,
            restrict_theta2: true,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 {
            return Err(Error::InvalidArgument("starts must be >= 1".into()));
        }
        if !(self.xtol.is_finite() && self.xtol > 0.0 && self.ftol.is_finite() && self.ftol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if self.max_evals == 0 {
            return Err(Error::InvalidArgument("max_evals must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartResult {
    pub theta_start: Vec<f64>,
    pub theta_end: Vec<f64>,
    /// Penalised objective at `theta_end` (equal to `L̂_n` inside Θ(2)).
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
    /// Best-so-far objective after each evaluation.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationResult {
    pub theta_hat: ThetaVector,
    pub param_names: Vec<String>,
    /// Penalised objective at `theta_hat`; the maximum over `start_results`.
    pub value: f64,
    /// `L̂_n(theta_hat)`.
    pub loglik: f64,
    pub start_results: Vec<StartResult>,
    pub best_start_index: usize,
    pub in_theta2: bool,
    pub clamp_count: usize,
    /// Evaluations requested outside the box. Always zero unless the
    /// projection is broken.
    pub box_violations: usize,
    pub warnings: Vec<String>,
}

/// Coordinate map between the parameter box and the optimizer's search box.
struct Search {
    kinds: Vec<ParamKind>,
    bounds: ParamBox,
    pinned: Vec<f64>,
    free: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Search {
    fn new(kinds: Vec<ParamKind>, bounds: &ParamBox) -> Self {
        let free: Vec<usize> = (0..bounds.dim())
            .filter(|&i| bounds.lower[i] < bounds.upper[i])
            .collect();
        let to_inner = |i: usize, v: f64| match kinds[i] {
            ParamKind::Free => v,
            ParamKind::Scale { floor } => (v - floor).ln(),
        };
        let lower = free.iter().map(|&i| to_inner(i, bounds.lower[i])).collect();
        let upper = free.iter().map(|&i| to_inner(i, bounds.upper[i])).collect();
        Self {
            pinned: bounds.lower.clone(),
            bounds: bounds.clone(),
            kinds,
            free,
            lower,
            upper,
        }
    }

    /// Maps a search point to θ, clamped into the box. Returns whether the
    /// unclamped image left the box by more than rounding.
    fn to_theta(&self, inner: &[f64], theta: &mut [f64]) -> bool {
        theta.copy_from_slice(&self.pinned);
        let mut outside = false;
        for (k, &i) in self.free.iter().enumerate() {
            let v = match self.kinds[i] {
                ParamKind::Free => inner[k],
                ParamKind::Scale { floor } => floor + inner[k].exp(),
            };
            let (lo, hi) = (self.bounds.lower[i], self.bounds.upper[i]);
            let slack = 1e-12 * (1.0 + v.abs());
            if v < lo - slack || v > hi + slack || v.is_nan() {
                outside = true;
            }
            theta[i] = v.clamp(lo, hi);
        }
        outside
    }

    /// Cranley–Patterson rotated Halton points in the search box.
    fn starts(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        const PRIMES: [u64; 24] = [
            2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83,
            89,
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift: Vec<f64> = (0..self.free.len()).map(|_| rng.random::<f64>()).collect();
        (0..count)
            .map(|s| {
                (0..self.free.len())
                    .map(|k| {
                        let base = PRIMES[k % PRIMES.len()] + 97 * (k / PRIMES.len()) as u64;
                        let u = (radical_inverse(s as u64 + 1, base) + shift[k]).fract();
                        self.lower[k] + u * (self.upper[k] - self.lower[k])
                    })
                    .collect()
            })
            .collect()
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Maximises the truncated quasi-likelihood over `bounds`.
pub fn estimate(
    family: &dyn ModelFamily,
    series: &SeriesMatrix,
    bounds: &ParamBox,
    config: &OptimizerConfig,
) -> Result<EstimationResult> {
    config.validate()?;
    let params = family.params();
    bounds.validate_for(&params)?;
    if series.dim() != family.dim() {
        return Err(Error::Dimension {
            expected: family.dim(),
            got: series.dim(),
        });
    }
    let d = params.len();
    let mut warnings = Vec::new();
    if series.len() < 10 * d {
        warnings.push(format!(
            "series length {} is below 10·d = {} for d = {d} parameters",
            series.len(),
            10 * d
        ));
    }

    let search = Search::new(params.iter().map(|s| s.kind).collect(), bounds);
    let mut ws = Workspace::new(family.dim());
    let mut theta = vec![0.0; d];
    let mut violations = 0usize;
    let mut objective = |inner: &[f64], theta: &mut [f64], ws: &mut Workspace| -> f64 {
        if search.to_theta(inner, theta) {
            violations += 1;
        }
        penalised(family, theta, series, ws, config.restrict_theta2)
    };

    let nm = NelderMeadConfig {
        max_evals: config.max_evals,
        xtol: config.xtol,
        ftol: config.ftol,
        ..Default::default()
    };
    let starts = if search.free.is_empty() {
        vec![Vec::new()]
    } else {
        search.starts(config.starts, config.seed)
    };

    let mut start_results = Vec::with_capacity(starts.len());
    for x0 in &starts {
        let out = minimize(
            |x| -objective(x, &mut theta, &mut ws),
            x0,
            &search.lower,
            &search.upper,
            &nm,
        );
        let mut theta_start = vec![0.0; d];
        search.to_theta(x0, &mut theta_start);
        let mut theta_end = vec![0.0; d];
        search.to_theta(&out.x, &mut theta_end);
        start_results.push(StartResult {
            theta_start,
            theta_end,
            value: -out.f,
            evals: out.evals,
            converged: out.converged,
            trace: out.trace.iter().map(|v| -v).collect(),
        });
    }

    // strict improvement only, so the lowest start index wins ties
    let mut best: Option<usize> = None;
    for (i, r) in start_results.iter().enumerate() {
        if r.value.is_finite() && best.is_none_or(|b| r.value > start_results[b].value) {
            best = Some(i);
        }
    }
    let best = best.ok_or(Error::NonFiniteObjective)?;
    let theta_hat = start_results[best].theta_end.clone();
    let (loglik, clamp_count) = truncated_value(family, &theta_hat, series, &mut ws)?;
    let in_theta2 = theta2_membership(family, &theta_hat)?.member;
    if !in_theta2 {
        warnings.push("estimate lies outside Θ(2)".into());
    }

    Ok(EstimationResult {
        theta_hat: ThetaVector::new(theta_hat, bounds.clone())?,
        param_names: params.into_iter().map(|s| s.name).collect(),
        value: start_results[best].value,
        loglik,
        best_start_index: best,
        start_results,
        in_theta2,
        clamp_count,
        box_violations: violations,
        warnings,
    })
}

fn penalised(
    family: &dyn ModelFamily,
    theta: &[f64],
    series: &SeriesMatrix,
    ws: &mut Workspace,
    restrict: bool,
) -> f64 {
    let value = match truncated_value(family, theta, series, ws) {
        Ok((v, _)) if v.is_finite() => v,
        _ => return f64::NEG_INFINITY,
    };
    if !restrict {
        return value;
    }
    match theta2_membership(family, theta) {
        Ok(r) => value - THETA2_PENALTY * (-r.margin).max(0.0),
        Err(_) => f64::NEG_INFINITY,
    }
}
