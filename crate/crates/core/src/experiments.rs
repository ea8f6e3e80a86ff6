//! Seed derivation and the Monte Carlo harnesses: the consistency path of
//! the QMLE and the truncation-gap decay.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{estimate, OptimizerConfig};
use crate::innovations::InnovationSpec;
use crate::likelihood::{full_loglik, truncated_loglik};
use crate::models::{simulate_path, theta2_membership, ModelFamily, ParamBox};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Folds labelled indices into `master`:
/// `h <- splitmix64(splitmix64(h ^ fnv1a(label)) ^ index)` per label, in
/// order. An empty label list returns `master` unchanged. Pure integer
/// arithmetic, so identical on every platform.
pub fn derive_seed(master: u64, labels: &[(&str, u64)]) -> u64 {
    labels.iter().fold(master, |h, (label, index)| {
        splitmix64(splitmix64(h ^ fnv1a(label)) ^ index)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub burn_in: usize,
    /// Worker threads; 0 picks the rayon default.
    pub threads: usize,
    pub optimizer: OptimizerConfig,
    /// Search box; the family default when absent.
    pub bounds: Option<ParamBox>,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_list: vec![250, 1000, 4000],
            reps: 50,
            seed: 1,
            burn_in: crate::models::DEFAULT_BURN_IN,
            threads: 0,
            optimizer: OptimizerConfig::default(),
            bounds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McRow {
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    /// `||θ̂ - θ0||`, `NaN` when the replication failed.
    pub err_norm: f64,
    pub converged: bool,
    pub clamp_count: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McSummary {
    pub n: usize,
    pub median: f64,
    pub iqr: f64,
    pub max: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub rows: Vec<McRow>,
    pub summaries: Vec<McSummary>,
    /// Medians strictly decreasing in `n`.
    pub verdict: bool,
}

/// Linear-interpolation quantile (type 7) of sorted data.
fn quantile(sorted: &[f64], prob: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl McReport {
    /// Builds summaries and the verdict from rows; rows are sorted by
    /// `(n, rep)` first so the result does not depend on arrival order.
    pub fn from_rows(mut rows: Vec<McRow>) -> Self {
        rows.sort_by_key(|r| (r.n, r.rep));
        let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
        ns.dedup();
        let summaries: Vec<McSummary> = ns
            .iter()
            .map(|&n| {
                let group: Vec<&McRow> = rows.iter().filter(|r| r.n == n).collect();
                let mut errs: Vec<f64> = group
                    .iter()
                    .filter(|r| r.error.is_none())
                    .map(|r| r.err_norm)
                    .collect();
                errs.sort_by(f64::total_cmp);
                McSummary {
                    n,
                    median: quantile(&errs, 0.5),
                    iqr: quantile(&errs, 0.75) - quantile(&errs, 0.25),
                    max: errs.last().copied().unwrap_or(f64::NAN),
                    failures: group.len() - errs.len(),
                }
            })
            .collect();
        let verdict = !summaries.is_empty()
            && summaries.iter().all(|s| s.median.is_finite())
            && summaries.windows(2).all(|w| w[1].median < w[0].median);
        Self {
            rows,
            summaries,
            verdict,
        }
    }
}

fn replicate(
    family: &dyn ModelFamily,
    theta0: &[f64],
    n: usize,
    rep: usize,
    cfg: &McConfig,
    bounds: &ParamBox,
) -> McRow {
    let seed = derive_seed(cfg.seed, &[("n", n as u64), ("rep", rep as u64)]);
    let run = || -> Result<McRow> {
        let spec = InnovationSpec::new(family.dim(), seed)?;
        let path = simulate_path(family, theta0, n, cfg.burn_in, spec, false)?;
        let opt = OptimizerConfig {
            seed: derive_seed(seed, &[("start", 0)]),
            ..cfg.optimizer
        };
        let est = estimate(family, &path.series, bounds, &opt)?;
        let err_norm = est
            .theta_hat
            .coords()
            .iter()
            .zip(theta0)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        Ok(McRow {
            n,
            rep,
            seed,
            err_norm,
            converged: est.start_results[est.best_start_index].converged,
            clamp_count: est.clamp_count,
            error: None,
        })
    };
    run().unwrap_or_else(|e| McRow {
        n,
        rep,
        seed,
        err_norm: f64::NAN,
        converged: false,
        clamp_count: 0,
        error: Some(e.to_string()),
    })
}

/// Simulates and re-estimates `reps` trajectories at each length in
/// `n_list`. Per-replication failures are recorded in the rows.
pub fn estimate_consistency_path(
    family: &dyn ModelFamily,
    theta0: &[f64],
    cfg: &McConfig,
) -> Result<McReport> {
    let report = theta2_membership(family, theta0)?;
    if !report.member {
        return Err(Error::NotInTheta2 {
            theta: theta0.to_vec(),
            margin: report.margin,
        });
    }
    if cfg.n_list.is_empty() || cfg.n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "n_list must be non-empty and strictly increasing".into(),
        ));
    }
    if cfg.reps == 0 {
        return Err(Error::InvalidArgument("reps must be >= 1".into()));
    }
    cfg.optimizer.validate()?;
    let bounds = cfg.bounds.clone().unwrap_or_else(|| family.default_box());
    bounds.validate_for(&family.params())?;
    if !bounds.contains(theta0) {
        return Err(Error::OutOfBox {
            theta: theta0.to_vec(),
        });
    }

    let jobs: Vec<(usize, usize)> = cfg
        .n_list
        .iter()
        .flat_map(|&n| (0..cfg.reps).map(move |r| (n, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let rows: Vec<McRow> = pool.install(|| {
        jobs.par_iter()
            .map(|&(n, rep)| replicate(family, theta0, n, rep, cfg, &bounds))
            .collect()
    });
    Ok(McReport::from_rows(rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayPoint {
    pub n: usize,
    /// `(1/n) |L̂_n(θ) - L_n(θ)|`.
    pub mean_diff: f64,
    /// `q · max_t |q̂_t(θ) - q_t(θ)| / n`.
    pub bound: f64,
}

/// Truncation gap on nested prefixes of one trajectory simulated at
/// `theta0`, with the presample taken from the end of the burn-in.
pub fn truncation_decay(
    family: &dyn ModelFamily,
    theta0: &[f64],
    n_list: &[usize],
    seed: u64,
    burn_in: usize,
) -> Result<Vec<DecayPoint>> {
    let n_max = n_list.iter().copied().max().unwrap_or(0);
    let spec = InnovationSpec::new(family.dim(), seed)?;
    let path = simulate_path(family, theta0, n_max, burn_in, spec, false)?;
    let q = family.memory() as f64;
    n_list
        .iter()
        .map(|&n| {
            let series = path.series.head(n);
            let full = full_loglik(family, theta0, &series, &path.presample)?;
            let trunc = truncated_loglik(family, theta0, &series)?;
            let max_term = full
                .per_t
                .iter()
                .zip(&trunc.per_t)
                .map(|(a, b)| (a.q - b.q).abs())
                .fold(0.0, f64::max);
            Ok(DecayPoint {
                n,
                mean_diff: (trunc.value - full.value).abs() / n as f64,
                bound: q * max_term / n as f64,
            })
        })
        .collect()
}
