//! Bessel-kernel quasi-log-likelihood.
//!
//! For residual `e_t = X_t - f^t_θ`, scatter `H^t = M^t (M^t)'` and
//! `Q_t = e_t' (H^t)^{-1} e_t`, each observation contributes
//!
//! ```text
//! q_t(θ) = log K_v(sqrt(2 Q_t)) + (v/2) log Q_t - (1/2) log det H^t,   v = 1 - p/2.
//! ```
//!
//! This drops the θ-free terms of the exact log density. Adding
//! [`density_offset`] back gives `log g(M^{-1} e_t) - log |det M^t|`, the
//! conditional log density of `X_t`.

use serde::Serialize;

use crate::bessel::log_k;
use crate::error::{Error, Result};
use crate::innovations::log_density_constant;
use crate::linalg::{cholesky_in_place, forward_solve, log_det_from_cholesky, outer_self};
use crate::models::{check_len, theta2_membership, ModelFamily};
use crate::series::SeriesMatrix;

/// Floor applied to `Q_t` before taking logs when `p >= 2`.
pub const QUAD_FLOOR: f64 = 1e-12;

/// `(1/2) log(π/2) - (1/4) log 2`: the `p = 1` term with the closed form of
/// `K_{1/2}` substituted.
const P1_CONSTANT: f64 = 0.5 * 0.451_582_705_289_454_8 - 0.25 * std::f64::consts::LN_2;

/// The constant `log 2 - (p/2) log(2π) - (v/2) log 2` separating `q_t` from
/// the exact conditional log density.
pub fn density_offset(p: usize) -> f64 {
    let v = (2.0 - p as f64) / 2.0;
    log_density_constant(p) - 0.5 * v * std::f64::consts::LN_2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QTerm {
    /// Unclamped quadratic form `Q_t`.
    pub quad: f64,
    pub logdet: f64,
    pub q: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LikelihoodEvaluation {
    /// Left-to-right sum of `per_t[..].q`.
    pub value: f64,
    pub per_t: Vec<QTerm>,
    pub truncated: bool,
    pub clamp_count: usize,
}

/// Scratch buffers reused across time steps.
#[derive(Debug, Clone)]
pub(crate) struct Workspace {
    p: usize,
    f: Vec<f64>,
    m: Vec<f64>,
    h: Vec<f64>,
    e: Vec<f64>,
}

impl Workspace {
    pub(crate) fn new(p: usize) -> Self {
        Self {
            p,
            f: vec![0.0; p],
            m: vec![0.0; p * p],
            h: vec![0.0; p * p],
            e: vec![0.0; p],
        }
    }
}

fn term(
    family: &dyn ModelFamily,
    theta: &[f64],
    past: &[f64],
    x: &[f64],
    ws: &mut Workspace,
) -> Option<QTerm> {
    let p = ws.p;
    family.eval(theta, past, &mut ws.f, &mut ws.m);
    outer_self(&ws.m, p, &mut ws.h);
    cholesky_in_place(&mut ws.h, p)?;
    for ((e, xi), fi) in ws.e.iter_mut().zip(x).zip(&ws.f) {
        *e = xi - fi;
    }
    forward_solve(&ws.h, p, &mut ws.e);
    let quad: f64 = ws.e.iter().map(|v| v * v).sum();
    let logdet = log_det_from_cholesky(&ws.h, p);
    if p == 1 {
        // Finite at Q = 0, so no floor; flooring would flatten the kink the
        // median-type estimator relies on.
        return Some(QTerm {
            quad,
            logdet,
            q: P1_CONSTANT - (2.0 * quad).sqrt() - 0.5 * logdet,
            clamped: false,
        });
    }
    let clamped = quad < QUAD_FLOOR;
    let qc = quad.max(QUAD_FLOOR);
    let v = (2.0 - p as f64) / 2.0;
    let mut q = log_k(v.abs(), (2.0 * qc).sqrt()) - 0.5 * logdet;
    if v != 0.0 {
        q += 0.5 * v * qc.ln();
    }
    Some(QTerm {
        quad,
        logdet,
        q,
        clamped,
    })
}

/// One contribution `q_t` given the `q`-lag chronological window `past`.
pub fn q_t(family: &dyn ModelFamily, theta: &[f64], past: &[f64], x_t: &[f64]) -> Result<QTerm> {
    check_len(family, theta)?;
    let p = family.dim();
    let q = family.memory();
    if past.len() != q * p {
        return Err(Error::Dimension {
            expected: q * p,
            got: past.len(),
        });
    }
    if x_t.len() != p {
        return Err(Error::Dimension {
            expected: p,
            got: x_t.len(),
        });
    }
    let mut ws = Workspace::new(p);
    term(family, theta, past, x_t, &mut ws).ok_or_else(|| Error::Factorization {
        t: 1,
        theta: theta.to_vec(),
    })
}

/// Walks the series, handing each `q_t` to `sink`. `prefix` holds the `q`
/// rows that precede the series, or is `None` for zero padding.
fn walk<F>(
    family: &dyn ModelFamily,
    theta: &[f64],
    series: &SeriesMatrix,
    prefix: Option<&[f64]>,
    ws: &mut Workspace,
    mut sink: F,
) -> Result<()>
where
    F: FnMut(QTerm),
{
    let p = family.dim();
    let q = family.memory();
    let data = series.as_slice();
    let mut window = vec![0.0; q * p];
    for t in 0..series.len() {
        let past: &[f64] = if t >= q {
            &data[(t - q) * p..t * p]
        } else {
            // the oldest q - t lags come from the prefix (or zeros), the rest from the series
            let missing = q - t;
            match prefix {
                Some(pre) => window[..missing * p].copy_from_slice(&pre[t * p..]),
                None => window[..missing * p].fill(0.0),
            }
            window[missing * p..].copy_from_slice(&data[..t * p]);
            &window
        };
        let out =
            term(family, theta, past, series.row(t), ws).ok_or_else(|| Error::Factorization {
                t: t + 1,
                theta: theta.to_vec(),
            })?;
        sink(out);
    }
    Ok(())
}

fn check_series(family: &dyn ModelFamily, theta: &[f64], series: &SeriesMatrix) -> Result<()> {
    check_len(family, theta)?;
    if series.dim() != family.dim() {
        return Err(Error::Dimension {
            expected: family.dim(),
            got: series.dim(),
        });
    }
    Ok(())
}

fn collect(
    family: &dyn ModelFamily,
    theta: &[f64],
    series: &SeriesMatrix,
    prefix: Option<&[f64]>,
) -> Result<LikelihoodEvaluation> {
    let mut ws = Workspace::new(family.dim());
    let mut per_t = Vec::with_capacity(series.len());
    walk(family, theta, series, prefix, &mut ws, |term| {
        per_t.push(term)
    })?;
    let mut value = 0.0;
    for term in &per_t {
        value += term.q;
    }
    Ok(LikelihoodEvaluation {
        value,
        clamp_count: per_t.iter().filter(|t| t.clamped).count(),
        per_t,
        truncated: prefix.is_none(),
    })
}

/// `L_n(θ)` with the lags before the first observation taken from the last
/// `q` rows of `presample`.
pub fn full_loglik(
    family: &dyn ModelFamily,
    theta: &[f64],
    series: &SeriesMatrix,
    presample: &SeriesMatrix,
) -> Result<LikelihoodEvaluation> {
    check_series(family, theta, series)?;
    let q = family.memory();
    if presample.dim() != family.dim() {
        return Err(Error::Dimension {
            expected: family.dim(),
            got: presample.dim(),
        });
    }
    if presample.len() < q {
        return Err(Error::InsufficientPresample {
            needed: q,
            got: presample.len(),
        });
    }
    let prefix = presample.tail(q);
    collect(family, theta, series, Some(prefix.as_slice()))
}

/// The observable `L̂_n(θ)`: lags before the first observation are zero.
pub fn truncated_loglik(
    family: &dyn ModelFamily,
    theta: &[f64],
    series: &SeriesMatrix,
) -> Result<LikelihoodEvaluation> {
    check_series(family, theta, series)?;
    collect(family, theta, series, None)
}

/// Value and clamp count of `L̂_n(θ)` without per-step records. Sums in the
/// same order as [`truncated_loglik`], so the two agree bit for bit.
pub(crate) fn truncated_value(
    family: &dyn ModelFamily,
    theta: &[f64],
    series: &SeriesMatrix,
    ws: &mut Workspace,
) -> Result<(f64, usize)> {
    let mut value = 0.0;
    let mut clamps = 0;
    walk(family, theta, series, None, ws, |term| {
        value += term.q;
        clamps += term.clamped as usize;
    })?;
    Ok((value, clamps))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub theta: Vec<f64>,
    pub value: f64,
    pub clamp_count: usize,
    pub in_theta2: bool,
}

/// `L̂_n` over a user grid, flagging points outside Θ(2).
pub fn profile_loglik(
    family: &dyn ModelFamily,
    series: &SeriesMatrix,
    grid: &[Vec<f64>],
) -> Result<Vec<ProfilePoint>> {
    grid.iter()
        .map(|theta| {
            let eval = truncated_loglik(family, theta, series)?;
            Ok(ProfilePoint {
                theta: theta.clone(),
                value: eval.value,
                clamp_count: eval.clamp_count,
                in_theta2: theta2_membership(family, theta)?.member,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationReport {
    /// `max_{θ, t} |q̂_t(θ) - q_t(θ)|`.
    pub sup_diff: f64,
    /// `max_θ (1/n) |L̂_n(θ) - L_n(θ)|`.
    pub mean_diff: f64,
}

/// Gap between the truncated and full likelihoods over a θ grid.
pub fn truncation_report(
    family: &dyn ModelFamily,
    series: &SeriesMatrix,
    presample: &SeriesMatrix,
    grid: &[Vec<f64>],
) -> Result<TruncationReport> {
    let mut sup_diff: f64 = 0.0;
    let mut mean_diff: f64 = 0.0;
    let n = series.len().max(1) as f64;
    for theta in grid {
        let full = full_loglik(family, theta, series, presample)?;
        let trunc = truncated_loglik(family, theta, series)?;
        for (a, b) in trunc.per_t.iter().zip(&full.per_t) {
            sup_diff = sup_diff.max((a.q - b.q).abs());
        }
        mean_diff = mean_diff.max((trunc.value - full.value).abs() / n);
    }
    Ok(TruncationReport {
        sup_diff,
        mean_diff,
    })
}
