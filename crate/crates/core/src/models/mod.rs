//! The causal model class `X_t = M_θ(X_{t-1}, ...) ζ_t + f_θ(X_{t-1}, ...)`
//! restricted to square `M` (`p x p`) and finite memory `q`.
//!
//! A family reads its past as a contiguous chronological block
//! `[X_{t-q}, ..., X_{t-1}]` of `q * p` values; [`lag`] picks out `X_{t-j}`.

mod arch;
mod simulate;
mod theta;
mod var;

pub use arch::{ArArch, DiagArch};
pub use simulate::{
    simulate_from_innovations, simulate_path, simulate_trajectory, SimulatedPath, DEFAULT_BURN_IN,
};
pub use theta::{ParamBox, ParamKind, ParamSpec, ThetaVector};
pub use var::Var;

use serde::Serialize;

use crate::error::{Error, Result};

pub trait ModelFamily: Send + Sync {
    fn name(&self) -> &str;

    /// Process dimension `p`.
    fn dim(&self) -> usize;

    /// Number of lags `q` that `eval` reads.
    fn memory(&self) -> usize;

    fn params(&self) -> Vec<ParamSpec>;

    fn n_params(&self) -> usize {
        self.params().len()
    }

    fn default_box(&self) -> ParamBox;

    /// Writes `f_θ(past)` into `f` (length `p`) and row-major `M_θ(past)`
    /// into `m` (length `p * p`).
    fn eval(&self, theta: &[f64], past: &[f64], f: &mut [f64], m: &mut [f64]);

    /// `α_j(f, θ)` for `j = 1..=q`.
    fn lipschitz_f(&self, theta: &[f64]) -> Vec<f64>;

    /// `α_j(M, θ)` for `j = 1..=q`.
    fn lipschitz_m(&self, theta: &[f64]) -> Vec<f64>;

    /// Lower bound on `det(M_θ(x) M_θ(x)')` over all inputs `x`.
    fn h_floor(&self, theta: &[f64]) -> f64;
}

/// `X_{t-j}` out of a chronological window of `q` rows.
#[inline]
pub fn lag(past: &[f64], p: usize, j: usize) -> &[f64] {
    let q = past.len() / p;
    let start = (q - j) * p;
    &past[start..start + p]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theta2Report {
    pub sum_f: f64,
    pub sum_m: f64,
    /// `1 - (sum_f + sqrt(p) * sum_m)`.
    pub margin: f64,
    pub member: bool,
}

pub(crate) fn check_len(family: &dyn ModelFamily, theta: &[f64]) -> Result<()> {
    let d = family.n_params();
    if theta.len() != d {
        return Err(Error::Dimension {
            expected: d,
            got: theta.len(),
        });
    }
    Ok(())
}

/// Membership in the contraction region with the second-moment factor
/// `(E||ζ||^2)^{1/2} = sqrt(p)`.
pub fn theta2_membership(family: &dyn ModelFamily, theta: &[f64]) -> Result<Theta2Report> {
    check_len(family, theta)?;
    let sum_f: f64 = family.lipschitz_f(theta).iter().sum();
    let sum_m: f64 = family.lipschitz_m(theta).iter().sum();
    let margin = 1.0 - (sum_f + (family.dim() as f64).sqrt() * sum_m);
    Ok(Theta2Report {
        sum_f,
        sum_m,
        margin,
        member: margin > 0.0,
    })
}

/// Membership in the contraction region of order `r`, given
/// `moment_r = (E||ζ_0||^r)^{1/r}`.
pub fn theta_r_membership(
    family: &dyn ModelFamily,
    theta: &[f64],
    r: f64,
    moment_r: f64,
) -> Result<bool> {
    check_len(family, theta)?;
    if r.is_nan() || r < 1.0 {
        return Err(Error::InvalidArgument(format!("r must be >= 1, got {r}")));
    }
    if !(moment_r.is_finite() && moment_r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "moment_r must be positive, got {moment_r}"
        )));
    }
    let sum_f: f64 = family.lipschitz_f(theta).iter().sum();
    let sum_m: f64 = family.lipschitz_m(theta).iter().sum();
    Ok(sum_f + moment_r * sum_m < 1.0)
}

/// Monte Carlo estimate of `(E||ζ||^r)^{1/r}` for the standardized Laplace
/// law in dimension `p`.
pub fn innovation_moment(p: usize, r: f64, draws: usize, seed: u64) -> Result<f64> {
    use crate::innovations::{InnovationSampler, InnovationSpec};
    if draws == 0 {
        return Err(Error::InvalidArgument("draws must be >= 1".into()));
    }
    let mut sampler = InnovationSampler::new(InnovationSpec::new(p, seed)?);
    let mut z = vec![0.0; p];
    let mut acc = 0.0;
    for _ in 0..draws {
        sampler.fill(&mut z);
        acc += crate::linalg::euclidean_norm(&z).powf(r);
    }
    Ok((acc / draws as f64).powf(1.0 / r))
}

/// Builds a shipped family by its CLI name.
pub fn family_by_name(name: &str, p: usize) -> Result<Box<dyn ModelFamily>> {
    match name {
        "var1" => Ok(Box::new(Var::new(p, 1, false)?)),
        "var1c" => Ok(Box::new(Var::new(p, 1, true)?)),
        "arch1" => Ok(Box::new(DiagArch::new(p, 1)?)),
        "ar-arch" => Ok(Box::new(ArArch::new(p, false)?)),
        other => Err(Error::InvalidArgument(format!(
            "unknown family '{other}' (expected var1, var1c, arch1 or ar-arch)"
        ))),
    }
}
