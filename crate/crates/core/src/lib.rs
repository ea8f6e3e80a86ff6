//! Quasi-maximum likelihood estimation for multivariate causal processes
//! driven by standardized (symmetric, m = 0) asymmetric Laplace innovations.
//!
//! The crate is organised bottom-up:
//!
//! * [`bessel`] evaluates `K_v(u)` and `log K_v(u)`, the kernel of the
//!   innovation density.
//! * [`innovations`] samples and evaluates the standardized Laplace law.
//! * [`models`] defines the causal model class `X_t = M(past) ζ_t + f(past)`,
//!   the concrete VAR / ARCH families, contraction-region membership and
//!   trajectory simulation.
//! * [`likelihood`] evaluates the Bessel-kernel quasi-log-likelihood, both
//!   with a supplied presample and with the observable zero-padded past.
//! * [`estimator`] maximises the truncated likelihood over a parameter box.
//! * [`experiments`] hosts seed derivation and the Monte Carlo harnesses.

pub mod bessel;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod innovations;
pub mod likelihood;
mod linalg;
pub mod models;
pub mod optim;
pub mod series;

pub use bessel::{bessel_bound_constant, bessel_k, log_bessel_k, BesselEval, BesselOrder};
pub use error::{Error, Result};
pub use estimator::{estimate, EstimationResult, OptimizerConfig, StartResult};
pub use experiments::{
    derive_seed, estimate_consistency_path, truncation_decay, DecayPoint, McConfig, McReport,
    McRow, McSummary,
};
pub use innovations::{al_log_density, sample_innovations, InnovationSampler, InnovationSpec};
pub use likelihood::{
    full_loglik, profile_loglik, q_t, truncated_loglik, LikelihoodEvaluation, QTerm,
};
pub use models::{
    family_by_name, simulate_path, simulate_trajectory, theta2_membership, theta_r_membership,
    ArArch, DiagArch, ModelFamily, ParamBox, ParamKind, ParamSpec, SimulatedPath, Theta2Report,
    ThetaVector, Var,
};
pub use series::SeriesMatrix;
