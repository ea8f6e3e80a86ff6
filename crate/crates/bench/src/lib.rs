//! Fixtures shared by the benchmarks.

use laplace_qmle::{simulate_path, DiagArch, InnovationSpec, ModelFamily, SeriesMatrix, Var};

/// True parameter of the bivariate VAR(1) used throughout the experiments.
pub const VAR_THETA: [f64; 7] = [0.4, 0.1, -0.1, 0.3, 1.0, 0.3, 0.8];

/// True parameter of the univariate ARCH(1).
pub const ARCH_THETA: [f64; 2] = [1.0, 0.3];

pub fn var_family() -> Var {
    Var::new(2, 1, false).expect("valid dimensions")
}

pub fn arch_family() -> DiagArch {
    DiagArch::new(1, 1).expect("valid dimensions")
}

/// A stationary trajectory of length `n` from `family` at `theta`.
pub fn trajectory(family: &dyn ModelFamily, theta: &[f64], n: usize, seed: u64) -> SeriesMatrix {
    let spec = InnovationSpec::new(family.dim(), seed).expect("p >= 1");
    simulate_path(family, theta, n, 500, spec, false)
        .expect("theta lies in Θ(2)")
        .series
}
