use super::{check_len, theta2_membership, ModelFamily};
use crate::error::{Error, Result};
use crate::innovations::{InnovationSampler, InnovationSpec};
use crate::series::SeriesMatrix;

/// Default number of discarded initial steps.
pub const DEFAULT_BURN_IN: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPath {
    /// The `q` values immediately preceding `series` in the recursion (zeros
    /// where the burn-in was shorter than `q`).
    pub presample: SeriesMatrix,
    pub series: SeriesMatrix,
}

/// Runs the recursion from a zero past, feeding the rows of `innovations`
/// in order, and returns every generated value (no burn-in removed). Row `t`
/// only depends on innovation rows `0..=t`.
pub fn simulate_from_innovations(
    family: &dyn ModelFamily,
    theta: &[f64],
    innovations: &SeriesMatrix,
) -> Result<SeriesMatrix> {
    check_len(family, theta)?;
    let p = family.dim();
    if innovations.dim() != p {
        return Err(Error::Dimension {
            expected: p,
            got: innovations.dim(),
        });
    }
    let q = family.memory();
    let total = innovations.len();
    let mut buf = vec![0.0; (q + total) * p];
    let mut f = vec![0.0; p];
    let mut m = vec![0.0; p * p];
    for (t, z) in innovations.rows().enumerate() {
        let (past, rest) = buf.split_at_mut((q + t) * p);
        family.eval(theta, &past[t * p..], &mut f, &mut m);
        let x = &mut rest[..p];
        for i in 0..p {
            x[i] = f[i] + (0..p).map(|k| m[i * p + k] * z[k]).sum::<f64>();
        }
    }
    buf.drain(..q * p);
    SeriesMatrix::new(p, buf).map_err(|_| {
        Error::InvalidArgument("simulated trajectory diverged to non-finite values".into())
    })
}

/// Simulates `burn_in + n` steps, keeping the last `n` plus the `q` rows
/// before them.
pub fn simulate_path(
    family: &dyn ModelFamily,
    theta0: &[f64],
    n: usize,
    burn_in: usize,
    spec: InnovationSpec,
    force: bool,
) -> Result<SimulatedPath> {
    check_len(family, theta0)?;
    if spec.p != family.dim() {
        return Err(Error::Dimension {
            expected: family.dim(),
            got: spec.p,
        });
    }
    let report = theta2_membership(family, theta0)?;
    if !report.member && !force {
        return Err(Error::NotInTheta2 {
            theta: theta0.to_vec(),
            margin: report.margin,
        });
    }
    let p = family.dim();
    let q = family.memory();
    let mut sampler = InnovationSampler::new(spec);
    let mut z = vec![0.0; (burn_in + n) * p];
    for row in z.chunks_exact_mut(p) {
        sampler.fill(row);
    }
    let all = simulate_from_innovations(family, theta0, &SeriesMatrix::new(p, z)?)?;

    let mut pre = vec![0.0; q * p];
    let have = burn_in.min(q);
    if have > 0 {
        let src = &all.as_slice()[(burn_in - have) * p..burn_in * p];
        pre[(q - have) * p..].copy_from_slice(src);
    }
    Ok(SimulatedPath {
        presample: SeriesMatrix::new(p, pre)?,
        series: all.tail(n),
    })
}

/// `n` values of the stationary solution after `burn_in` discarded steps.
/// Refuses `θ0` outside Θ(2) unless `force` is set.
pub fn simulate_trajectory(
    family: &dyn ModelFamily,
    theta0: &[f64],
    n: usize,
    burn_in: usize,
    spec: InnovationSpec,
    force: bool,
) -> Result<SeriesMatrix> {
    simulate_path(family, theta0, n, burn_in, spec, force).map(|p| p.series)
}
