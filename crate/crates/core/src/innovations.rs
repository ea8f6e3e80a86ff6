//! The standardized multivariate Laplace innovation law (`m = 0`, `Σ = I`).
//!
//! Density, with `v = 1 - p/2`:
//!
//! ```text
//! g(z) = 2 / (2π)^{p/2} · (z'z / 2)^{v/2} · K_v(sqrt(2 z'z))
//! ```
//!
//! Draws use the normal variance mixture `ζ = sqrt(W) Z`, `W ~ Exp(1)`,
//! `Z ~ N(0, I_p)`, which has exactly this density, zero mean, identity
//! covariance and, for `p = 1`, excess kurtosis 3.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::Serialize;

use crate::bessel::{log_k, BesselOrder};
use crate::error::{Error, Result};
use crate::series::SeriesMatrix;

/// Below this norm the `p >= 2` density kernel is evaluated at the clamp.
pub const ORIGIN_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InnovationSpec {
    pub p: usize,
    pub seed: u64,
}

impl InnovationSpec {
    pub fn new(p: usize, seed: u64) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidArgument(
                "innovation dimension p must be >= 1".into(),
            ));
        }
        Ok(Self { p, seed })
    }

    pub fn order(&self) -> BesselOrder {
        // p >= 1 is guaranteed by construction
        BesselOrder::from_dimension(self.p.max(1)).expect("p >= 1")
    }
}

/// Owns the RNG stream for one execution strand.
#[derive(Debug, Clone)]
pub struct InnovationSampler {
    p: usize,
    rng: ChaCha8Rng,
}

impl InnovationSampler {
    pub fn new(spec: InnovationSpec) -> Self {
        Self {
            p: spec.p,
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
        }
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    /// Writes one draw into `out` (length `p`).
    pub fn fill(&mut self, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.p);
        let w: f64 = self.rng.sample(Exp1);
        let scale = w.sqrt();
        for z in out.iter_mut() {
            let g: f64 = self.rng.sample(StandardNormal);
            *z = scale * g;
        }
    }
}

/// `count` i.i.d. draws as a `count x p` matrix.
pub fn sample_innovations(spec: InnovationSpec, count: usize) -> Result<SeriesMatrix> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be >= 1".into()));
    }
    let mut sampler = InnovationSampler::new(spec);
    let mut data = vec![0.0; count * spec.p];
    for row in data.chunks_exact_mut(spec.p) {
        sampler.fill(row);
    }
    SeriesMatrix::new(spec.p, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityEval {
    pub log_density: f64,
    /// Set when `p >= 2` and `||z||` fell below [`ORIGIN_CLAMP`].
    pub clamped: bool,
}

/// `log 2 - (p/2) log(2π)`, the prefactor of the density.
pub fn log_density_constant(p: usize) -> f64 {
    std::f64::consts::LN_2 - 0.5 * p as f64 * (2.0 * std::f64::consts::PI).ln()
}

/// Log density of the standardized Laplace law at `z`.
pub fn al_log_density(spec: InnovationSpec, z: &[f64]) -> Result<DensityEval> {
    if z.len() != spec.p {
        return Err(Error::Dimension {
            expected: spec.p,
            got: z.len(),
        });
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "density argument must be finite".into(),
        ));
    }
    let norm2: f64 = z.iter().map(|v| v * v).sum();
    let floor = ORIGIN_CLAMP * ORIGIN_CLAMP;
    // p = 1 has a finite limit at the origin; evaluating at the clamp
    // reproduces it to rounding, so it is not reported as clamped.
    let clamped = spec.p >= 2 && norm2 < floor;
    let q = norm2.max(floor);
    let v = spec.order().value();
    let log_density =
        log_density_constant(spec.p) + 0.5 * v * (0.5 * q).ln() + log_k(v.abs(), (2.0 * q).sqrt());
    Ok(DensityEval {
        log_density,
        clamped,
    })
}

/// Mass of the density over `|z| <= radius` (`p = 1`: the interval
/// `[-radius, radius]`; `p = 2`: the disc, in polar coordinates), by
/// composite Simpson with step `1e-3`.
pub fn density_mass(spec: InnovationSpec, radius: f64) -> Result<f64> {
    if radius.is_nan() || radius <= 0.0 {
        return Err(Error::InvalidArgument("radius must be positive".into()));
    }
    const STEP: f64 = 1e-3;
    match spec.p {
        1 => {
            let g = |x: f64| al_log_density(spec, &[x]).map(|d| d.log_density.exp());
            // integrate the two halves separately so the kink at 0 is a node
            let left = simpson(|x| g(-x), 0.0, radius, STEP)?;
            let right = simpson(g, 0.0, radius, STEP)?;
            Ok(left + right)
        }
        2 => {
            let radial = |r: f64| {
                al_log_density(spec, &[r, 0.0])
                    .map(|d| 2.0 * std::f64::consts::PI * r * d.log_density.exp())
            };
            simpson(radial, ORIGIN_CLAMP, radius, STEP)
        }
        p => Err(Error::InvalidArgument(format!(
            "grid normalization check supports p in {{1, 2}}, got {p}"
        ))),
    }
}

/// Total mass on the default truncated grids: `[-12, 12]` for `p = 1`,
/// radius 15 for `p = 2`.
pub fn al_density_normalization_check(spec: InnovationSpec) -> Result<f64> {
    let radius = if spec.p == 1 { 12.0 } else { 15.0 };
    density_mass(spec, radius)
}

fn simpson<F>(f: F, a: f64, b: f64, step: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut intervals = ((b - a) / step).ceil() as usize;
    if intervals % 2 == 1 {
        intervals += 1;
    }
    let h = (b - a) / intervals as f64;
    let mut acc = f(a)? + f(b)?;
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h)?;
    }
    Ok(acc * h / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace1(z: f64) -> f64 {
        (-(2f64.sqrt()) * z.abs()).exp() / 2f64.sqrt()
    }

    #[test]
    fn univariate_density_collapses_to_laplace() {
        let spec = InnovationSpec::new(1, 0).unwrap();
        let d = al_log_density(spec, &[0.5]).unwrap();
        assert!((d.log_density - laplace1(0.5).ln()).abs() < 1e-14);
        assert!((d.log_density + 1.053_680_4).abs() < 1e-6);
        let d0 = al_log_density(spec, &[0.0]).unwrap();
        assert!(!d0.clamped);
        assert!((d0.log_density + 0.5 * 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn bivariate_density_at_unit_vector() {
        let spec = InnovationSpec::new(2, 0).unwrap();
        let d = al_log_density(spec, &[1.0, 0.0]).unwrap();
        // log(2/2π) + log K_0(√2), K_0(√2) = 0.23914...
        let expect = (1.0 / std::f64::consts::PI).ln() + 0.239_142_210_726_081_1_f64.ln();
        assert!((d.log_density - expect).abs() < 1e-8, "{}", d.log_density);
    }

    #[test]
    fn origin_is_clamped_only_for_p_at_least_two() {
        let spec = InnovationSpec::new(2, 0).unwrap();
        let d = al_log_density(spec, &[0.0, 0.0]).unwrap();
        assert!(d.clamped && d.log_density.is_finite());
        let same = al_log_density(spec, &[ORIGIN_CLAMP, 0.0]).unwrap();
        assert_eq!(d.log_density, same.log_density);
    }

    #[test]
    fn dimension_mismatch() {
        let spec = InnovationSpec::new(3, 0).unwrap();
        assert!(matches!(
            al_log_density(spec, &[1.0]),
            Err(Error::Dimension {
                expected: 3,
                got: 1
            })
        ));
    }

    #[test]
    fn truncated_mass_matches_closed_form() {
        let spec = InnovationSpec::new(1, 0).unwrap();
        let m = density_mass(spec, 1.0).unwrap();
        assert!((m - (1.0 - (-(2f64.sqrt())).exp())).abs() < 1e-10);
        assert!((m - 0.757).abs() < 1e-3);
    }

    #[test]
    fn normalization_rejects_high_dimension() {
        let spec = InnovationSpec::new(3, 0).unwrap();
        assert!(al_density_normalization_check(spec).is_err());
    }

    #[test]
    fn sampler_is_deterministic() {
        let spec = InnovationSpec::new(3, 99).unwrap();
        let a = sample_innovations(spec, 1000).unwrap();
        let b = sample_innovations(spec, 1000).unwrap();
        assert_eq!(a, b);
        let c = sample_innovations(InnovationSpec::new(3, 100).unwrap(), 1000).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sample_moments_smoke() {
        let s = sample_innovations(InnovationSpec::new(2, 5).unwrap(), 200_000).unwrap();
        let mean = s.column_means();
        let cov = s.covariance();
        for m in mean {
            assert!(m.abs() < 0.02);
        }
        assert!((cov[0] - 1.0).abs() < 0.03 && (cov[3] - 1.0).abs() < 0.03);
        assert!(cov[1].abs() < 0.02);
    }
}
