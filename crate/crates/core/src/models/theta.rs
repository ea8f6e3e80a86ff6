use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the optimizer moves along a coordinate. `Scale` coordinates are
/// searched as `η = ln(θ - floor)`, so `θ` never reaches `floor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamKind {
    Free,
    Scale { floor: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: ParamKind,
}

impl ParamSpec {
    pub fn free(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ParamKind::Free,
        }
    }

    pub fn scale(name: impl Into<String>, floor: f64) -> Self {
        Self {
            name: name.into(),
            kind: ParamKind::Scale { floor },
        }
    }
}

/// Closed per-coordinate bounds of the compact parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ParamBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Dimension {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::InvalidArgument(format!(
                    "box coordinate {i} has invalid bounds [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Degenerate box holding only `point`.
    pub fn singleton(point: &[f64]) -> Result<Self> {
        Self::new(point.to_vec(), point.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| *lo <= *x && *x <= *hi)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    /// Checks that scale coordinates stay strictly above their floor.
    pub fn validate_for(&self, params: &[ParamSpec]) -> Result<()> {
        if params.len() != self.dim() {
            return Err(Error::Dimension {
                expected: params.len(),
                got: self.dim(),
            });
        }
        for (i, spec) in params.iter().enumerate() {
            if let ParamKind::Scale { floor } = spec.kind {
                if self.lower[i] <= floor {
                    return Err(Error::InvalidArgument(format!(
                        "lower bound of scale parameter '{}' must exceed {floor}",
                        spec.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A point of the parameter box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaVector {
    coords: Vec<f64>,
    bounds: ParamBox,
}

impl ThetaVector {
    pub fn new(coords: Vec<f64>, bounds: ParamBox) -> Result<Self> {
        if coords.len() != bounds.dim() {
            return Err(Error::Dimension {
                expected: bounds.dim(),
                got: coords.len(),
            });
        }
        if !bounds.contains(&coords) {
            return Err(Error::OutOfBox { theta: coords });
        }
        Ok(Self { coords, bounds })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn bounds(&self) -> &ParamBox {
        &self.bounds
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

impl AsRef<[f64]> for ThetaVector {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_validation() {
        assert!(ParamBox::new(vec![0.0], vec![-1.0]).is_err());
        assert!(ParamBox::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(ParamBox::new(vec![f64::NEG_INFINITY], vec![1.0]).is_err());
        let b = ParamBox::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert!(b.contains(&[0.0, 1.0]));
        assert!(!b.contains(&[1.1, 0.0]));
        assert_eq!(b.center(), vec![0.5, 0.0]);
    }

    #[test]
    fn theta_must_lie_in_box() {
        let b = ParamBox::new(vec![0.0], vec![1.0]).unwrap();
        assert!(ThetaVector::new(vec![0.5], b.clone()).is_ok());
        assert!(matches!(
            ThetaVector::new(vec![2.0], b),
            Err(Error::OutOfBox { .. })
        ));
    }

    #[test]
    fn scale_floor_is_enforced() {
        let params = vec![ParamSpec::free("a"), ParamSpec::scale("s", 0.0)];
        let ok = ParamBox::new(vec![-1.0, 0.1], vec![1.0, 2.0]).unwrap();
        assert!(ok.validate_for(&params).is_ok());
        let bad = ParamBox::new(vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap();
        assert!(bad.validate_for(&params).is_err());
    }
}
