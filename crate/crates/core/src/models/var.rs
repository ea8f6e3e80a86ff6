use super::{lag, ModelFamily, ParamBox, ParamSpec};
use crate::error::{Error, Result};
use crate::linalg::operator_norm;

/// Vector autoregression of order `q` with constant lower-triangular scale:
///
/// ```text
/// f_θ(past) = c + Σ_{j<=q} A_j X_{t-j},    M_θ ≡ L
/// ```
///
/// Parameter layout: `c` (only with an intercept, `p` values), then each
/// `A_j` row-major, then the lower triangle of `L` row by row. Diagonal
/// entries of `L` are positive scale parameters.
#[derive(Debug, Clone)]
pub struct Var {
    p: usize,
    q: usize,
    intercept: bool,
}

impl Var {
    pub fn new(p: usize, q: usize, intercept: bool) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::InvalidArgument("VAR needs p >= 1 and q >= 1".into()));
        }
        Ok(Self { p, q, intercept })
    }

    fn offset_a(&self) -> usize {
        if self.intercept {
            self.p
        } else {
            0
        }
    }

    fn offset_l(&self) -> usize {
        self.offset_a() + self.q * self.p * self.p
    }

    /// `A_j` (1-based lag) as a row-major slice.
    pub fn coefficient<'a>(&self, theta: &'a [f64], j: usize) -> &'a [f64] {
        let p2 = self.p * self.p;
        let start = self.offset_a() + (j - 1) * p2;
        &theta[start..start + p2]
    }

    /// Row-major `p x p` scale factor `L`.
    pub fn scale_matrix(&self, theta: &[f64]) -> Vec<f64> {
        let p = self.p;
        let mut l = vec![0.0; p * p];
        let mut k = self.offset_l();
        for i in 0..p {
            for j in 0..=i {
                l[i * p + j] = theta[k];
                k += 1;
            }
        }
        l
    }

    /// Assembles a parameter vector; `scale` is the lower triangle of `L`
    /// read row by row.
    pub fn pack(
        &self,
        intercept: Option<&[f64]>,
        coefficients: &[&[f64]],
        scale: &[f64],
    ) -> Vec<f64> {
        let p = self.p;
        let mut theta = Vec::with_capacity(self.n_params());
        if self.intercept {
            theta.extend_from_slice(intercept.expect("family has an intercept"));
        }
        for a in coefficients {
            theta.extend_from_slice(a);
        }
        assert_eq!(
            scale.len(),
            p * (p + 1) / 2,
            "scale is the packed lower triangle"
        );
        theta.extend_from_slice(scale);
        theta
    }
}

impl ModelFamily for Var {
    fn name(&self) -> &str {
        "var"
    }

    fn dim(&self) -> usize {
        self.p
    }

    fn memory(&self) -> usize {
        self.q
    }

    fn params(&self) -> Vec<ParamSpec> {
        let p = self.p;
        let mut out = Vec::new();
        if self.intercept {
            out.extend((1..=p).map(|i| ParamSpec::free(format!("c{i}"))));
        }
        for lag in 1..=self.q {
            for i in 1..=p {
                for j in 1..=p {
                    out.push(ParamSpec::free(format!("A{lag}[{i},{j}]")));
                }
            }
        }
        for i in 1..=p {
            for j in 1..=i {
                if i == j {
                    out.push(ParamSpec::scale(format!("L[{i},{j}]"), 0.0));
                } else {
                    out.push(ParamSpec::free(format!("L[{i},{j}]")));
                }
            }
        }
        out
    }

    fn default_box(&self) -> ParamBox {
        let (lower, upper) = self
            .params()
            .iter()
            .map(|s| match s.name.chars().next() {
                Some('c') => (-10.0, 10.0),
                Some('A') => (-0.99, 0.99),
                _ if matches!(s.kind, super::ParamKind::Scale { .. }) => (0.01, 10.0),
                _ => (-10.0, 10.0),
            })
            .unzip();
        ParamBox { lower, upper }
    }

    fn eval(&self, theta: &[f64], past: &[f64], f: &mut [f64], m: &mut [f64]) {
        let p = self.p;
        if self.intercept {
            f.copy_from_slice(&theta[..p]);
        } else {
            f.fill(0.0);
        }
        for j in 1..=self.q {
            let a = self.coefficient(theta, j);
            let x = lag(past, p, j);
            for i in 0..p {
                f[i] += a[i * p..(i + 1) * p]
                    .iter()
                    .zip(x)
                    .map(|(aij, xj)| aij * xj)
                    .sum::<f64>();
            }
        }
        m.fill(0.0);
        let mut k = self.offset_l();
        for i in 0..p {
            for j in 0..=i {
                m[i * p + j] = theta[k];
                k += 1;
            }
        }
    }

    fn lipschitz_f(&self, theta: &[f64]) -> Vec<f64> {
        (1..=self.q)
            .map(|j| operator_norm(self.coefficient(theta, j), self.p))
            .collect()
    }

    fn lipschitz_m(&self, _theta: &[f64]) -> Vec<f64> {
        vec![0.0; self.q]
    }

    fn h_floor(&self, theta: &[f64]) -> f64 {
        let l = self.scale_matrix(theta);
        (0..self.p).map(|i| l[i * self.p + i].powi(2)).product()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_names() {
        let v = Var::new(2, 1, true).unwrap();
        let names: Vec<_> = v.params().into_iter().map(|s| s.name).collect();
        assert_eq!(
            names,
            [
                "c1", "c2", "A1[1,1]", "A1[1,2]", "A1[2,1]", "A1[2,2]", "L[1,1]", "L[2,1]",
                "L[2,2]"
            ]
        );
        let theta = v.pack(
            Some(&[1.0, 2.0]),
            &[&[0.1, 0.2, 0.3, 0.4]],
            &[1.0, 0.5, 2.0],
        );
        assert_eq!(theta, vec![1.0, 2.0, 0.1, 0.2, 0.3, 0.4, 1.0, 0.5, 2.0]);
        assert_eq!(v.scale_matrix(&theta), vec![1.0, 0.0, 0.5, 2.0]);
        assert!((v.h_floor(&theta) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn eval_var2() {
        let v = Var::new(1, 2, true).unwrap();
        // c = 1, a1 = 0.5, a2 = -0.25, sigma = 2
        let theta = [1.0, 0.5, -0.25, 2.0];
        let past = [4.0, 2.0]; // X_{t-2} = 4, X_{t-1} = 2
        let mut f = [0.0];
        let mut m = [0.0];
        v.eval(&theta, &past, &mut f, &mut m);
        assert_eq!(f[0], 1.0 + 0.5 * 2.0 - 0.25 * 4.0);
        assert_eq!(m[0], 2.0);
        assert_eq!(v.lipschitz_f(&theta), vec![0.5, 0.25]);
    }
}
