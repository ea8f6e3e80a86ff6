use super::{lag, ModelFamily, ParamBox, ParamKind, ParamSpec};
use crate::error::{Error, Result};
use crate::linalg::operator_norm;

/// Floor `ω_min` under every ARCH intercept.
pub const OMEGA_MIN: f64 = 1e-6;

/// Diagonal ARCH(q):
///
/// ```text
/// f_θ ≡ 0,    M_θ(past) = diag_k sqrt(ω_k + Σ_{j<=q} a_{k,j} X_{t-j,k}^2)
/// ```
///
/// Layout: `ω_1..ω_p`, then `a_{1,j}..a_{p,j}` for `j = 1..=q`.
#[derive(Debug, Clone)]
pub struct DiagArch {
    p: usize,
    q: usize,
}

impl DiagArch {
    pub fn new(p: usize, q: usize) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::InvalidArgument(
                "ARCH needs p >= 1 and q >= 1".into(),
            ));
        }
        Ok(Self { p, q })
    }
}

fn arch_params(p: usize, q: usize) -> Vec<ParamSpec> {
    let mut out: Vec<_> = (1..=p)
        .map(|k| ParamSpec::scale(format!("omega{k}"), OMEGA_MIN))
        .collect();
    for j in 1..=q {
        for k in 1..=p {
            out.push(ParamSpec::free(format!("a{j}[{k}]")));
        }
    }
    out
}

/// Writes the diagonal volatility matrix for ARCH coefficients starting at
/// `theta[0]` (`ω`) into `m`.
fn arch_diag(p: usize, q: usize, theta: &[f64], past: &[f64], m: &mut [f64]) {
    m.fill(0.0);
    for k in 0..p {
        let mut h = theta[k];
        for j in 1..=q {
            let x = lag(past, p, j)[k];
            h += theta[p + (j - 1) * p + k] * x * x;
        }
        m[k * p + k] = h.sqrt();
    }
}

fn arch_lipschitz(p: usize, q: usize, theta: &[f64]) -> Vec<f64> {
    (1..=q)
        .map(|j| {
            (0..p)
                .map(|k| theta[p + (j - 1) * p + k].max(0.0).sqrt())
                .fold(0.0, f64::max)
        })
        .collect()
}

fn arch_box(params: &[ParamSpec]) -> ParamBox {
    let (lower, upper) = params
        .iter()
        .map(|s| match s.kind {
            ParamKind::Scale { .. } => (0.01, 10.0),
            ParamKind::Free => (0.0, 0.99),
        })
        .unzip();
    ParamBox { lower, upper }
}

impl ModelFamily for DiagArch {
    fn name(&self) -> &str {
        "arch"
    }

    fn dim(&self) -> usize {
        self.p
    }

    fn memory(&self) -> usize {
        self.q
    }

    fn params(&self) -> Vec<ParamSpec> {
        arch_params(self.p, self.q)
    }

    fn default_box(&self) -> ParamBox {
        arch_box(&self.params())
    }

    fn eval(&self, theta: &[f64], past: &[f64], f: &mut [f64], m: &mut [f64]) {
        f.fill(0.0);
        arch_diag(self.p, self.q, theta, past, m);
    }

    fn lipschitz_f(&self, _theta: &[f64]) -> Vec<f64> {
        vec![0.0; self.q]
    }

    fn lipschitz_m(&self, theta: &[f64]) -> Vec<f64> {
        arch_lipschitz(self.p, self.q, theta)
    }

    fn h_floor(&self, theta: &[f64]) -> f64 {
        theta[..self.p].iter().product()
    }
}

/// AR(1) mean with diagonal ARCH(1) volatility:
///
/// ```text
/// f_θ(past) = c + A X_{t-1},    M_θ(past) = diag_k sqrt(ω_k + a_k X_{t-1,k}^2)
/// ```
///
/// Layout: `c` (with intercept), `A` row-major, `ω_1..ω_p`, `a_1..a_p`.
#[derive(Debug, Clone)]
pub struct ArArch {
    p: usize,
    intercept: bool,
}

impl ArArch {
    pub fn new(p: usize, intercept: bool) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidArgument("AR-ARCH needs p >= 1".into()));
        }
        Ok(Self { p, intercept })
    }

    fn offset_a(&self) -> usize {
        if self.intercept {
            self.p
        } else {
            0
        }
    }

    fn offset_arch(&self) -> usize {
        self.offset_a() + self.p * self.p
    }
}

impl ModelFamily for ArArch {
    fn name(&self) -> &str {
        "ar-arch"
    }

    fn dim(&self) -> usize {
        self.p
    }

    fn memory(&self) -> usize {
        1
    }

    fn params(&self) -> Vec<ParamSpec> {
        let p = self.p;
        let mut out = Vec::new();
        if self.intercept {
            out.extend((1..=p).map(|i| ParamSpec::free(format!("c{i}"))));
        }
        for i in 1..=p {
            for j in 1..=p {
                out.push(ParamSpec::free(format!("A1[{i},{j}]")));
            }
        }
        out.extend(arch_params(p, 1));
        out
    }

    fn default_box(&self) -> ParamBox {
        let params = self.params();
        let head = self.offset_arch();
        let mut b = arch_box(&params[head..]);
        let mut lower: Vec<f64> = params[..head]
            .iter()
            .map(|s| {
                if s.name.starts_with('c') {
                    -10.0
                } else {
                    -0.99
                }
            })
            .collect();
        let mut upper: Vec<f64> = lower.iter().map(|l| -l).collect();
        lower.append(&mut b.lower);
        upper.append(&mut b.upper);
        ParamBox { lower, upper }
    }

    fn eval(&self, theta: &[f64], past: &[f64], f: &mut [f64], m: &mut [f64]) {
        let p = self.p;
        if self.intercept {
            f.copy_from_slice(&theta[..p]);
        } else {
            f.fill(0.0);
        }
        let a = &theta[self.offset_a()..self.offset_arch()];
        let x = lag(past, p, 1);
        for i in 0..p {
            f[i] += (0..p).map(|j| a[i * p + j] * x[j]).sum::<f64>();
        }
        arch_diag(p, 1, &theta[self.offset_arch()..], past, m);
    }

    fn lipschitz_f(&self, theta: &[f64]) -> Vec<f64> {
        vec![operator_norm(
            &theta[self.offset_a()..self.offset_arch()],
            self.p,
        )]
    }

    fn lipschitz_m(&self, theta: &[f64]) -> Vec<f64> {
        arch_lipschitz(self.p, 1, &theta[self.offset_arch()..])
    }

    fn h_floor(&self, theta: &[f64]) -> f64 {
        theta[self.offset_arch()..self.offset_arch() + self.p]
            .iter()
            .product()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arch_eval_and_metadata() {
        let fam = DiagArch::new(2, 1).unwrap();
        let theta = [1.0, 2.0, 0.25, 0.09];
        let past = [2.0, -1.0];
        let mut f = [9.0; 2];
        let mut m = [9.0; 4];
        fam.eval(&theta, &past, &mut f, &mut m);
        assert_eq!(f, [0.0, 0.0]);
        assert_eq!(m, [2f64.sqrt(), 0.0, 0.0, 2.09f64.sqrt()]);
        assert_eq!(fam.lipschitz_m(&theta), vec![0.5]);
        assert_eq!(fam.h_floor(&theta), 2.0);
        let names: Vec<_> = fam.params().into_iter().map(|s| s.name).collect();
        assert_eq!(names, ["omega1", "omega2", "a1[1]", "a1[2]"]);
    }

    #[test]
    fn ar_arch_composes_both_parts() {
        let fam = ArArch::new(1, true).unwrap();
        let theta = [0.5, 0.4, 1.0, 0.3];
        let mut f = [0.0];
        let mut m = [0.0];
        fam.eval(&theta, &[2.0], &mut f, &mut m);
        assert!((f[0] - 1.3).abs() < 1e-15);
        assert!((m[0] - 2.2f64.sqrt()).abs() < 1e-15);
        assert_eq!(fam.lipschitz_f(&theta), vec![0.4]);
        assert!((fam.lipschitz_m(&theta)[0] - 0.3f64.sqrt()).abs() < 1e-15);
        let b = fam.default_box();
        assert_eq!(b.lower, vec![-10.0, -0.99, 0.01, 0.0]);
        assert_eq!(b.upper, vec![10.0, 0.99, 10.0, 0.99]);
    }
}
