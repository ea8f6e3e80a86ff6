//! Box-constrained Nelder–Mead. Every trial point is projected onto the box
//! coordinate-wise before it is evaluated, so the objective is never called
//! outside `[lower, upper]`.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NelderMeadConfig {
    pub max_evals: usize,
    /// Converged once every vertex is within `xtol` (sup norm) of the best.
    pub xtol: f64,
    /// ... and every vertex value is within `ftol` of the best.
    pub ftol: f64,
    /// Initial edge length as a fraction of each box width.
    pub initial_step: f64,
    /// Fresh simplices built around the best point after convergence; stops
    /// early once a restart fails to improve by more than `ftol`.
    pub restarts: usize,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            max_evals: 2000,
            xtol: 1e-8,
            ftol: 1e-10,
            initial_step: 0.1,
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NelderMeadOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
    /// Best objective seen after each evaluation.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

struct Counter<'a, F> {
    f: &'a mut F,
    evals: usize,
    best: f64,
    trace: Vec<f64>,
}

impl<F: FnMut(&[f64]) -> f64> Counter<'_, F> {
    fn call(&mut self, x: &[f64]) -> f64 {
        let v = (self.f)(x);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        self.evals += 1;
        if v < self.best {
            self.best = v;
        }
        self.trace.push(self.best);
        v
    }
}

/// Minimises `f` over the box starting from `x0` (projected first). Uses the
/// dimension-adaptive coefficients of Gao and Han. `NaN` values count as `+∞`.
pub fn minimize<F>(
    mut f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    cfg: &NelderMeadConfig,
) -> NelderMeadOutcome
where
    F: FnMut(&[f64]) -> f64,
{
    let d = x0.len();
    assert_eq!(lower.len(), d);
    assert_eq!(upper.len(), d);
    let mut counter = Counter {
        f: &mut f,
        evals: 0,
        best: f64::INFINITY,
        trace: Vec::new(),
    };

    let mut start = x0.to_vec();
    project(&mut start, lower, upper);
    if d == 0 {
        let v = counter.call(&start);
        return NelderMeadOutcome {
            x: start,
            f: v,
            evals: 1,
            converged: true,
            trace: counter.trace,
        };
    }

    let dn = d as f64;
    let (alpha, gamma, rho, sigma) = if d >= 2 {
        (1.0, 1.0 + 2.0 / dn, 0.75 - 1.0 / (2.0 * dn), 1.0 - 1.0 / dn)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };

    let mut best_x = start;
    let mut best_f = f64::INFINITY;
    let mut converged = false;
    for round in 0..=cfg.restarts {
        let (x, f, done) = simplex_run(
            &mut counter,
            &best_x,
            lower,
            upper,
            cfg,
            (alpha, gamma, rho, sigma),
        );
        let improved = f < best_f - cfg.ftol;
        if f < best_f {
            best_x = x;
            best_f = f;
        }
        converged = done;
        if !done || (round > 0 && !improved) {
            break;
        }
    }
    NelderMeadOutcome {
        x: best_x,
        f: best_f,
        evals: counter.evals,
        converged,
        trace: counter.trace,
    }
}

/// One simplex descent from `start`; returns the best vertex, its value and
/// whether the tolerances were met within the budget.
fn simplex_run<F: FnMut(&[f64]) -> f64>(
    counter: &mut Counter<'_, F>,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    cfg: &NelderMeadConfig,
    (alpha, gamma, rho, sigma): (f64, f64, f64, f64),
) -> (Vec<f64>, f64, bool) {
    let d = start.len();
    let dn = d as f64;
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    simplex.push(start.to_vec());
    for i in 0..d {
        let mut v = start.to_vec();
        let step = cfg.initial_step * (upper[i] - lower[i]);
        v[i] = if v[i] + step <= upper[i] {
            v[i] + step
        } else {
            v[i] - step
        };
        project(&mut v, lower, upper);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| counter.call(v)).collect();

    let mut converged = false;
    let mut order: Vec<usize> = (0..=d).collect();
    while counter.evals < cfg.max_evals {
        // stable sort keeps earlier vertices first on ties
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let reordered: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let reordered_values: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        simplex = reordered;
        values = reordered_values;
        order.iter_mut().enumerate().for_each(|(i, o)| *o = i);

        let best = values[0];
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let f_spread = values[1..]
            .iter()
            .map(|v| (v - best).abs())
            .fold(0.0, f64::max);
        if x_spread <= cfg.xtol && f_spread <= cfg.ftol {
            converged = true;
            break;
        }

        let worst = d;
        let mut centroid = vec![0.0; d];
        for v in &simplex[..d] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / dn;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + t * (c - w))
                .collect();
            project(&mut p, lower, upper);
            p
        };

        let xr = along(alpha);
        let fr = counter.call(&xr);
        if fr < values[0] {
            let xe = along(alpha * gamma);
            let fe = counter.call(&xe);
            if fe < fr {
                simplex[worst] = xe;
                values[worst] = fe;
            } else {
                simplex[worst] = xr;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[d - 1] {
            simplex[worst] = xr;
            values[worst] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[worst] {
            let xc = along(alpha * rho);
            let fc = counter.call(&xc);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = counter.call(&xc);
            (xc, fc)
        };
        if fc < fr.min(values[worst]) {
            simplex[worst] = xc;
            values[worst] = fc;
            continue;
        }
        // shrink towards the best vertex
        let x_best = simplex[0].clone();
        for i in 1..=d {
            let mut v: Vec<f64> = x_best
                .iter()
                .zip(&simplex[i])
                .map(|(b, x)| b + sigma * (x - b))
                .collect();
            project(&mut v, lower, upper);
            values[i] = counter.call(&v);
            simplex[i] = v;
        }
    }

    let (ib, fb) =
        values
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |(bi, bv), (i, v)| if v < bv { (i, v) } else { (bi, bv) },
            );
    (simplex.swap_remove(ib), fb, converged)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let out = minimize(
            |x| (x[0] - 0.3).powi(2) + 10.0 * (x[1] + 0.2).powi(2),
            &[0.9, 0.9],
            &[-1.0, -1.0],
            &[1.0, 1.0],
            &NelderMeadConfig::default(),
        );
        assert!(out.converged);
        assert!((out.x[0] - 0.3).abs() < 1e-7 && (out.x[1] + 0.2).abs() < 1e-7);
    }

    #[test]
    fn rosenbrock() {
        let cfg = NelderMeadConfig {
            max_evals: 5000,
            ..Default::default()
        };
        let out = minimize(
            |x| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2),
            &[-1.2, 1.0],
            &[-2.0, -2.0],
            &[2.0, 2.0],
            &cfg,
        );
        assert!(
            (out.x[0] - 1.0).abs() < 1e-5 && (out.x[1] - 1.0).abs() < 1e-5,
            "{:?}",
            out
        );
    }

    #[test]
    fn optimum_on_the_boundary() {
        let lower = [0.0, 0.0, 0.0];
        let upper = [1.0, 1.0, 1.0];
        let mut outside = 0;
        let out = minimize(
            |x| {
                if x.iter()
                    .zip(&lower)
                    .zip(&upper)
                    .any(|((v, l), u)| v < l || v > u)
                {
                    outside += 1;
                }
                (x[0] + 1.0).powi(2) + (x[1] - 0.5).powi(2) + (x[2] - 2.0).powi(2)
            },
            &[0.5, 0.5, 0.5],
            &lower,
            &upper,
            &NelderMeadConfig::default(),
        );
        assert_eq!(outside, 0);
        assert!(out.x[0] < 1e-6 && (out.x[1] - 0.5).abs() < 1e-6 && out.x[2] > 1.0 - 1e-6);
    }

    #[test]
    fn kinked_objective() {
        let out = minimize(
            |x| (x[0] - 0.123).abs() * 3.0,
            &[0.9],
            &[-5.0],
            &[5.0],
            &NelderMeadConfig::default(),
        );
        assert!(out.converged);
        assert!((out.x[0] - 0.123).abs() < 1e-8);
    }

    #[test]
    fn trace_is_monotone_and_budget_respected() {
        let cfg = NelderMeadConfig {
            max_evals: 50,
            ..Default::default()
        };
        let out = minimize(
            |x| x.iter().map(|v| v.sin() + v * v).sum(),
            &[1.0, 2.0, -1.0, 0.5],
            &[-3.0; 4],
            &[3.0; 4],
            &cfg,
        );
        assert!(out.evals <= 50 + 4);
        assert_eq!(out.trace.len(), out.evals);
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*out.trace.last().unwrap(), out.f);
    }

    #[test]
    fn nan_is_treated_as_worst() {
        let out = minimize(
            |x| {
                if x[0] > 0.5 {
                    f64::NAN
                } else {
                    (x[0] - 0.2).powi(2)
                }
            },
            &[0.4],
            &[0.0],
            &[1.0],
            &NelderMeadConfig::default(),
        );
        assert!((out.x[0] - 0.2).abs() < 1e-7);
    }
}
