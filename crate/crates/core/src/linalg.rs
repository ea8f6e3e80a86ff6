//! Small dense row-major helpers. Matrices here are at most a handful of rows,
//! so everything is written for clarity over blocking.

/// `H = M M'` for square row-major `m` of order `p`.
pub(crate) fn outer_self(m: &[f64], p: usize, h: &mut [f64]) {
    for i in 0..p {
        for j in 0..=i {
            let mut s = 0.0;
            for k in 0..p {
                s += m[i * p + k] * m[j * p + k];
            }
            h[i * p + j] = s;
            h[j * p + i] = s;
        }
    }
}

/// In-place lower Cholesky factor of a symmetric positive definite matrix.
/// Returns `None` when a pivot is not strictly positive.
pub(crate) fn cholesky_in_place(a: &mut [f64], p: usize) -> Option<()> {
    for j in 0..p {
        let mut d = a[j * p + j];
        for k in 0..j {
            d -= a[j * p + k] * a[j * p + k];
        }
        if !(d.is_finite() && d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        a[j * p + j] = d;
        for i in (j + 1)..p {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= a[i * p + k] * a[j * p + k];
            }
            a[i * p + j] = s / d;
        }
        for i in 0..j {
            a[i * p + j] = 0.0;
        }
    }
    Some(())
}

/// Solves `L y = b` in place for lower-triangular `l`.
pub(crate) fn forward_solve(l: &[f64], p: usize, b: &mut [f64]) {
    for i in 0..p {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * p + k] * b[k];
        }
        b[i] = s / l[i * p + i];
    }
}

pub(crate) fn log_det_from_cholesky(l: &[f64], p: usize) -> f64 {
    // one log of the product while it stays comfortably in range
    let prod: f64 = (0..p).map(|i| l[i * p + i]).product();
    if prod > 1e-150 && prod < 1e150 {
        2.0 * prod.ln()
    } else {
        (0..p).map(|i| l[i * p + i].ln()).sum::<f64>() * 2.0
    }
}

/// Largest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
pub(crate) fn max_symmetric_eigenvalue(a: &[f64], p: usize) -> f64 {
    let mut a = a.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..p)
            .flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * p + j] * a[i * p + j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for i in 0..p {
            for j in (i + 1)..p {
                let aij = a[i * p + j];
                if aij == 0.0 {
                    continue;
                }
                let theta = (a[j * p + j] - a[i * p + i]) / (2.0 * aij);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..p {
                    let aki = a[k * p + i];
                    let akj = a[k * p + j];
                    a[k * p + i] = c * aki - s * akj;
                    a[k * p + j] = s * aki + c * akj;
                }
                for k in 0..p {
                    let aik = a[i * p + k];
                    let ajk = a[j * p + k];
                    a[i * p + k] = c * aik - s * ajk;
                    a[j * p + k] = s * aik + c * ajk;
                }
            }
        }
    }
    (0..p)
        .map(|i| a[i * p + i])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Spectral (operator 2-) norm of a square row-major matrix.
pub(crate) fn operator_norm(m: &[f64], p: usize) -> f64 {
    if p == 1 {
        return m[0].abs();
    }
    let mut mtm = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            mtm[i * p + j] = (0..p).map(|k| m[k * p + i] * m[k * p + j]).sum();
        }
    }
    max_symmetric_eigenvalue(&mtm, p).max(0.0).sqrt()
}

pub(crate) fn euclidean_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
