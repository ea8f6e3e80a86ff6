use serde::Serialize;

use crate::error::{Error, Result};

/// An `n x p` trajectory, row `t` holding `X_{t+1}`. Row-major storage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesMatrix {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl SeriesMatrix {
    pub fn new(p: usize, data: Vec<f64>) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidArgument(
                "series dimension p must be >= 1".into(),
            ));
        }
        if !data.len().is_multiple_of(p) {
            return Err(Error::InvalidArgument(format!(
                "{} values do not split into rows of {p}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite entry at row {}, column {}",
                bad / p,
                bad % p
            )));
        }
        Ok(Self {
            n: data.len() / p,
            p,
            data,
        })
    }

    pub fn from_rows(p: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * p);
        for row in rows {
            if row.len() != p {
                return Err(Error::Dimension {
                    expected: p,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(p, data)
    }

    pub fn empty(p: usize) -> Self {
        Self {
            n: 0,
            p,
            data: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.p..(t + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// First `n` rows.
    pub fn head(&self, n: usize) -> Self {
        let n = n.min(self.n);
        Self {
            n,
            p: self.p,
            data: self.data[..n * self.p].to_vec(),
        }
    }

    /// Last `n` rows.
    pub fn tail(&self, n: usize) -> Self {
        let n = n.min(self.n);
        Self {
            n,
            p: self.p,
            data: self.data[(self.n - n) * self.p..].to_vec(),
        }
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.p];
        for row in self.rows() {
            for (acc, v) in m.iter_mut().zip(row) {
                *acc += v;
            }
        }
        m.iter_mut().for_each(|v| *v /= self.n as f64);
        m
    }

    /// Sample covariance (divisor `n`).
    pub fn covariance(&self) -> Vec<f64> {
        let mean = self.column_means();
        let p = self.p;
        let mut c = vec![0.0; p * p];
        for row in self.rows() {
            for i in 0..p {
                for j in 0..p {
                    c[i * p + j] += (row[i] - mean[i]) * (row[j] - mean[j]);
                }
            }
        }
        c.iter_mut().for_each(|v| *v /= self.n as f64);
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_and_non_finite() {
        assert!(SeriesMatrix::new(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(SeriesMatrix::new(1, vec![1.0, f64::NAN]).is_err());
        assert!(SeriesMatrix::new(0, vec![]).is_err());
    }

    #[test]
    fn head_tail_and_moments() {
        let s = SeriesMatrix::new(2, vec![1.0, 0.0, 3.0, 2.0, 5.0, 4.0]).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.row(1), &[3.0, 2.0]);
        assert_eq!(s.head(1).as_slice(), &[1.0, 0.0]);
        assert_eq!(s.tail(2).as_slice(), &[3.0, 2.0, 5.0, 4.0]);
        assert_eq!(s.column_means(), vec![3.0, 2.0]);
        let c = s.covariance();
        assert!((c[0] - 8.0 / 3.0).abs() < 1e-15);
        assert!((c[1] - 8.0 / 3.0).abs() < 1e-15);
    }
}
