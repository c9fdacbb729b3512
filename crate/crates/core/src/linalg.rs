//! Banded symmetric positive-definite storage and its Cholesky factor.

use crate::error::{Error, Result};

/// Lower band of a symmetric matrix: row `i` holds columns `i − p ..= i`.
#[derive(Debug, Clone)]
pub struct BandedSpd {
    size: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(size: usize, bandwidth: usize) -> Self {
        Self { size, bandwidth, data: vec![0.0; size * (bandwidth + 1)] }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(i - j <= self.bandwidth, "({i}, {j}) outside band {}", self.bandwidth);
        i * (self.bandwidth + 1) + (j + self.bandwidth - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        if hi - lo > self.bandwidth {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// Adds `v` to entries `(i, j)` and `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let p = self.bandwidth;
        let mut y = vec![0.0; self.size];
        for i in 0..self.size {
            let row = &self.data[i * (p + 1)..(i + 1) * (p + 1)];
            let start = i.saturating_sub(p);
            for j in start..i {
                let a = row[j + p - i];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += row[p] * x[i];
        }
        y
    }

    /// In-place Cholesky `A = L Lᵀ`; fails if a pivot is not positive.
    pub fn cholesky(mut self) -> Result<BandedCholesky> {
        let p = self.bandwidth;
        let w = p + 1;
        for i in 0..self.size {
            let start = i.saturating_sub(p);
            for j in start..=i {
                let kstart = start.max(j.saturating_sub(p));
                let mut s = self.data[i * w + j + p - i];
                for k in kstart..j {
                    s -= self.data[i * w + k + p - i] * self.data[j * w + k + p - j];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::Numerical(format!(
                            "matrix is not positive definite (pivot {s} at row {i})"
                        )));
                    }
                    self.data[i * w + p] = s.sqrt();
                } else {
                    self.data[i * w + j + p - i] = s / self.data[j * w + p];
                }
            }
        }
        Ok(BandedCholesky { factor: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    factor: BandedSpd,
}

impl BandedCholesky {
    /// Overwrites `b` with `A⁻¹ b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let l = &self.factor;
        let p = l.bandwidth;
        let w = p + 1;
        let n = l.size;
        assert_eq!(b.len(), n);
        for i in 0..n {
            let start = i.saturating_sub(p);
            let mut s = b[i];
            for k in start..i {
                s -= l.data[i * w + k + p - i] * b[k];
            }
            b[i] = s / l.data[i * w + p];
        }
        for i in (0..n).rev() {
            let s = b[i] / l.data[i * w + p];
            b[i] = s;
            let start = i.saturating_sub(p);
            for k in start..i {
                b[k] -= l.data[i * w + k + p - i] * s;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
