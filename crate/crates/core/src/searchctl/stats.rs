use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{distance, SquareMatrix};

/// Single-pass (Welford) mean and covariance of visited states.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    mean: Vec<f64>,
    /// Row-major sum of outer products of deviations.
    m2: Vec<f64>,
    count: u64,
}

impl CovarianceEstimate {
    pub fn new(dim: usize) -> Self {
        Self { mean: vec![0.0; dim], m2: vec![0.0; dim * dim], count: 0 }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn update(&mut self, s: &[f64]) {
        assert_eq!(s.len(), self.dim(), "state dimension");
        let n = self.dim();
        self.count += 1;
        let inv = 1.0 / self.count as f64;
        let before: Vec<f64> = s.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        for (m, d) in self.mean.iter_mut().zip(&before) {
            *m += d * inv;
        }
        for i in 0..n {
            let after_i = s[i] - self.mean[i];
            for j in 0..n {
                self.m2[i * n + j] += after_i * before[j];
            }
        }
        // Keep the accumulator exactly symmetric.
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self.m2[i * n + j] + self.m2[j * n + i]);
                self.m2[i * n + j] = v;
                self.m2[j * n + i] = v;
            }
        }
    }

    /// Unbiased covariance; the identity until two samples have been seen.
    pub fn covariance(&self) -> SquareMatrix {
        let n = self.dim();
        if self.count < 2 {
            return SquareMatrix::identity(n);
        }
        let scale = 1.0 / (self.count - 1) as f64;
        SquareMatrix::from_row_major(n, self.m2.iter().map(|v| v * scale).collect())
    }
}

/// Running mean of `|s' - s| / sqrt(n)` over real transitions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AcceptThreshold {
    value: f64,
    count: u64,
}

impl AcceptThreshold {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn update(&mut self, s: &[f64], s_next: &[f64]) {
        let step = distance(s, s_next) / libm::sqrt(s.len() as f64);
        self.count += 1;
        self.value += (step - self.value) / self.count as f64;
    }
}
