//! Statistics over finished runs.

use freqdyna_core::linalg::distance;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Fraction of `states` within `radius` (ℓ2) of any of `centers`.
pub fn queue_ball_fraction(states: &[Vec<f64>], centers: &[[f64; 2]], radius: f64) -> Result<f64> {
    if states.is_empty() {
        return Err(HarnessError::Empty("queue snapshot has no states".into()));
    }
    let inside = states.iter().filter(|s| centers.iter().any(|c| distance(s, c) <= radius)).count();
    Ok(inside as f64 / states.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub step: u64,
    pub mean: f64,
    /// Sample standard deviation over runs divided by √runs; 0 for one run.
    pub stderr: f64,
    pub runs: usize,
}

pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Per-step mean and standard error across runs. Every run must report the
/// same steps in the same order.
pub fn curve_aggregate(runs: &[(String, Vec<(u64, f64)>)]) -> Result<Vec<Bucket>> {
    let (_, first) = runs.first().ok_or_else(|| HarnessError::Empty("no runs to aggregate".into()))?;
    for (name, curve) in runs {
        if curve.len() != first.len() || curve.iter().zip(first).any(|(a, b)| a.0 != b.0) {
            return Err(HarnessError::Misaligned { run: name.clone() });
        }
    }
    Ok(first
        .iter()
        .enumerate()
        .map(|(i, &(step, _))| {
            let values: Vec<f64> = runs.iter().map(|(_, c)| c[i].1).collect();
            let (mean, stderr) = mean_stderr(&values);
            Bucket { step, mean, stderr, runs: values.len() }
        })
        .collect())
}
