//! Mean and percentile-bootstrap confidence intervals.

use alloc::vec::Vec;

use crate::rng::DetRng;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Percentile-method bootstrap interval for the mean of `values`.
/// Deterministic for a fixed seed. Returns `None` for empty input.
pub fn bootstrap_mean_ci(
    values: &[f64],
    resamples: usize,
    confidence: f64,
    seed: u64,
) -> Option<(f64, f64)> {
    if values.is_empty() || resamples == 0 {
        return None;
    }
    let n = values.len();
    let mut rng = DetRng::new(seed);
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            let mut acc = 0.0;
            for _ in 0..n {
                acc += values[rng.below(n)];
            }
            acc / n as f64
        })
        .collect();
    stats.sort_by(|a, b| a.total_cmp(b));

    let alpha = 1.0 - confidence;
    let lower_idx = ((alpha / 2.0) * resamples as f64) as usize;
    let upper_idx = (((1.0 - alpha / 2.0) * resamples as f64) as usize).min(resamples - 1);
    Some((stats[lower_idx], stats[upper_idx]))
}
