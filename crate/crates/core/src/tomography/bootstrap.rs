use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::Result;
use crate::rng;
use crate::sim::counts::{CellCounts, CountsTable};

/// Multinomial resample of every cell: the invocations are redistributed over the
/// observed outcomes plus the implicit "not postselected" category.
pub fn resample_counts<R: Rng + ?Sized>(counts: &CountsTable, rng: &mut R) -> CountsTable {
    let mut out = CountsTable::new();
    for (input, setting, cell) in counts.cells() {
        let n = cell.invocations;
        let mut remaining = n;
        let mut mass = 1.0f64;
        let mut fresh = CellCounts { invocations: n, ..Default::default() };
        for (outcome, &k) in &cell.outcomes {
            let p = if n == 0 { 0.0 } else { k as f64 / n as f64 };
            let draw = if remaining == 0 || p <= 0.0 {
                0
            } else if p >= mass {
                remaining
            } else {
                Binomial::new(remaining, (p / mass).clamp(0.0, 1.0))
                    .map(|b| b.sample(rng))
                    .unwrap_or(0)
            };
            remaining -= draw;
            mass -= p;
            fresh.outcomes.insert(outcome.clone(), draw);
        }
        out.insert_cell(input, setting, fresh);
    }
    out
}

/// Applies `estimator` to `resamples` bootstrap replicas, in parallel, with one
/// RNG stream per replica.
pub fn bootstrap<T, F>(counts: &CountsTable, resamples: usize, seed: u64, estimator: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&CountsTable) -> Result<T> + Sync,
{
    (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(seed, &[r as u64]);
            estimator(&resample_counts(counts, &mut rng))
        })
        .collect()
}

/// Mean and sample standard deviation.
pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
