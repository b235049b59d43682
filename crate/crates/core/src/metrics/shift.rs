use serde::{Deserialize, Serialize};

use crate::data::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `D_KL(test || train)` per feature, and their sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KldReport {
    pub per_feature: Vec<f64>,
    pub total: f64,
}

/// Histograms `values` on `bins` equal-width bins over `[lo, hi]`, adds
/// `1 / (10 n)` to every bin's mass and renormalizes.
fn smoothed_histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let mut counts = vec![0usize; bins];
    let width = (hi - lo) / bins as f64;
    for &v in values {
        let k = if width > 0.0 {
            (((v - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[k] += 1;
    }
    let n = values.len() as f64;
    let eps = 1.0 / (10.0 * n);
    let norm = 1.0 + bins as f64 * eps;
    counts
        .iter()
        .map(|&c| (c as f64 / n + eps) / norm)
        .collect()
}

/// Histogram estimate of how far the test distribution has drifted from the
/// training distribution, feature by feature. Bin edges span the pooled
/// range of both sets.
pub fn kld_shift<T: Scalar>(
    train: &TimeSeriesDataset<T>,
    test: &TimeSeriesDataset<T>,
    bins: usize,
) -> Result<KldReport> {
    if bins < 2 {
        return Err(Error::invalid("kld needs at least two bins"));
    }
    if train.features() != test.features() {
        return Err(Error::shape(
            "test features",
            train.features(),
            test.features(),
        ));
    }
    let per_feature: Vec<f64> = (0..train.features())
        .map(|j| {
            let a: Vec<f64> = train
                .values()
                .column(j)
                .into_iter()
                .map(T::to_f64_lossy)
                .collect();
            let b: Vec<f64> = test
                .values()
                .column(j)
                .into_iter()
                .map(T::to_f64_lossy)
                .collect();
            let lo = a.iter().chain(&b).copied().fold(f64::INFINITY, f64::min);
            let hi = a
                .iter()
                .chain(&b)
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            let p_train = smoothed_histogram(&a, lo, hi, bins);
            let p_test = smoothed_histogram(&b, lo, hi, bins);
            p_test
                .iter()
                .zip(&p_train)
                .map(|(&p, &q)| p * (p / q).ln())
                .sum::<f64>()
        })
        .collect();
    let total = per_feature.iter().sum();
    Ok(KldReport { per_feature, total })
}
