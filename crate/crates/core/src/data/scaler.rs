use serde::{Deserialize, Serialize};

use super::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Smallest standard deviation a feature is allowed to have.
pub const STD_FLOOR: f64 = 1e-8;

/// Per-feature standardization fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Scalar> Scaler<T> {
    /// Population moments of each feature; flat features get `STD_FLOOR`.
    pub fn fit(train: &TimeSeriesDataset<T>) -> Result<Self> {
        if train.len() < 2 {
            return Err(Error::invalid("scaler needs at least two timesteps"));
        }
        let values = train.values();
        let mean = values.column_means();
        let n = T::lit(values.rows() as f64);
        let mut var = vec![T::zero(); values.cols()];
        for row in values.row_iter() {
            for ((acc, &v), &m) in var.iter_mut().zip(row).zip(&mean) {
                *acc += (v - m) * (v - m);
            }
        }
        let floor = T::lit(STD_FLOOR);
        let std = var.into_iter().map(|s| (s / n).sqrt().max(floor)).collect();
        Ok(Self { mean, std })
    }

    pub fn features(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, ds: &TimeSeriesDataset<T>) -> Result<TimeSeriesDataset<T>> {
        let out = self.map(ds, |v, m, s| (v - m) / s)?;
        Ok(ds.map_values(out))
    }

    pub fn invert(&self, ds: &TimeSeriesDataset<T>) -> Result<TimeSeriesDataset<T>> {
        let out = self.map(ds, |v, m, s| v * s + m)?;
        Ok(ds.map_values(out))
    }

    fn map(&self, ds: &TimeSeriesDataset<T>, f: impl Fn(T, T, T) -> T) -> Result<Matrix<T>> {
        if ds.features() != self.features() {
            return Err(Error::shape(
                "scaler feature count",
                self.features(),
                ds.features(),
            ));
        }
        let mut out = ds.values().clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = f(*v, self.mean[j], self.std[j]);
            }
        }
        Ok(out)
    }
}
