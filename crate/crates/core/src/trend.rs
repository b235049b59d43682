//! Exponential-moving-average trend tracking and window detrending.

use serde::{Deserialize, Serialize};

use crate::data::{TimeSeriesDataset, Window};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Per-feature EMA of window means.
///
/// Each update blends the previous estimate with the mean of the incoming
/// window: `mu <- gamma * mu + (1 - gamma) * window_mean`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendEstimator<T> {
    mu: Vec<T>,
    gamma: T,
    initialized: bool,
}

fn check_gamma<T: Scalar>(gamma: T) -> Result<()> {
    if gamma >= T::zero() && gamma <= T::one() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "gamma must lie in [0, 1], got {gamma}"
        )))
    }
}

impl<T: Scalar> TrendEstimator<T> {
    /// Starts from the per-feature mean of the training data.
    pub fn from_train(train: &TimeSeriesDataset<T>, gamma: T) -> Result<Self> {
        check_gamma(gamma)?;
        if train.is_empty() {
            return Err(Error::invalid(
                "cannot initialize trend from an empty dataset",
            ));
        }
        Ok(Self {
            mu: train.values().column_means(),
            gamma,
            initialized: true,
        })
    }

    pub fn from_mu(mu: Vec<T>, gamma: T) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self {
            mu,
            gamma,
            initialized: true,
        })
    }

    /// Placeholder state with no estimate yet; `update` refuses to run on it.
    pub fn uninitialized(features: usize, gamma: T) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self {
            mu: vec![T::zero(); features],
            gamma,
            initialized: false,
        })
    }

    pub fn mu(&self) -> &[T] {
        &self.mu
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    /// Folds the mean of every row of `window` (anomalous rows included)
    /// into the estimate and returns the new trend.
    pub fn update(&mut self, window: &Window<T>) -> Result<&[T]> {
        if !self.initialized {
            return Err(Error::invalid("trend estimator used before initialization"));
        }
        if window.features() != self.mu.len() {
            return Err(Error::shape(
                "window features",
                self.mu.len(),
                window.features(),
            ));
        }
        let window_mean = window.data.column_means();
        let keep = self.gamma;
        let blend = T::one() - keep;
        for (m, &wm) in self.mu.iter_mut().zip(&window_mean) {
            *m = keep * *m + blend * wm;
        }
        Ok(&self.mu)
    }
}

fn shift_rows<T: Scalar>(window: &Window<T>, mu: &[T], sign: T) -> Result<Window<T>> {
    if window.features() != mu.len() {
        return Err(Error::shape("trend length", window.features(), mu.len()));
    }
    let mut data: Matrix<T> = window.data.clone();
    for i in 0..data.rows() {
        for (v, &m) in data.row_mut(i).iter_mut().zip(mu) {
            *v += sign * m;
        }
    }
    Ok(Window::new(data, window.end_index))
}

/// Subtracts `mu` from every row.
pub fn detrend<T: Scalar>(window: &Window<T>, mu: &[T]) -> Result<Window<T>> {
    shift_rows(window, mu, -T::one())
}

/// Adds `mu` back to every row.
pub fn retrend<T: Scalar>(recon: &Window<T>, mu: &[T]) -> Result<Window<T>> {
    shift_rows(recon, mu, T::one())
}
