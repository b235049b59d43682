use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Univariate sinusoid with an abrupt level shift in the test split and
/// injected point spikes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub length_train: usize,
    pub length_test: usize,
    pub period: f64,
    pub amplitude: f64,
    /// Test timestep from which `shift_magnitude` is added.
    pub shift_at: usize,
    pub shift_magnitude: f64,
    pub anomaly_count: usize,
    pub anomaly_magnitude: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            length_train: 2000,
            length_test: 2000,
            period: 50.0,
            amplitude: 1.0,
            shift_at: 1000,
            shift_magnitude: 5.0,
            anomaly_count: 10,
            anomaly_magnitude: 3.0,
            noise_std: 0.05,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.length_train == 0 {
            return Err(Error::invalid("length_train must be positive"));
        }
        if self.shift_at == 0 || self.shift_at >= self.length_test {
            return Err(Error::invalid(format!(
                "shift_at must lie in (0, {}), got {}",
                self.length_test, self.shift_at
            )));
        }
        if self.anomaly_count * 10 >= self.length_test {
            return Err(Error::invalid(
                "anomaly_count must stay below length_test / 10",
            ));
        }
        if !self.period.is_finite() || self.period <= 0.0 {
            return Err(Error::invalid("period must be positive"));
        }
        if !self.noise_std.is_finite() || self.noise_std < 0.0 {
            return Err(Error::invalid("noise_std must be non-negative"));
        }
        if !self.amplitude.is_finite()
            || !self.shift_magnitude.is_finite()
            || !self.anomaly_magnitude.is_finite()
        {
            return Err(Error::invalid("magnitudes must be finite"));
        }
        Ok(())
    }

    /// Noise-free, spike-free value at test timestep `t` (shift included).
    pub fn clean_test_value(&self, t: usize) -> f64 {
        let shift = if t >= self.shift_at {
            self.shift_magnitude
        } else {
            0.0
        };
        self.base(t) + shift
    }

    fn base(&self, t: usize) -> f64 {
        self.amplitude * (2.0 * PI * t as f64 / self.period).sin()
    }

    /// Test timesteps far enough from the shift to receive a spike.
    fn eligible_positions(&self) -> Vec<usize> {
        let guard = self.period.ceil() as usize;
        (0..self.length_test)
            .filter(|&t| t + guard <= self.shift_at || t >= self.shift_at + guard)
            .collect()
    }
}

/// Generates `(train, test)`; the test split carries labels marking exactly
/// the injected spikes. Output is a pure function of `spec`.
pub fn generate_synthetic<T: Scalar>(
    spec: &SyntheticSpec,
) -> Result<(TimeSeriesDataset<T>, TimeSeriesDataset<T>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| Error::invalid(e.to_string()))?;

    let train: Vec<T> = (0..spec.length_train)
        .map(|t| T::lit(spec.base(t) + noise.sample(&mut rng)))
        .collect();

    let mut test: Vec<f64> = (0..spec.length_test)
        .map(|t| spec.clean_test_value(t) + noise.sample(&mut rng))
        .collect();
    let eligible = spec.eligible_positions();
    if eligible.len() < spec.anomaly_count {
        return Err(Error::invalid(
            "not enough positions outside the shift guard band",
        ));
    }
    let mut labels = vec![false; spec.length_test];
    for k in sample(&mut rng, eligible.len(), spec.anomaly_count) {
        let t = eligible[k];
        test[t] += spec.anomaly_magnitude;
        labels[t] = true;
    }

    let name = vec!["value".to_string()];
    let train = TimeSeriesDataset::new(
        Matrix::from_vec(spec.length_train, 1, train)?,
        None,
        name.clone(),
    )?;
    let test = TimeSeriesDataset::new(
        Matrix::from_vec(spec.length_test, 1, test.into_iter().map(T::lit).collect())?,
        Some(labels),
        name,
    )?;
    Ok((train, test))
}
