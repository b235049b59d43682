//! Streaming detection with trend detrending and test-time model updates.
//!
//! Each window is processed in a fixed order: update the trend from the raw
//! window, detrend, reconstruct and score, threshold into predictions, then
//! take one SGD step on the rows predicted normal.

use serde::{Deserialize, Serialize};

use crate::container::{Decoder, Encoder, Kind};
use crate::data::{make_windows, TimeSeriesDataset, Window};
use crate::error::{Error, Result};
use crate::model::{score, MlpAutoencoder, ScoreVector};
use crate::scalar::Scalar;
use crate::trend::{detrend, TrendEstimator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptationConfig<T> {
    /// EMA retention rate; ignored unless `use_detrend`.
    pub gamma: T,
    /// Test-time learning rate; ignored unless `use_tta`.
    pub eta: T,
    /// Anomaly threshold; a row is anomalous iff its score is `> tau`.
    pub tau: T,
    pub window: usize,
    pub use_detrend: bool,
    pub use_tta: bool,
}

impl<T: Scalar> AdaptationConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= T::zero() && self.gamma <= T::one()) {
            return Err(Error::invalid(format!(
                "gamma {} outside [0, 1]",
                self.gamma
            )));
        }
        if !self.eta.is_finite() || self.eta < T::zero() {
            return Err(Error::invalid(format!(
                "eta {} must be finite and >= 0",
                self.eta
            )));
        }
        if self.tau.is_nan() {
            return Err(Error::invalid("tau is NaN"));
        }
        if self.window == 0 {
            return Err(Error::invalid("window must be at least 1"));
        }
        Ok(())
    }
}

/// Detrended, scored and thresholded window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowOutcome<T> {
    pub scores: ScoreVector<T>,
    pub preds: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationState<T> {
    pub model: MlpAutoencoder<T>,
    pub trend: TrendEstimator<T>,
    pub config: AdaptationConfig<T>,
    pub windows_processed: u64,
}

/// Per-timestep outputs of a stream run.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamResult<T> {
    pub scores: Vec<T>,
    pub preds: Vec<bool>,
    /// Trend after each window's update, one entry per window.
    pub trend_trace: Vec<Vec<T>>,
    /// Index into `trend_trace` of the window that scored each timestep.
    pub window_of: Vec<usize>,
}

impl<T: Scalar> StreamResult<T> {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

impl<T: Scalar> AdaptationState<T> {
    /// Trend starts from the per-feature training mean.
    pub fn new(
        model: MlpAutoencoder<T>,
        train: &TimeSeriesDataset<T>,
        config: AdaptationConfig<T>,
    ) -> Result<Self> {
        let trend = TrendEstimator::from_train(train, config.gamma)?;
        Self::with_trend(model, trend, config)
    }

    pub fn with_trend(
        model: MlpAutoencoder<T>,
        trend: TrendEstimator<T>,
        config: AdaptationConfig<T>,
    ) -> Result<Self> {
        config.validate()?;
        let dims = model.dims();
        if dims.window != config.window {
            return Err(Error::shape("model window", config.window, dims.window));
        }
        if trend.mu().len() != dims.features {
            return Err(Error::shape(
                "trend features",
                dims.features,
                trend.mu().len(),
            ));
        }
        Ok(Self {
            model,
            trend,
            config,
            windows_processed: 0,
        })
    }

    pub fn process_window(&mut self, window: &Window<T>) -> Result<WindowOutcome<T>> {
        let index = self.windows_processed;
        let input = if self.config.use_detrend {
            self.trend.update(window)?;
            detrend(window, self.trend.mu())?
        } else {
            window.clone()
        };

        let recon = self.model.forward(&input)?;
        let scores = score(&input, &recon)?;
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite(format!("anomaly score in window {index}")));
        }
        let tau = self.config.tau;
        let preds: Vec<bool> = scores.iter().map(|&s| s > tau).collect();

        if self.config.use_tta && preds.iter().any(|&p| !p) {
            let (_, grads) = self.model.gradients(&input, &preds)?;
            self.model
                .sgd_step(&grads, self.config.eta)
                .map_err(|e| match e {
                    Error::NonFinite(_) => Error::NonFinite(format!("gradient in window {index}")),
                    other => other,
                })?;
        }
        self.windows_processed += 1;
        Ok(WindowOutcome { scores, preds })
    }

    /// Runs every window of `test` through [`process_window`] in time order.
    ///
    /// The first window reports all of its rows; each later window reports
    /// only the `stride` rows it adds, so every covered timestep is scored
    /// exactly once by the first window that saw it in full. Requires
    /// `stride <= window`.
    ///
    /// [`process_window`]: Self::process_window
    pub fn run_stream(
        &mut self,
        test: &TimeSeriesDataset<T>,
        stride: usize,
    ) -> Result<StreamResult<T>> {
        let w = self.config.window;
        if stride == 0 || stride > w {
            return Err(Error::invalid(format!(
                "test stride {stride} must lie in [1, {w}] so every timestep is scored"
            )));
        }
        let windows = make_windows(test, w, stride)?;
        let covered = w + (windows.len() - 1) * stride;
        let mut out = StreamResult {
            scores: Vec::with_capacity(covered),
            preds: Vec::with_capacity(covered),
            trend_trace: Vec::with_capacity(windows.len()),
            window_of: Vec::with_capacity(covered),
        };
        for (k, window) in windows.iter().enumerate() {
            let outcome = self.process_window(window)?;
            let fresh = if k == 0 { 0 } else { w - stride };
            out.scores.extend_from_slice(&outcome.scores[fresh..]);
            out.preds.extend_from_slice(&outcome.preds[fresh..]);
            out.window_of.extend(std::iter::repeat_n(k, w - fresh));
            out.trend_trace.push(self.trend.mu().to_vec());
        }
        Ok(out)
    }

    pub fn snapshot(&self) -> Vec<u8> {
        let mut enc = Encoder::new::<T>(Kind::State);
        self.model.encode(&mut enc);
        enc.usize(self.trend.mu().len());
        enc.scalars(self.trend.mu());
        enc.scalar(self.trend.gamma());
        enc.u8(u8::from(self.trend.is_initialized()));
        let c = &self.config;
        enc.scalar(c.gamma);
        enc.scalar(c.eta);
        enc.scalar(c.tau);
        enc.usize(c.window);
        enc.u8(u8::from(c.use_detrend) | (u8::from(c.use_tta) << 1));
        enc.u64(self.windows_processed);
        enc.finish()
    }

    pub fn restore(bytes: &[u8]) -> Result<Self> {
        let mut dec = Decoder::open::<T>(bytes, Kind::State)?;
        let model = MlpAutoencoder::decode(&mut dec)?;
        let n = dec.usize()?;
        let mu = dec.scalars(n)?;
        let trend_gamma = dec.scalar()?;
        let initialized = dec.u8()? == 1;
        let corrupt = |e: Error| Error::Corrupt(e.to_string());
        let trend = if initialized {
            TrendEstimator::from_mu(mu, trend_gamma).map_err(corrupt)?
        } else {
            TrendEstimator::uninitialized(n, trend_gamma).map_err(corrupt)?
        };
        let gamma = dec.scalar()?;
        let eta = dec.scalar()?;
        let tau = dec.scalar()?;
        let window = dec.usize()?;
        let flags = dec.u8()?;
        if flags > 3 {
            return Err(Error::Corrupt(format!("unknown flag bits {flags:#04x}")));
        }
        let windows_processed = dec.u64()?;
        dec.finish()?;
        let config = AdaptationConfig {
            gamma,
            eta,
            tau,
            window,
            use_detrend: flags & 1 != 0,
            use_tta: flags & 2 != 0,
        };
        let mut state = Self::with_trend(model, trend, config).map_err(corrupt)?;
        state.windows_processed = windows_processed;
        Ok(state)
    }
}

/// Scores every window of `test` with a frozen model and no detrending,
/// using the same timestep assembly as [`AdaptationState::run_stream`].
pub fn offline_scores<T: Scalar>(
    model: &MlpAutoencoder<T>,
    test: &TimeSeriesDataset<T>,
    stride: usize,
) -> Result<Vec<T>> {
    let w = model.dims().window;
    if stride == 0 || stride > w {
        return Err(Error::invalid(format!(
            "test stride {stride} must lie in [1, {w}]"
        )));
    }
    let mut scores = Vec::new();
    for (k, window) in make_windows(test, w, stride)?.iter().enumerate() {
        let s = model.score_window(window)?;
        let fresh = if k == 0 { 0 } else { w - stride };
        scores.extend_from_slice(&s[fresh..]);
    }
    Ok(scores)
}
