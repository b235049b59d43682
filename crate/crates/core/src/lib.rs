//! Unsupervised time-series anomaly detection with test-time adaptation.
//!
//! An MLP autoencoder scores sliding windows by reconstruction error. At
//! test time the input is detrended by an exponential moving average of
//! window means, and the model keeps learning from the timesteps it
//! predicts to be normal. The crate also carries the evaluation stack
//! (thresholds, F1 with point adjustment, AUROC/AUPRC, KL shift diagnostic)
//! and a seeded synthetic trend-shift generator.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what the CLI uses.

pub mod adaptation;
pub mod container;
pub mod data;
pub mod error;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod scalar;
pub mod threshold;
pub mod trend;

pub use adaptation::{
    offline_scores, AdaptationConfig, AdaptationState, StreamResult, WindowOutcome,
};
pub use data::{
    generate_synthetic, load_csv, make_windows, read_csv, write_csv, Scaler, SyntheticSpec,
    TimeSeriesDataset, Window,
};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use metrics::{
    auprc, auroc, confusion, kld_shift, point_adjust, prf1, ConfusionCounts, EvalReport, KldReport,
    Prf1,
};
pub use model::{
    masked_loss, score, train_offline, Gradients, MlpAutoencoder, ModelDims, Params, ScoreVector,
    TrainConfig, TrainOutcome,
};
pub use scalar::Scalar;
pub use threshold::{oracle_threshold, percentile_threshold, ThresholdSpec};
pub use trend::{detrend, retrend, TrendEstimator};

pub type Dataset = TimeSeriesDataset<f64>;
pub type Autoencoder = MlpAutoencoder<f64>;
pub type Autoencoder32 = MlpAutoencoder<f32>;
pub type State = AdaptationState<f64>;
pub type State32 = AdaptationState<f32>;
pub type Config = AdaptationConfig<f64>;
pub type Trend = TrendEstimator<f64>;
pub type Stream = StreamResult<f64>;
