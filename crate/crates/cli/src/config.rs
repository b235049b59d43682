//! Run configuration: a flat TOML file overlaid by command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use tsad_core::{SyntheticSpec, ThresholdSpec, TrainConfig};

/// Every knob of a run. Missing keys in a config file take the defaults
/// below, and flags given on the command line win over both.
///
/// When `train` is unset, data comes from the synthetic generator
/// configured by the `synth_*` keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
    /// Defaults to `<out>/model.tsad`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    pub out: PathBuf,
    pub label_column: String,
    /// Standardize both splits with moments fitted on train.
    pub standardize: bool,

    pub window: usize,
    pub stride_train: usize,
    pub stride_test: usize,
    pub hidden: usize,
    pub latent: usize,

    pub gamma: f64,
    pub eta: f64,
    pub threshold: ThresholdSpec,
    pub detrend: bool,
    pub adapt: bool,

    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    /// Model seed for `train` and `detect`.
    pub seed: u64,
    /// Model seeds for `ablate`.
    pub seeds: Vec<u64>,

    pub synth_length_train: usize,
    pub synth_length_test: usize,
    pub synth_period: f64,
    pub synth_amplitude: f64,
    pub synth_shift_at: usize,
    pub synth_shift_magnitude: f64,
    pub synth_anomaly_count: usize,
    pub synth_anomaly_magnitude: f64,
    pub synth_noise_std: f64,
    pub synth_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let synth = SyntheticSpec::default();
        let train = TrainConfig::default();
        Self {
            train: None,
            test: None,
            checkpoint: None,
            out: PathBuf::from("out"),
            label_column: "label".to_string(),
            standardize: true,
            window: 5,
            stride_train: 1,
            stride_test: 5,
            hidden: 4,
            latent: 2,
            gamma: 0.9,
            eta: 0.005,
            threshold: ThresholdSpec::default(),
            detrend: true,
            adapt: true,
            epochs: train.epochs,
            batch: train.batch_size,
            lr: train.lr,
            seed: 0,
            seeds: vec![0, 1, 2, 3, 4],
            synth_length_train: synth.length_train,
            synth_length_test: synth.length_test,
            synth_period: synth.period,
            synth_amplitude: synth.amplitude,
            synth_shift_at: synth.shift_at,
            synth_shift_magnitude: synth.shift_magnitude,
            synth_anomaly_count: synth.anomaly_count,
            synth_anomaly_magnitude: synth.anomaly_magnitude,
            synth_noise_std: synth.noise_std,
            synth_seed: synth.seed,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config fields are all representable in toml")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml()).with_context(|| format!("cannot write {}", path.display()))
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint
            .clone()
            .unwrap_or_else(|| self.out.join("model.tsad"))
    }

    pub fn synthetic_spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            length_train: self.synth_length_train,
            length_test: self.synth_length_test,
            period: self.synth_period,
            amplitude: self.synth_amplitude,
            shift_at: self.synth_shift_at,
            shift_magnitude: self.synth_shift_magnitude,
            anomaly_count: self.synth_anomaly_count,
            anomaly_magnitude: self.synth_anomaly_magnitude,
            noise_std: self.synth_noise_std,
            seed: self.synth_seed,
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch,
            lr: self.lr,
            seed,
        }
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Flat TOML config file; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Training CSV; the synthetic generator is used when absent.
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub stride_train: Option<usize>,
    #[arg(long)]
    pub stride_test: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub latent: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// q<P>, oracle or fixed:<X>.
    #[arg(long)]
    pub threshold: Option<ThresholdSpec>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated model seeds for the ablation grid.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long, overrides_with = "no_detrend")]
    pub detrend: bool,
    #[arg(long, overrides_with = "detrend")]
    pub no_detrend: bool,
    #[arg(long, overrides_with = "no_adapt")]
    pub adapt: bool,
    #[arg(long, overrides_with = "adapt")]
    pub no_adapt: bool,
}

fn toggle(on: bool, off: bool) -> Option<bool> {
    match (on, off) {
        (true, _) => Some(true),
        (_, true) => Some(false),
        _ => None,
    }
}

impl Overrides {
    /// Defaults, then the config file if given, then explicit flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        self.apply(&mut cfg);
        Ok(cfg)
    }

    pub fn apply(&self, cfg: &mut RunConfig) {
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    cfg.$field = v.clone().into();
                }
            )*};
        }
        set!(
            train,
            test,
            checkpoint,
            out,
            window,
            stride_train,
            stride_test,
            hidden,
            latent,
            gamma,
            eta,
            threshold,
            epochs,
            batch,
            lr,
            seed,
            seeds
        );
        if let Some(v) = toggle(self.detrend, self.no_detrend) {
            cfg.detrend = v;
        }
        if let Some(v) = toggle(self.adapt, self.no_adapt) {
            cfg.adapt = v;
        }
    }
}
