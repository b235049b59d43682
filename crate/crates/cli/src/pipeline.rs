//! Shared steps: data loading, scaling, training and one stream run.

use std::fmt;
use std::path::Path;

use anyhow::{bail, Context, Result};
use tsad_core::{
    generate_synthetic, load_csv, make_windows, Autoencoder, Config, Dataset, Error, ModelDims,
    Scaler, State, Stream, ThresholdSpec, TrainOutcome,
};

use crate::config::RunConfig;

/// Train and test splits in model space (standardized if configured).
#[derive(Debug, Clone)]
pub struct Data {
    pub train: Dataset,
    pub test: Option<Dataset>,
    /// Test timestep where the synthetic level shift starts.
    pub shift_at: Option<usize>,
}

/// Loads a CSV whose label column is optional.
pub fn load_dataset(path: &Path, label_column: &str) -> Result<Dataset> {
    match load_csv(path, Some(label_column)) {
        Err(Error::MissingColumn(_)) => Ok(load_csv(path, None)?),
        other => Ok(other?),
    }
}

pub fn load_data(cfg: &RunConfig, need_test: bool) -> Result<Data> {
    let (train, test, shift_at) = match &cfg.train {
        Some(path) => {
            let train = load_dataset(path, &cfg.label_column)?;
            let test = match &cfg.test {
                Some(path) => Some(load_dataset(path, &cfg.label_column)?),
                None => None,
            };
            (train, test, None)
        }
        None => {
            if cfg.test.is_some() {
                bail!("a test file needs a train file; set both or neither");
            }
            let spec = cfg.synthetic_spec();
            let (train, test) = generate_synthetic(&spec)?;
            (train, Some(test), Some(spec.shift_at))
        }
    };
    if need_test && test.is_none() {
        bail!("no test data: pass --test or omit --train to use synthetic data");
    }
    if let Some(test) = &test {
        if test.features() != train.features() {
            bail!(
                "train has {} features but test has {}",
                train.features(),
                test.features()
            );
        }
    }
    if !cfg.standardize {
        return Ok(Data {
            train,
            test,
            shift_at,
        });
    }
    let scaler = Scaler::fit(&train)?;
    Ok(Data {
        train: scaler.apply(&train)?,
        test: test.map(|t| scaler.apply(&t)).transpose()?,
        shift_at,
    })
}

pub fn model_dims(cfg: &RunConfig, features: usize) -> Result<ModelDims> {
    Ok(ModelDims::new(
        cfg.window, features, cfg.hidden, cfg.latent,
    )?)
}

pub fn train_model(cfg: &RunConfig, train: &Dataset, seed: u64) -> Result<TrainOutcome<f64>> {
    let dims = model_dims(cfg, train.features())?;
    let windows = make_windows(train, cfg.window, cfg.stride_train)?;
    let outcome = tsad_core::train_offline(
        Autoencoder::new(dims, seed),
        &windows,
        &cfg.train_config(seed),
    )
    .context("offline training failed")?;
    Ok(outcome)
}

/// Per-row scores of every training window, in window order.
pub fn train_scores(model: &Autoencoder, train: &Dataset, stride: usize) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for window in make_windows(train, model.dims().window, stride)? {
        out.extend_from_slice(&model.score_window(&window)?);
    }
    Ok(out)
}

/// Threshold used while streaming. The oracle needs the stream's own
/// scores, so it is only available to `evaluate`.
pub fn stream_threshold(spec: ThresholdSpec, train_scores: &[f64]) -> Result<f64> {
    if spec == ThresholdSpec::Oracle {
        bail!("the oracle threshold cannot drive a stream; run `evaluate --threshold oracle` on the scores");
    }
    Ok(spec.resolve(Some(train_scores), None)?)
}

/// One cell of the detrend/adaptation grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Variant {
    pub detrend: bool,
    pub adapt: bool,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant {
            detrend: false,
            adapt: false,
        },
        Variant {
            detrend: true,
            adapt: false,
        },
        Variant {
            detrend: false,
            adapt: true,
        },
        Variant {
            detrend: true,
            adapt: true,
        },
    ];
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match (self.detrend, self.adapt) {
            (false, false) => "none",
            (true, false) => "DT",
            (false, true) => "TTA",
            (true, true) => "DT+TTA",
        })
    }
}

pub fn run_variant(
    cfg: &RunConfig,
    model: Autoencoder,
    train: &Dataset,
    test: &Dataset,
    tau: f64,
    variant: Variant,
) -> Result<Stream> {
    let dims = *model.dims();
    if dims.features != test.features() {
        return Err(Error::Shape {
            what: "checkpoint features",
            expected: test.features(),
            found: dims.features,
        }
        .into());
    }
    let config = Config {
        gamma: cfg.gamma,
        eta: cfg.eta,
        tau,
        window: cfg.window,
        use_detrend: variant.detrend,
        use_tta: variant.adapt,
    };
    let mut state = State::new(model, train, config)?;
    Ok(state.run_stream(test, cfg.stride_test)?)
}

/// False positives at or after the synthetic shift.
pub fn post_shift_false_positives(preds: &[bool], labels: &[bool], shift_at: usize) -> usize {
    preds
        .iter()
        .zip(labels)
        .skip(shift_at)
        .filter(|&(&p, &l)| p && !l)
        .count()
}
