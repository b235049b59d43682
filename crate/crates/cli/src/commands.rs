//! The five subcommands. Each takes a resolved [`RunConfig`] and writes
//! its outputs under `cfg.out`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use tsad_core::{write_csv, Autoencoder, EvalReport, ThresholdSpec};

use crate::config::RunConfig;
use crate::pipeline::{
    load_data, load_dataset, post_shift_false_positives, run_variant, stream_threshold,
    train_model, train_scores, Variant,
};
use crate::tables::{read_score_table, write_stream, write_threshold_table, write_train_scores};

fn prepare_out(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out)
        .with_context(|| format!("cannot create output directory {}", cfg.out.display()))
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn read_checkpoint(path: &Path) -> Result<Autoencoder> {
    let bytes =
        fs::read(path).with_context(|| format!("cannot read checkpoint {}", path.display()))?;
    Autoencoder::from_bytes(&bytes)
        .with_context(|| format!("cannot load checkpoint {}", path.display()))
}

/// Files written by `train`.
#[derive(Debug, Clone)]
pub struct TrainArtifacts {
    pub checkpoint: PathBuf,
    pub train_scores: PathBuf,
    pub thresholds: PathBuf,
}

pub fn train(cfg: &RunConfig) -> Result<TrainArtifacts> {
    let data = load_data(cfg, false)?;
    let outcome = train_model(cfg, &data.train, cfg.seed)?;
    let scores = outcome.flat_scores();

    prepare_out(cfg)?;
    let artifacts = TrainArtifacts {
        checkpoint: cfg.checkpoint_path(),
        train_scores: cfg.out.join("train_scores.csv"),
        thresholds: cfg.out.join("thresholds.csv"),
    };
    if let Some(dir) = artifacts
        .checkpoint
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
    {
        fs::create_dir_all(dir)?;
    }
    fs::write(&artifacts.checkpoint, outcome.model.to_bytes())
        .with_context(|| format!("cannot write {}", artifacts.checkpoint.display()))?;
    write_train_scores(
        &artifacts.train_scores,
        &scores,
        cfg.window,
        cfg.stride_train,
    )?;
    write_threshold_table(&artifacts.thresholds, &scores)?;
    cfg.save(&cfg.out.join("config.toml"))?;
    Ok(artifacts)
}

/// Written next to the per-timestep scores by `detect`.
#[derive(Debug, Clone, Serialize)]
pub struct DetectSummary {
    pub variant: String,
    pub detrend: bool,
    pub adapt: bool,
    pub threshold: ThresholdSpec,
    pub tau: f64,
    pub window: usize,
    pub stride: usize,
    pub gamma: f64,
    pub eta: f64,
    pub timesteps: usize,
    pub windows: usize,
    pub flagged: usize,
    /// Present when the test data is labeled.
    pub report: Option<EvalReport>,
}

pub fn detect(cfg: &RunConfig) -> Result<DetectSummary> {
    let data = load_data(cfg, true)?;
    let test = data
        .test
        .as_ref()
        .expect("load_data checked the test split");
    let model = read_checkpoint(&cfg.checkpoint_path())?;
    let dims = *model.dims();
    if dims.window != cfg.window {
        bail!(
            "checkpoint window is {} but the config asks for {}",
            dims.window,
            cfg.window
        );
    }
    if dims.features != data.train.features() {
        bail!(
            "checkpoint expects {} features but the data has {}",
            dims.features,
            data.train.features()
        );
    }
    let train_scores = train_scores(&model, &data.train, cfg.stride_train)?;
    let tau = stream_threshold(cfg.threshold, &train_scores)?;
    let variant = Variant {
        detrend: cfg.detrend,
        adapt: cfg.adapt,
    };
    let stream = run_variant(cfg, model, &data.train, test, tau, variant)?;

    let report = test
        .labels()
        .map(|labels| {
            EvalReport::from_predictions(
                &stream.scores,
                &stream.preds,
                &labels[..stream.len()],
                tau,
                cfg.threshold,
            )
        })
        .transpose()?;
    let summary = DetectSummary {
        variant: variant.to_string(),
        detrend: variant.detrend,
        adapt: variant.adapt,
        threshold: cfg.threshold,
        tau,
        window: cfg.window,
        stride: cfg.stride_test,
        gamma: cfg.gamma,
        eta: cfg.eta,
        timesteps: stream.len(),
        windows: stream.trend_trace.len(),
        flagged: stream.preds.iter().filter(|&&p| p).count(),
        report,
    };

    prepare_out(cfg)?;
    write_stream(&cfg.out.join("scores.csv"), &stream, test)?;
    write_json(&cfg.out.join("summary.json"), &summary)?;
    cfg.save(&cfg.out.join("config.toml"))?;
    Ok(summary)
}

/// Inputs of `evaluate` beyond the run config.
#[derive(Debug, Clone, Default)]
pub struct EvaluateInputs {
    pub scores: PathBuf,
    /// Labels file; defaults to the `label` column of the score file.
    pub labels: Option<PathBuf>,
    /// Training scores for percentile thresholds.
    pub train_scores: Option<PathBuf>,
}

/// Evaluates a score file. Returns the report and any warnings.
pub fn evaluate(cfg: &RunConfig, inputs: &EvaluateInputs) -> Result<(EvalReport, Vec<String>)> {
    let table = read_score_table(&inputs.scores, &cfg.label_column)?;
    let labels = match &inputs.labels {
        Some(path) => {
            let ds = load_dataset(path, &cfg.label_column)?;
            let Some(all) = ds.labels() else {
                bail!("{} has no `{}` column", path.display(), cfg.label_column);
            };
            match &table.timesteps {
                Some(ts) => ts
                    .iter()
                    .map(|&t| {
                        all.get(t).copied().with_context(|| {
                            format!(
                                "timestep {t} is beyond the {} labels in {}",
                                all.len(),
                                path.display()
                            )
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
                None => all.to_vec(),
            }
        }
        None => match table.labels.clone() {
            Some(l) => l,
            None => bail!(
                "{} has no `{}` column; pass --labels",
                inputs.scores.display(),
                cfg.label_column
            ),
        },
    };
    if labels.len() != table.scores.len() {
        bail!(
            "length mismatch: {} scores but {} labels",
            table.scores.len(),
            labels.len()
        );
    }

    let train = match (&cfg.threshold, &inputs.train_scores) {
        (ThresholdSpec::TrainPercentile(_), None) => {
            bail!("a percentile threshold needs --train-scores")
        }
        (ThresholdSpec::TrainPercentile(_), Some(path)) => {
            Some(read_score_table(path, &cfg.label_column)?.scores)
        }
        _ => None,
    };
    let tau = cfg
        .threshold
        .resolve(train.as_deref(), Some((&table.scores, &labels)))?;
    let report = EvalReport::evaluate(&table.scores, &labels, tau, cfg.threshold)?;

    let mut warnings = Vec::new();
    if report.auroc.is_none() {
        warnings.push("labels hold a single class; AUROC is undefined".to_string());
    }
    if report.auprc.is_none() {
        warnings.push("labels hold no anomalies; AUPRC is undefined".to_string());
    }
    prepare_out(cfg)?;
    write_json(&cfg.out.join("report.json"), &report)?;
    Ok((report, warnings))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; absent with fewer than two runs.
    pub std: Option<f64>,
}

impl MeanStd {
    /// `None` when any run lacks the value.
    pub fn of(values: impl IntoIterator<Item = Option<f64>>) -> Option<Self> {
        let xs: Vec<f64> = values.into_iter().collect::<Option<_>>()?;
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std = (xs.len() > 1)
            .then(|| (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
        Some(Self { mean, std })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationRun {
    pub seed: u64,
    pub tau: f64,
    pub report: EvalReport,
    /// False positives from the synthetic shift onward.
    pub post_shift_fp: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationRow {
    pub variant: String,
    pub detrend: bool,
    pub adapt: bool,
    pub f1: Option<MeanStd>,
    pub f1_pa: Option<MeanStd>,
    pub auroc: Option<MeanStd>,
    pub auprc: Option<MeanStd>,
    pub post_shift_fp: Option<MeanStd>,
    pub runs: Vec<AblationRun>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationTable {
    pub threshold: ThresholdSpec,
    pub seeds: Vec<u64>,
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn row(&self, variant: Variant) -> &AblationRow {
        self.rows
            .iter()
            .find(|r| r.detrend == variant.detrend && r.adapt == variant.adapt)
            .expect("every variant has a row")
    }

    /// Fixed-width text layout, one row per variant.
    pub fn to_text(&self) -> String {
        fn cell(m: &Option<MeanStd>) -> String {
            match m {
                Some(MeanStd { mean, std: Some(s) }) => format!("{mean:.4} ± {s:.4}"),
                Some(MeanStd { mean, std: None }) => format!("{mean:.4} ± -"),
                None => "-".to_string(),
            }
        }
        let mark = |b: bool| if b { "on" } else { "off" };
        let mut lines = vec![format!(
            "{:<8} {:<4} {:<4} {:<16} {:<16} {:<16} {:<16}",
            "variant", "DT", "TTA", "F1", "F1-PA", "AUROC", "AUPRC"
        )];
        for r in &self.rows {
            lines.push(format!(
                "{:<8} {:<4} {:<4} {:<16} {:<16} {:<16} {:<16}",
                r.variant,
                mark(r.detrend),
                mark(r.adapt),
                cell(&r.f1),
                cell(&r.f1_pa),
                cell(&r.auroc),
                cell(&r.auprc),
            ));
        }
        lines
            .iter()
            .map(|l| format!("{}\n", l.trim_end()))
            .collect()
    }
}

/// Runs every variant for every seed without writing files.
pub fn ablation_table(cfg: &RunConfig) -> Result<AblationTable> {
    if cfg.seeds.is_empty() {
        bail!("no seeds to run");
    }
    let data = load_data(cfg, true)?;
    let test = data
        .test
        .as_ref()
        .expect("load_data checked the test split");
    let Some(labels) = test.labels() else {
        bail!("ablation needs labeled test data");
    };

    let mut runs: Vec<Vec<AblationRun>> = vec![Vec::new(); Variant::ALL.len()];
    for &seed in &cfg.seeds {
        let outcome = train_model(cfg, &data.train, seed)?;
        let tau = stream_threshold(cfg.threshold, &outcome.flat_scores())?;
        for (k, &variant) in Variant::ALL.iter().enumerate() {
            let stream = run_variant(cfg, outcome.model.clone(), &data.train, test, tau, variant)
                .with_context(|| format!("variant {variant}, seed {seed}"))?;
            let labels = &labels[..stream.len()];
            let report = EvalReport::from_predictions(
                &stream.scores,
                &stream.preds,
                labels,
                tau,
                cfg.threshold,
            )?;
            runs[k].push(AblationRun {
                seed,
                tau,
                report,
                post_shift_fp: data
                    .shift_at
                    .map(|s| post_shift_false_positives(&stream.preds, labels, s)),
            });
        }
    }

    let rows = Variant::ALL
        .iter()
        .zip(runs)
        .map(|(variant, runs)| AblationRow {
            variant: variant.to_string(),
            detrend: variant.detrend,
            adapt: variant.adapt,
            f1: MeanStd::of(runs.iter().map(|r| Some(r.report.f1))),
            f1_pa: MeanStd::of(runs.iter().map(|r| Some(r.report.f1_pa))),
            auroc: MeanStd::of(runs.iter().map(|r| r.report.auroc)),
            auprc: MeanStd::of(runs.iter().map(|r| r.report.auprc)),
            post_shift_fp: MeanStd::of(runs.iter().map(|r| r.post_shift_fp.map(|c| c as f64))),
            runs,
        })
        .collect();
    Ok(AblationTable {
        threshold: cfg.threshold,
        seeds: cfg.seeds.clone(),
        rows,
    })
}

pub fn ablate(cfg: &RunConfig) -> Result<AblationTable> {
    let table = ablation_table(cfg)?;
    prepare_out(cfg)?;
    write_json(&cfg.out.join("ablation.json"), &table)?;
    fs::write(cfg.out.join("ablation.txt"), table.to_text())?;
    cfg.save(&cfg.out.join("config.toml"))?;
    Ok(table)
}

/// Writes `train.csv` and `test.csv`; only the test split carries labels.
pub fn synth(cfg: &RunConfig) -> Result<(PathBuf, PathBuf)> {
    let (train, test) = tsad_core::generate_synthetic::<f64>(&cfg.synthetic_spec())?;
    prepare_out(cfg)?;
    let paths = (cfg.out.join("train.csv"), cfg.out.join("test.csv"));
    write_csv(&paths.0, &train)?;
    write_csv(&paths.1, &test)?;
    Ok(paths)
}
