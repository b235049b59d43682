//! CSV files written and read by the commands.

use std::fs::File;
use std::path::Path;

use anyhow::{bail, Context, Result};
use tsad_core::{Dataset, Stream};

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// `timestep,score,prediction[,label],mu_<feature>...` with one row per
/// scored timestep. `mu` is the trend of the window that scored the row.
pub fn write_stream(path: &Path, stream: &Stream, test: &Dataset) -> Result<()> {
    let mut w = writer(path)?;
    let labels = test.labels();
    let mut header = vec!["timestep".to_string(), "score".into(), "prediction".into()];
    if labels.is_some() {
        header.push("label".into());
    }
    header.extend(test.feature_names().iter().map(|n| format!("mu_{n}")));
    w.write_record(&header)?;
    for t in 0..stream.len() {
        let mut rec = vec![
            t.to_string(),
            stream.scores[t].to_string(),
            flag(stream.preds[t]).to_string(),
        ];
        if let Some(labels) = labels {
            rec.push(flag(labels[t]).to_string());
        }
        rec.extend(
            stream.trend_trace[stream.window_of[t]]
                .iter()
                .map(f64::to_string),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `window,timestep,score` for every row of every training window.
pub fn write_train_scores(path: &Path, scores: &[f64], window: usize, stride: usize) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["window", "timestep", "score"])?;
    for (i, s) in scores.iter().enumerate() {
        let k = i / window;
        let t = k * stride + i % window;
        w.write_record([k.to_string(), t.to_string(), s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `percentile,tau` for Q90.0 through Q100.0 in steps of 0.1.
pub fn write_threshold_table(path: &Path, scores: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["percentile", "tau"])?;
    for k in 900..=1000u32 {
        let p = f64::from(k) / 10.0;
        let tau = tsad_core::percentile_threshold(scores, p)?;
        w.write_record([format!("{p:.1}"), tau.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns of a score file that `evaluate` understands.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    pub timesteps: Option<Vec<usize>>,
    pub scores: Vec<f64>,
    pub labels: Option<Vec<bool>>,
}

/// Reads a CSV with a `score` column and optional `timestep` and `label`
/// columns. Other columns are ignored.
pub fn read_score_table(path: &Path, label_column: &str) -> Result<ScoreTable> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let header = r.headers()?.clone();
    let find = |name: &str| header.iter().position(|h| h == name);
    let Some(score_col) = find("score") else {
        bail!("{}: no `score` column", path.display());
    };
    let time_col = find("timestep");
    let label_col = find(label_column);

    let mut table = ScoreTable {
        timesteps: time_col.map(|_| Vec::new()),
        labels: label_col.map(|_| Vec::new()),
        ..ScoreTable::default()
    };
    for (i, rec) in r.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: malformed csv", path.display()))?;
        let row = i + 2;
        let cell = |c: usize| rec.get(c).unwrap_or("");
        let score: f64 = cell(score_col).parse().with_context(|| {
            format!(
                "{}: row {row}: bad score {:?}",
                path.display(),
                cell(score_col)
            )
        })?;
        table.scores.push(score);
        if let (Some(c), Some(ts)) = (time_col, table.timesteps.as_mut()) {
            let t = cell(c).parse().with_context(|| {
                format!("{}: row {row}: bad timestep {:?}", path.display(), cell(c))
            })?;
            ts.push(t);
        }
        if let (Some(c), Some(ls)) = (label_col, table.labels.as_mut()) {
            ls.push(match cell(c) {
                "0" => false,
                "1" => true,
                v => bail!("{}: row {row}: label {v:?} is not 0 or 1", path.display()),
            });
        }
    }
    Ok(table)
}
