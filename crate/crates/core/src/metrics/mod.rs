//! Detection metrics: confusion counts, F1 with and without point
//! adjustment, ranking areas and a histogram KL shift diagnostic.

mod ranking;
mod shift;

pub use ranking::{auprc, auroc};
pub use shift::{kld_shift, KldReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::threshold::ThresholdSpec;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tp: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tn + self.fp + self.fn_ + self.tp
    }
}

pub fn confusion(preds: &[bool], labels: &[bool]) -> Result<ConfusionCounts> {
    if preds.len() != labels.len() {
        return Err(Error::shape("labels", preds.len(), labels.len()));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &l) in preds.iter().zip(labels) {
        match (p, l) {
            (false, false) => c.tn += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (true, true) => c.tp += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

/// Precision, recall, F1 and accuracy; every 0/0 ratio is reported as 0,
/// except accuracy of an empty evaluation which is 1.
pub fn prf1(c: &ConfusionCounts) -> Prf1 {
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let accuracy = if c.total() == 0 {
        1.0
    } else {
        ratio(c.tp + c.tn, c.total())
    };
    Prf1 {
        precision,
        recall,
        f1,
        accuracy,
    }
}

/// Marks every timestep of a labeled anomaly segment as detected when any
/// timestep inside it is predicted anomalous. Predictions outside labeled
/// segments are left alone.
pub fn point_adjust(preds: &[bool], labels: &[bool]) -> Result<Vec<bool>> {
    if preds.len() != labels.len() {
        return Err(Error::shape("labels", preds.len(), labels.len()));
    }
    let mut out = preds.to_vec();
    let mut i = 0;
    while i < labels.len() {
        if !labels[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < labels.len() && labels[i] {
            i += 1;
        }
        if preds[start..i].iter().any(|&p| p) {
            out[start..i].iter_mut().for_each(|p| *p = true);
        }
    }
    Ok(out)
}

/// One row of a results table. Serializes with the column names
/// `Acc, Prec, Rec, F1, AUROC, AUPRC, TN, FP, FN, TP` plus `+`-suffixed
/// point-adjusted variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(rename = "Thr")]
    pub threshold_spec: ThresholdSpec,
    pub tau: f64,
    #[serde(rename = "Acc")]
    pub accuracy: f64,
    #[serde(rename = "Prec")]
    pub precision: f64,
    #[serde(rename = "Rec")]
    pub recall: f64,
    #[serde(rename = "F1")]
    pub f1: f64,
    #[serde(rename = "AUROC")]
    pub auroc: Option<f64>,
    #[serde(rename = "AUPRC")]
    pub auprc: Option<f64>,
    #[serde(rename = "TN")]
    pub tn: usize,
    #[serde(rename = "FP")]
    pub fp: usize,
    #[serde(rename = "FN")]
    pub fn_: usize,
    #[serde(rename = "TP")]
    pub tp: usize,
    #[serde(rename = "Acc+")]
    pub accuracy_pa: f64,
    #[serde(rename = "Prec+")]
    pub precision_pa: f64,
    #[serde(rename = "Rec+")]
    pub recall_pa: f64,
    #[serde(rename = "F1+")]
    pub f1_pa: f64,
    #[serde(rename = "TN+")]
    pub tn_pa: usize,
    #[serde(rename = "FP+")]
    pub fp_pa: usize,
    #[serde(rename = "FN+")]
    pub fn_pa: usize,
    #[serde(rename = "TP+")]
    pub tp_pa: usize,
}

impl EvalReport {
    /// Evaluates `score > tau` predictions against `labels`.
    ///
    /// AUROC needs both classes and AUPRC at least one positive; when that
    /// fails the field is `None`.
    pub fn evaluate<T: Scalar>(
        scores: &[T],
        labels: &[bool],
        tau: T,
        threshold_spec: ThresholdSpec,
    ) -> Result<Self> {
        let preds: Vec<bool> = scores.iter().map(|&s| s > tau).collect();
        Self::from_predictions(scores, &preds, labels, tau, threshold_spec)
    }

    /// Like [`evaluate`](Self::evaluate) with predictions supplied by the
    /// caller (e.g. decided while streaming).
    pub fn from_predictions<T: Scalar>(
        scores: &[T],
        preds: &[bool],
        labels: &[bool],
        tau: T,
        threshold_spec: ThresholdSpec,
    ) -> Result<Self> {
        if scores.len() != preds.len() {
            return Err(Error::shape("predictions", scores.len(), preds.len()));
        }
        let counts = confusion(preds, labels)?;
        let adjusted = point_adjust(preds, labels)?;
        let counts_pa = confusion(&adjusted, labels)?;
        let m = prf1(&counts);
        let pa = prf1(&counts_pa);
        Ok(Self {
            threshold_spec,
            tau: tau.to_f64_lossy(),
            accuracy: m.accuracy,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            auroc: auroc(scores, labels).ok(),
            auprc: auprc(scores, labels).ok(),
            tn: counts.tn,
            fp: counts.fp,
            fn_: counts.fn_,
            tp: counts.tp,
            accuracy_pa: pa.accuracy,
            precision_pa: pa.precision,
            recall_pa: pa.recall,
            f1_pa: pa.f1,
            tn_pa: counts_pa.tn,
            fp_pa: counts_pa.fp,
            fn_pa: counts_pa.fn_,
            tp_pa: counts_pa.tp,
        })
    }

    pub fn counts(&self) -> ConfusionCounts {
        ConfusionCounts {
            tn: self.tn,
            fp: self.fp,
            fn_: self.fn_,
            tp: self.tp,
        }
    }

    pub fn counts_pa(&self) -> ConfusionCounts {
        ConfusionCounts {
            tn: self.tn_pa,
            fp: self.fp_pa,
            fn_: self.fn_pa,
            tp: self.tp_pa,
        }
    }
}
