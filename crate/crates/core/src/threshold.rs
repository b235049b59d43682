//! Decision thresholds: train-score percentiles and the F1-oracle.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::metrics::{confusion, prf1, ConfusionCounts};
use crate::scalar::Scalar;

/// How the anomaly threshold is chosen.
///
/// Text form: `q99`, `q99.9`, `oracle`, `fixed:3.25`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdSpec {
    /// p-th percentile of training scores, `p` in (0, 100].
    TrainPercentile(f64),
    /// F1-maximizing threshold on labeled test scores; analysis only.
    Oracle,
    Fixed(f64),
}

impl Default for ThresholdSpec {
    fn default() -> Self {
        ThresholdSpec::TrainPercentile(99.0)
    }
}

impl ThresholdSpec {
    /// Resolves to a concrete threshold. `train_scores` feeds percentile
    /// specs; `test` (scores and labels) feeds the oracle.
    pub fn resolve<T: Scalar>(
        &self,
        train_scores: Option<&[T]>,
        test: Option<(&[T], &[bool])>,
    ) -> Result<T> {
        match *self {
            ThresholdSpec::TrainPercentile(p) => {
                let scores = train_scores
                    .ok_or_else(|| Error::invalid("percentile threshold needs train scores"))?;
                percentile_threshold(scores, p)
            }
            ThresholdSpec::Oracle => {
                let (scores, labels) =
                    test.ok_or_else(|| Error::invalid("oracle threshold needs labeled scores"))?;
                Ok(oracle_threshold(scores, labels)?.0)
            }
            ThresholdSpec::Fixed(v) => Ok(T::lit(v)),
        }
    }
}

impl fmt::Display for ThresholdSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdSpec::TrainPercentile(p) => write!(f, "q{p}"),
            ThresholdSpec::Oracle => f.write_str("oracle"),
            ThresholdSpec::Fixed(v) => write!(f, "fixed:{v}"),
        }
    }
}

impl FromStr for ThresholdSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("oracle") {
            return Ok(ThresholdSpec::Oracle);
        }
        if let Some(v) = s.strip_prefix("fixed:") {
            let v: f64 = v
                .parse()
                .map_err(|_| Error::invalid(format!("bad fixed threshold {v:?}")))?;
            if !v.is_finite() {
                return Err(Error::invalid("fixed threshold must be finite"));
            }
            return Ok(ThresholdSpec::Fixed(v));
        }
        if let Some(p) = s.strip_prefix('q').or_else(|| s.strip_prefix('Q')) {
            let p: f64 = p
                .parse()
                .map_err(|_| Error::invalid(format!("bad percentile {p:?}")))?;
            if !(p > 0.0 && p <= 100.0) {
                return Err(Error::invalid(format!("percentile {p} outside (0, 100]")));
            }
            return Ok(ThresholdSpec::TrainPercentile(p));
        }
        Err(Error::invalid(format!(
            "threshold {s:?}: expected qP, oracle or fixed:X"
        )))
    }
}

impl Serialize for ThresholdSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ThresholdSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn sort_ascending<T: Scalar>(xs: &mut [T]) {
    xs.sort_by(|a, b| a.partial_cmp(b).expect("scores are finite"));
}

/// Nearest-rank percentile: element `ceil(p/100 * n) - 1` of the sorted
/// scores.
pub fn percentile_threshold<T: Scalar>(scores: &[T], p: f64) -> Result<T> {
    if scores.is_empty() {
        return Err(Error::invalid("percentile of an empty score set"));
    }
    if !(p > 0.0 && p <= 100.0) {
        return Err(Error::invalid(format!("percentile {p} outside (0, 100]")));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("train scores".into()));
    }
    let mut sorted = scores.to_vec();
    sort_ascending(&mut sorted);
    let exact = p / 100.0 * sorted.len() as f64;
    // Decimal percentiles such as 90.1 are not representable; a product
    // within rounding error of an integer counts as that integer.
    let nearest = exact.round();
    let rank = if (exact - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        exact.ceil()
    } as usize;
    Ok(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Exhaustive F1-maximizing threshold.
///
/// Candidates are `-inf`, the midpoints between consecutive distinct scores,
/// and `+inf`; prediction is `score > tau`. Ties resolve to the smallest
/// threshold. Returns `(tau, best_f1)`.
pub fn oracle_threshold<T: Scalar>(scores: &[T], labels: &[bool]) -> Result<(T, T)> {
    if scores.len() != labels.len() {
        return Err(Error::shape("labels", scores.len(), labels.len()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClass);
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores".into()));
    }
    let mut pairs: Vec<(T, bool)> = scores.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));

    // Walking candidates upward: at each step everything strictly above the
    // candidate is predicted positive.
    let mut tp = positives;
    let mut fp = labels.len() - positives;
    let neg = labels.len() - positives;
    let f1_of = |tp: usize, fp: usize| -> T {
        let c = ConfusionCounts {
            tn: neg - fp,
            fp,
            fn_: positives - tp,
            tp,
        };
        T::lit(prf1(&c).f1)
    };
    let mut best_tau = T::neg_infinity();
    let mut best_f1 = f1_of(tp, fp);

    let mut i = 0;
    while i < pairs.len() {
        let value = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == value {
            if pairs[i].1 {
                tp -= 1;
            } else {
                fp -= 1;
            }
            i += 1;
        }
        let tau = if i < pairs.len() {
            midpoint(value, pairs[i].0)
        } else {
            T::infinity()
        };
        let f1 = f1_of(tp, fp);
        if f1 > best_f1 {
            best_f1 = f1;
            best_tau = tau;
        }
    }
    Ok((best_tau, best_f1))
}

/// A value `m` with `lo <= m < hi`, as close to the midpoint as rounding
/// allows.
fn midpoint<T: Scalar>(lo: T, hi: T) -> T {
    let m = lo + (hi - lo) / T::lit(2.0);
    if m >= hi || !m.is_finite() {
        lo
    } else {
        m
    }
}

/// F1 of `score > tau` predictions; shared by tests and reports.
pub fn f1_at<T: Scalar>(scores: &[T], labels: &[bool], tau: T) -> Result<T> {
    let preds: Vec<bool> = scores.iter().map(|&s| s > tau).collect();
    Ok(T::lit(prf1(&confusion(&preds, labels)?).f1))
}
