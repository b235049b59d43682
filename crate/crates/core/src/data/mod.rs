//! Time-series containers, ingestion, scaling and windowing.

mod csv;
mod scaler;
mod synthetic;

pub use self::csv::{load_csv, read_csv, write_csv};
pub use scaler::Scaler;
pub use synthetic::{generate_synthetic, SyntheticSpec};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// N timesteps by F features, with optional per-timestep anomaly labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset<T> {
    values: Matrix<T>,
    labels: Option<Vec<bool>>,
    feature_names: Vec<String>,
}

impl<T: Scalar> TimeSeriesDataset<T> {
    pub fn new(
        values: Matrix<T>,
        labels: Option<Vec<bool>>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if values.rows() == 0 || values.cols() == 0 {
            return Err(Error::invalid(
                "dataset needs at least one timestep and one feature",
            ));
        }
        if !values.all_finite() {
            return Err(Error::NonFinite("dataset values".into()));
        }
        if feature_names.len() != values.cols() {
            return Err(Error::shape(
                "feature names",
                values.cols(),
                feature_names.len(),
            ));
        }
        if let Some(l) = &labels {
            if l.len() != values.rows() {
                return Err(Error::shape("label vector", values.rows(), l.len()));
            }
        }
        Ok(Self {
            values,
            labels,
            feature_names,
        })
    }

    /// Dataset with generated feature names `f0, f1, ...`.
    pub fn unnamed(values: Matrix<T>, labels: Option<Vec<bool>>) -> Result<Self> {
        let names = (0..values.cols()).map(|j| format!("f{j}")).collect();
        Self::new(values, labels, names)
    }

    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    pub fn features(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &Matrix<T> {
        &self.values
    }

    pub fn labels(&self) -> Option<&[bool]> {
        self.labels.as_deref()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Timesteps `[start, end)` as a new dataset.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::invalid(format!(
                "slice [{start}, {end}) out of range for {} timesteps",
                self.len()
            )));
        }
        Ok(Self {
            values: self.values.slice_rows(start, end),
            labels: self.labels.as_ref().map(|l| l[start..end].to_vec()),
            feature_names: self.feature_names.clone(),
        })
    }

    /// Adds `offset` to every value from timestep `from` onward.
    pub fn with_level_shift(&self, from: usize, offset: T) -> Self {
        let mut out = self.clone();
        for i in from..out.len() {
            out.values.row_mut(i).iter_mut().for_each(|v| *v += offset);
        }
        out
    }

    pub(crate) fn map_values(&self, values: Matrix<T>) -> Self {
        Self {
            values,
            labels: self.labels.clone(),
            feature_names: self.feature_names.clone(),
        }
    }
}

/// `w` contiguous timesteps ending at `end_index` (inclusive).
#[derive(Debug, Clone, PartialEq)]
pub struct Window<T> {
    pub data: Matrix<T>,
    pub end_index: usize,
}

impl<T: Scalar> Window<T> {
    pub fn new(data: Matrix<T>, end_index: usize) -> Self {
        Self { data, end_index }
    }

    pub fn len(&self) -> usize {
        self.data.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.rows() == 0
    }

    pub fn features(&self) -> usize {
        self.data.cols()
    }

    /// First timestep covered by the window.
    pub fn start_index(&self) -> usize {
        self.end_index + 1 - self.len()
    }
}

/// Slides a window of `w` rows over `ds` with hop `stride`.
///
/// Windows end at `w-1, w-1+stride, ...`; a trailing remainder shorter than
/// `w` is dropped.
pub fn make_windows<T: Scalar>(
    ds: &TimeSeriesDataset<T>,
    w: usize,
    stride: usize,
) -> Result<Vec<Window<T>>> {
    if w == 0 || stride == 0 {
        return Err(Error::invalid("window and stride must be at least 1"));
    }
    if w > ds.len() {
        return Err(Error::invalid(format!(
            "window {w} longer than series of {} timesteps",
            ds.len()
        )));
    }
    let count = (ds.len() - w) / stride + 1;
    Ok((0..count)
        .map(|k| {
            let start = k * stride;
            Window::new(ds.values.slice_rows(start, start + w), start + w - 1)
        })
        .collect())
}
