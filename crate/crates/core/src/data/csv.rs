use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Reads a comma-separated file with a mandatory header row.
///
/// With `label_column` set, that column is parsed as literal `0`/`1` and kept
/// out of the feature matrix; otherwise every column is a feature.
pub fn load_csv<T: Scalar>(
    path: impl AsRef<Path>,
    label_column: Option<&str>,
) -> Result<TimeSeriesDataset<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, label_column)
}

pub fn read_csv<T: Scalar, R: Read>(
    reader: R,
    label_column: Option<&str>,
) -> Result<TimeSeriesDataset<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();

    let label_idx = match label_column {
        Some(name) => Some(
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))?,
        ),
        None => None,
    };
    let feature_idx: Vec<usize> = (0..header.len())
        .filter(|&j| Some(j) != label_idx)
        .collect();

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0;
    for (k, record) in rdr.records().enumerate() {
        // header is line 1
        let row = k + 2;
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        if record.len() != header.len() {
            return Err(Error::Csv(format!(
                "row {row} has {} fields, header has {}",
                record.len(),
                header.len()
            )));
        }
        for &j in &feature_idx {
            let cell = &record[j];
            let v: T = cell
                .parse()
                .ok()
                .filter(|v: &T| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    row,
                    column: header[j].clone(),
                    value: cell.to_string(),
                })?;
            values.push(v);
        }
        if let Some(j) = label_idx {
            labels.push(match &record[j] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::Label {
                        row,
                        column: header[j].clone(),
                        value: other.to_string(),
                    })
                }
            });
        }
        rows += 1;
    }

    let names = feature_idx.iter().map(|&j| header[j].clone()).collect();
    let matrix = Matrix::from_vec(rows, feature_idx.len(), values)?;
    TimeSeriesDataset::new(matrix, label_idx.map(|_| labels), names)
}

/// Writes `ds` in the format `load_csv` reads; labels go to a trailing
/// `label` column. Floats use shortest round-trip formatting.
pub fn write_csv<T: Scalar>(path: impl AsRef<Path>, ds: &TimeSeriesDataset<T>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = String::new();
    out.push_str(&ds.feature_names().join(","));
    if ds.labels().is_some() {
        out.push_str(",label");
    }
    out.push('\n');
    for (i, row) in ds.values().row_iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        if let Some(labels) = ds.labels() {
            out.push_str(if labels[i] { ",1" } else { ",0" });
        }
        out.push('\n');
    }
    let mut file = File::create(path).map_err(io_err)?;
    file.write_all(out.as_bytes()).map_err(io_err)
}
