//! Series containers, time-delay embedding and the estimation/test partition.
//!
//! A univariate series `y_0, ..., y_{n-1}` is recast as a regression problem
//! where each target `y_t` is predicted from its `p` predecessors. Feature
//! rows store lags most-recent-first, so column 0 always holds `y_{t-1}`.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Shortest series accepted for embedding and splitting.
pub const MIN_SERIES_LEN: usize = 30;

/// Number of embedded rows that must survive an embedding.
pub const MIN_EMBEDDED_ROWS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("series '{id}' has {len} values, need at least {min}")]
    TooShort { id: String, len: usize, min: usize },

    #[error("series '{id}' has a non-finite value at index {index}")]
    NonFinite { id: String, index: usize },

    #[error("lag order p={p} out of range for series of length n={n} (need 1 <= p <= n - {MIN_EMBEDDED_ROWS})")]
    LagOutOfRange { p: usize, n: usize },

    #[error("degenerate partition: ratio {ratio} over {rows} rows leaves an empty side")]
    DegeneratePartition { ratio: f64, rows: usize },

    #[error("{path}: line {line}: {message}")]
    Csv {
        path: String,
        line: u64,
        message: String,
    },

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// An ordered univariate sequence of finite reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    id: String,
    values: Vec<f64>,
    source: Option<String>,
}

impl TimeSeries {
    pub fn new(id: impl Into<String>, values: Vec<f64>) -> Result<Self, DataError> {
        let id = id.into();
        if values.len() < MIN_SERIES_LEN {
            return Err(DataError::TooShort {
                id,
                len: values.len(),
                min: MIN_SERIES_LEN,
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFinite { id, index });
        }
        Ok(Self {
            id,
            values,
            source: None,
        })
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn source(&self) -> Option<&str> {
        self.source.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Population standard deviation of the values.
    pub fn std_dev(&self) -> f64 {
        std_dev(&self.values)
    }

    /// Returns a new series holding the first `len` values.
    pub fn head(&self, len: usize) -> Result<Self, DataError> {
        let mut out = TimeSeries::new(self.id.clone(), self.values[..len.min(self.len())].to_vec())?;
        out.source = self.source.clone();
        Ok(out)
    }

    /// Multiplies every value by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, DataError> {
        let mut out = TimeSeries::new(
            self.id.clone(),
            self.values.iter().map(|v| v * factor).collect(),
        )?;
        out.source = self.source.clone();
        Ok(out)
    }
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub(crate) fn std_dev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Dense row-major matrix of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix rows");
        Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix shape mismatch");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Gathers the given rows, in order, into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// The `(X, y)` regression view of a series at lag order `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedDataset {
    features: Matrix,
    targets: Vec<f64>,
    p: usize,
    origin: Vec<usize>,
}

impl EmbeddedDataset {
    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Time index in the source series of each row's target.
    pub fn origin(&self) -> &[usize] {
        &self.origin
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Restricts the dataset to the given rows, keeping their order.
    pub fn select(&self, indices: &[usize]) -> EmbeddedDataset {
        EmbeddedDataset {
            features: self.features.select_rows(indices),
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
            p: self.p,
            origin: indices.iter().map(|&i| self.origin[i]).collect(),
        }
    }

    fn slice(&self, range: std::ops::Range<usize>) -> EmbeddedDataset {
        let indices: Vec<usize> = range.collect();
        self.select(&indices)
    }
}

/// Builds the lag matrix of `series` at order `p`.
///
/// Row `i` predicts `y_t` with `t = i + p`; column `j` holds `y_{t-1-j}`.
pub fn embed(series: &TimeSeries, p: usize) -> Result<EmbeddedDataset, DataError> {
    let y = series.values();
    let n = y.len();
    if p == 0 || p + MIN_EMBEDDED_ROWS > n {
        return Err(DataError::LagOutOfRange { p, n });
    }
    let rows = n - p;
    let mut data = Vec::with_capacity(rows * p);
    for t in p..n {
        data.extend((1..=p).map(|lag| y[t - lag]));
    }
    Ok(EmbeddedDataset {
        features: Matrix::from_vec(rows, p, data),
        targets: y[p..].to_vec(),
        p,
        origin: (p..n).collect(),
    })
}

/// Temporal split of embedded rows into an estimation and a test part.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub estimation: EmbeddedDataset,
    pub test: EmbeddedDataset,
    pub ratio: f64,
}

impl Partition {
    /// Number of rows in the estimation part; every test row index
    /// (in the coordinates of the unsplit dataset) is at least this.
    pub fn boundary(&self) -> usize {
        self.estimation.len()
    }
}

/// Splits at row `floor(ratio * N)` without shuffling.
/// `floor(fraction * count)`, absorbing the rounding error of decimal
/// fractions such as `0.7 * 90`.
pub fn fraction_floor(fraction: f64, count: usize) -> usize {
    (fraction * count as f64 + 1e-9).floor().max(0.0) as usize
}

pub fn partition(dataset: &EmbeddedDataset, ratio: f64) -> Result<Partition, DataError> {
    let rows = dataset.len();
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DataError::DegeneratePartition { ratio, rows });
    }
    let cut = fraction_floor(ratio, rows);
    if cut == 0 || cut >= rows {
        return Err(DataError::DegeneratePartition { ratio, rows });
    }
    Ok(Partition {
        estimation: dataset.slice(0..cut),
        test: dataset.slice(cut..rows),
        ratio,
    })
}

/// Writes a series as a single `value` column.
pub fn write_csv(series: &TimeSeries, path: &Path) -> Result<(), DataError> {
    let io = |message: String| DataError::Io {
        path: path.display().to_string(),
        message,
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| io(e.to_string()))?;
    w.write_record(["value"]).map_err(|e| io(e.to_string()))?;
    for v in series.values() {
        w.write_record([v.to_string()]).map_err(|e| io(e.to_string()))?;
    }
    w.flush().map_err(|e| io(e.to_string()))
}

/// Loads a single series from a CSV file with either a `value` column or
/// `timestamp,value` columns. The series id is the file stem.
pub fn load_csv(path: &Path) -> Result<TimeSeries, DataError> {
    let display = path.display().to_string();
    let mut raw = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut raw))
        .map_err(|e| DataError::Io {
            path: display.clone(),
            message: e.to_string(),
        })?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| display.clone());
    parse_csv(&id, &display, raw.as_bytes())
}

pub(crate) fn parse_csv(id: &str, path: &str, bytes: &[u8]) -> Result<TimeSeries, DataError> {
    let csv_err = |line: u64, message: String| DataError::Csv {
        path: path.to_string(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| csv_err(1, e.to_string()))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    let value_col = match names.as_slice() {
        ["value"] => 0,
        ["timestamp", "value"] => 1,
        _ => {
            return Err(csv_err(
                1,
                format!("expected header 'value' or 'timestamp,value', found '{}'", names.join(",")),
            ))
        }
    };

    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != names.len() {
            return Err(csv_err(
                line,
                format!("expected {} fields, found {}", names.len(), record.len()),
            ));
        }
        let field = &record[value_col];
        let v: f64 = field
            .parse()
            .map_err(|_| csv_err(line, format!("cannot parse value '{field}'")))?;
        if !v.is_finite() {
            return Err(csv_err(line, format!("non-finite value '{field}'")));
        }
        values.push(v);
    }
    Ok(TimeSeries::new(id, values)?.with_source(path))
}
