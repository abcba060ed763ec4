//! Tabular regression data: CSV ingestion, one-hot encoding, min-max
//! scaling and seeded train/test splitting.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl Column {
    fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

/// A parsed CSV file, stored column-wise. Every column has the same length.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    names: Vec<String>,
    columns: Vec<Column>,
}

impl RawTable {
    pub fn new(names: Vec<String>, columns: Vec<Column>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::DimensionMismatch {
                expected: names.len(),
                found: columns.len(),
            });
        }
        let rows = columns.first().map_or(0, Column::len);
        if rows == 0 {
            return Err(Error::NoRows);
        }
        if let Some(bad) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch {
                expected: rows,
                found: bad.len(),
            });
        }
        Ok(Self { names, columns })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Column::len)
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn kinds(&self) -> Vec<ColumnKind> {
        self.columns
            .iter()
            .map(|c| match c {
                Column::Numeric(_) => ColumnKind::Numeric,
                Column::Categorical(_) => ColumnKind::Categorical,
            })
            .collect()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::ColumnNotFound(name.to_string()))
    }

    /// Renames all columns; used for header-less files with a known schema.
    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.names.len() {
            return Err(Error::DimensionMismatch {
                expected: self.names.len(),
                found: names.len(),
            });
        }
        self.names = names;
        Ok(self)
    }
}

#[derive(Clone, Debug)]
pub struct CsvOptions {
    pub header: bool,
    /// `None` sniffs `;` versus `,` from the first line.
    pub delimiter: Option<u8>,
    /// Columns forced to categorical. When `None`, a column is categorical
    /// iff some cell fails to parse as a number; otherwise every column not
    /// listed must be numeric.
    pub categorical: Option<Vec<String>>,
    /// Overrides the header (or the generated `col{i}` names).
    pub names: Option<Vec<String>>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            header: true,
            delimiter: None,
            categorical: None,
            names: None,
        }
    }
}

/// Loads a CSV file, inferring column kinds.
pub fn load_csv(path: impl AsRef<Path>, header: bool) -> Result<RawTable> {
    load_csv_with(
        path,
        &CsvOptions {
            header,
            ..CsvOptions::default()
        },
    )
}

pub fn load_csv_with(path: impl AsRef<Path>, options: &CsvOptions) -> Result<RawTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, options)
}

/// Row numbers in errors are 1-based file lines; columns are 0-based.
pub fn parse_csv(text: &str, options: &CsvOptions) -> Result<RawTable> {
    let delimiter = options.delimiter.unwrap_or_else(|| {
        let first = text.lines().next().unwrap_or("");
        if first.contains(';') && !first.contains(',') {
            b';'
        } else {
            b','
        }
    });
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut names: Option<Vec<String>> = None;
    let mut cells: Vec<Vec<String>> = Vec::new();
    let mut lines: Vec<usize> = Vec::new();
    let mut width = None;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::Ragged {
                row: line,
                expected,
                found: record.len(),
            });
        }
        if options.header && names.is_none() {
            names = Some(record.iter().map(str::to_string).collect());
            continue;
        }
        cells.push(record.iter().map(str::to_string).collect());
        lines.push(line);
    }
    let width = width.ok_or(Error::NoRows)?;
    if cells.is_empty() {
        return Err(Error::NoRows);
    }
    let names = match &options.names {
        Some(given) if given.len() != width => {
            return Err(Error::DimensionMismatch {
                expected: width,
                found: given.len(),
            })
        }
        Some(given) => given.clone(),
        None => names.unwrap_or_else(|| (0..width).map(|c| format!("col{c}")).collect()),
    };

    let mut columns = Vec::with_capacity(width);
    for c in 0..width {
        let forced = options
            .categorical
            .as_ref()
            .map(|cats| cats.iter().any(|n| n == &names[c]));
        let parsed: Vec<Option<f64>> = cells.iter().map(|row| row[c].parse::<f64>().ok()).collect();
        let numeric = match forced {
            Some(true) => false,
            Some(false) => true,
            None => parsed.iter().all(Option::is_some),
        };
        if numeric {
            let mut values = Vec::with_capacity(cells.len());
            for (r, v) in parsed.into_iter().enumerate() {
                let v = v.ok_or_else(|| Error::NotNumeric {
                    row: lines[r],
                    column: c,
                    value: cells[r][c].clone(),
                })?;
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        row: lines[r],
                        column: c,
                    });
                }
                values.push(v);
            }
            columns.push(Column::Numeric(values));
        } else {
            columns.push(Column::Categorical(
                cells.iter().map(|row| row[c].clone()).collect(),
            ));
        }
    }
    RawTable::new(names, columns)
}

/// Replaces a categorical column by one indicator column per distinct
/// category (sorted), inserted where the original column was.
pub fn encode_categorical(table: &RawTable, column: &str) -> Result<RawTable> {
    let idx = table.column_index(column)?;
    let values = match &table.columns[idx] {
        Column::Categorical(v) => v,
        Column::Numeric(_) => return Err(Error::ColumnNotCategorical(column.to_string())),
    };
    let categories: BTreeSet<&str> = values.iter().map(String::as_str).collect();

    let mut names = Vec::with_capacity(table.n_columns() + categories.len());
    let mut columns = Vec::with_capacity(names.capacity());
    for (i, (name, col)) in table.names.iter().zip(&table.columns).enumerate() {
        if i != idx {
            names.push(name.clone());
            columns.push(col.clone());
            continue;
        }
        for cat in &categories {
            names.push(format!("{column}={cat}"));
            columns.push(Column::Numeric(
                values
                    .iter()
                    .map(|v| if v == cat { 1.0 } else { 0.0 })
                    .collect(),
            ));
        }
    }
    RawTable::new(names, columns)
}

/// Features and a scalar regression target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset<T> {
    features: Vec<T>,
    targets: Vec<T>,
    feature_names: Vec<String>,
}

impl<T: Scalar> Dataset<T> {
    /// `features` holds one row per target.
    pub fn new(features: Vec<Vec<T>>, targets: Vec<T>, feature_names: Vec<String>) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::NoRows);
        }
        if features.len() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: targets.len(),
                found: features.len(),
            });
        }
        let d = feature_names.len();
        if d == 0 {
            return Err(Error::InvalidConfig("dataset needs at least one feature".into()));
        }
        let mut flat = Vec::with_capacity(d * targets.len());
        for (r, row) in features.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: row.len(),
                });
            }
            if let Some(c) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row: r, column: c });
            }
            flat.extend_from_slice(row);
        }
        if let Some(r) = targets.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: r, column: d });
        }
        Ok(Self {
            features: flat,
            targets,
            feature_names,
        })
    }

    /// Features default to names `x0..`.
    pub fn from_rows(features: Vec<Vec<T>>, targets: Vec<T>) -> Result<Self> {
        let d = features.first().map_or(0, Vec::len);
        let names = (0..d).map(|i| format!("x{i}")).collect();
        Self::new(features, targets, names)
    }

    pub fn n_samples(&self) -> usize {
        self.targets.len()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, i: usize) -> &[T] {
        let d = self.dim();
        &self.features[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> + '_ {
        self.features.chunks_exact(self.dim())
    }

    pub fn target(&self, i: usize) -> T {
        self.targets[i]
    }

    pub fn targets(&self) -> &[T] {
        &self.targets
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature(&self, i: usize, j: usize) -> T {
        self.features[i * self.dim() + j]
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let d = self.dim();
        let mut features = Vec::with_capacity(indices.len() * d);
        let mut targets = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            targets.push(self.targets[i]);
        }
        Self {
            features,
            targets,
            feature_names: self.feature_names.clone(),
        }
    }

    /// First `n` rows.
    pub fn head(&self, n: usize) -> Self {
        let idx: Vec<usize> = (0..n.min(self.n_samples())).collect();
        self.select(&idx)
    }

    pub fn cast<U: Scalar>(&self) -> Dataset<U> {
        let conv = |v: &T| U::lit(v.as_f64());
        Dataset {
            features: self.features.iter().map(conv).collect(),
            targets: self.targets.iter().map(conv).collect(),
            feature_names: self.feature_names.clone(),
        }
    }
}

impl Dataset<f64> {
    /// Builds a dataset from a table whose non-target columns are all numeric.
    pub fn from_table(table: &RawTable, target: &str) -> Result<Self> {
        let t = table.column_index(target)?;
        let targets = match &table.columns[t] {
            Column::Numeric(v) => v.clone(),
            Column::Categorical(_) => return Err(Error::ColumnNotNumeric(target.to_string())),
        };
        let mut feature_cols = Vec::new();
        let mut names = Vec::new();
        for (i, (name, col)) in table.names.iter().zip(&table.columns).enumerate() {
            if i == t {
                continue;
            }
            match col {
                Column::Numeric(v) => feature_cols.push(v),
                Column::Categorical(_) => return Err(Error::ColumnNotNumeric(name.clone())),
            }
            names.push(name.clone());
        }
        let rows = (0..targets.len())
            .map(|r| feature_cols.iter().map(|c| c[r]).collect())
            .collect();
        Dataset::new(rows, targets, names)
    }
}

/// Per-column min-max statistics for features and target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub feature_min: Vec<f64>,
    pub feature_max: Vec<f64>,
    pub target_min: f64,
    pub target_max: f64,
    /// Constant columns that were mapped to 0.
    pub warnings: Vec<String>,
}

fn scale(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.0
    }
}

fn unscale(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        v * (hi - lo) + lo
    } else {
        lo
    }
}

impl Scaler {
    pub fn fit<T: Scalar>(data: &Dataset<T>) -> Self {
        let d = data.dim();
        let mut feature_min = vec![f64::INFINITY; d];
        let mut feature_max = vec![f64::NEG_INFINITY; d];
        for row in data.rows() {
            for (j, v) in row.iter().enumerate() {
                let v = v.as_f64();
                feature_min[j] = feature_min[j].min(v);
                feature_max[j] = feature_max[j].max(v);
            }
        }
        let ts = data.targets().iter().map(|v| v.as_f64());
        let target_min = ts.clone().fold(f64::INFINITY, f64::min);
        let target_max = ts.fold(f64::NEG_INFINITY, f64::max);
        let mut warnings = Vec::new();
        for (j, name) in data.feature_names().iter().enumerate() {
            if feature_max[j] == feature_min[j] {
                warnings.push(format!("constant feature column {name:?} mapped to 0"));
            }
        }
        if target_max == target_min {
            warnings.push("constant target mapped to 0".to_string());
        }
        Self {
            feature_min,
            feature_max,
            target_min,
            target_max,
            warnings,
        }
    }

    pub fn dim(&self) -> usize {
        self.feature_min.len()
    }

    pub fn transform<T: Scalar>(&self, data: &Dataset<T>) -> Result<Dataset<T>> {
        if data.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: data.dim(),
            });
        }
        let d = self.dim();
        let features = data
            .features
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let j = k % d;
                T::lit(scale(v.as_f64(), self.feature_min[j], self.feature_max[j]))
            })
            .collect();
        let targets = data
            .targets
            .iter()
            .map(|v| T::lit(scale(v.as_f64(), self.target_min, self.target_max)))
            .collect();
        Ok(Dataset {
            features,
            targets,
            feature_names: data.feature_names.clone(),
        })
    }

    pub fn inverse_transform<T: Scalar>(&self, data: &Dataset<T>) -> Result<Dataset<T>> {
        if data.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: data.dim(),
            });
        }
        let d = self.dim();
        let features = data
            .features
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let j = k % d;
                T::lit(unscale(v.as_f64(), self.feature_min[j], self.feature_max[j]))
            })
            .collect();
        let targets = data
            .targets
            .iter()
            .map(|&v| self.inverse_target(v))
            .collect();
        Ok(Dataset {
            features,
            targets,
            feature_names: data.feature_names.clone(),
        })
    }

    pub fn inverse_target<T: Scalar>(&self, v: T) -> T {
        T::lit(unscale(v.as_f64(), self.target_min, self.target_max))
    }
}

/// Min-max normalizes `data`. Without a scaler one is fitted on `data`;
/// with one, `data` is only transformed and may leave `[0, 1]`.
pub fn normalize<T: Scalar>(data: &Dataset<T>, scaler: Option<&Scaler>) -> Result<(Dataset<T>, Scaler)> {
    let scaler = match scaler {
        Some(s) => s.clone(),
        None => Scaler::fit(data),
    };
    Ok((scaler.transform(data)?, scaler))
}

/// Shuffles rows with a seeded generator and splits off the first
/// `floor(train_fraction * N)` as the training part.
pub fn split_shuffle<T: Scalar>(
    data: &Dataset<T>,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset<T>, Dataset<T>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidFraction(train_fraction));
    }
    let n = data.n_samples();
    let n_train = (train_fraction * n as f64).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::EmptyPartition { samples: n });
    }
    let order = shuffled_indices(n, seed);
    Ok((data.select(&order[..n_train]), data.select(&order[n_train..])))
}

pub fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}

/// Where a dataset lives and how to read it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub path: PathBuf,
    pub target: String,
    #[serde(default)]
    pub categorical: Vec<String>,
    #[serde(default = "yes")]
    pub header: bool,
    /// Column names for header-less files.
    #[serde(default)]
    pub columns: Option<Vec<String>>,
    #[serde(default)]
    pub delimiter: Option<char>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_split")]
    pub split_fraction: f64,
}

fn yes() -> bool {
    true
}

fn default_split() -> f64 {
    0.7
}

impl DatasetManifest {
    /// UCI Abalone (`abalone.data`): no header, sex is categorical, rings
    /// is the target.
    pub fn abalone(path: impl Into<PathBuf>) -> Self {
        let columns = [
            "Sex",
            "Length",
            "Diameter",
            "Height",
            "Whole weight",
            "Shucked weight",
            "Viscera weight",
            "Shell weight",
            "Rings",
        ];
        Self {
            path: path.into(),
            target: "Rings".into(),
            categorical: vec!["Sex".into()],
            header: false,
            columns: Some(columns.iter().map(|s| s.to_string()).collect()),
            delimiter: Some(','),
            seed: 0,
            split_fraction: 0.7,
        }
    }

    /// UCI Wine Quality CSV (either colour); quality is the target.
    pub fn wine_quality(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            target: "quality".into(),
            categorical: Vec::new(),
            header: true,
            columns: None,
            delimiter: None,
            seed: 0,
            split_fraction: 0.7,
        }
    }

    /// Reads, one-hot encodes the categorical columns, and extracts features
    /// and target.
    pub fn load(&self) -> Result<Dataset<f64>> {
        self.load_relative_to(Path::new("."))
    }

    /// Like [`load`](Self::load), resolving a relative `path` against `base`.
    pub fn load_relative_to(&self, base: &Path) -> Result<Dataset<f64>> {
        let path = if self.path.is_absolute() {
            self.path.clone()
        } else {
            base.join(&self.path)
        };
        let options = CsvOptions {
            header: self.header,
            delimiter: self.delimiter.map(|c| c as u8),
            categorical: Some(self.categorical.clone()),
            names: self.columns.clone(),
        };
        let mut table = load_csv_with(&path, &options)?;
        for cat in &self.categorical {
            table = encode_categorical(&table, cat)?;
        }
        Dataset::from_table(&table, &self.target)
    }
}
