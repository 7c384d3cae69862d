//! Core tabular types: a dense numeric grid with an explicit missingness mask,
//! CSV ingestion, and dataset splitting.

mod csv_io;
mod split;

pub use csv_io::{load_csv, load_csv_with, load_labeled_csv, CsvOptions, DEFAULT_MISSING_TOKENS};
pub use split::{train_test_split, SplitSpec};

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("cell at row {row}, column {col} is not numeric: {token:?}")]
    UnparsableCell {
        row: usize,
        col: usize,
        token: String,
    },
    #[error("values and mask shapes differ: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),
    #[error("column names must match column count: {names} names for {cols} columns")]
    ColumnNameCount { names: usize, cols: usize },
    #[error("row ids must match row count: {ids} ids for {rows} rows")]
    RowIdCount { ids: usize, rows: usize },
    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),
    #[error("duplicate row id {0:?}")]
    DuplicateRowId(String),
    #[error("table has no data rows")]
    EmptyTable,
    #[error("unknown class label {0:?} (expected A, B or C)")]
    UnknownLabel(String),
    #[error("label cell at row {0} is missing")]
    MissingLabel(usize),
    #[error("no column named {0:?}")]
    NoSuchColumn(String),
    #[error("labels length {labels} does not match row count {rows}")]
    LabelCount { labels: usize, rows: usize },
    #[error("dataset features contain missing cells; labelled data must be fully observed")]
    IncompleteFeatures,
    #[error("split would leave an empty partition (n={n}, test_fraction={fraction})")]
    DegenerateSplit { n: usize, fraction: f64 },
    #[error("stratified split requires every class to have at least 2 members; class {0} has {1}")]
    TinyClass(ClassLabel, usize),
}

/// Pollution class alphabet, ordered from least to most polluted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    A,
    B,
    C,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 3] = [ClassLabel::A, ClassLabel::B, ClassLabel::C];

    pub fn index(self) -> usize {
        match self {
            ClassLabel::A => 0,
            ClassLabel::B => 1,
            ClassLabel::C => 2,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassLabel::A => write!(f, "A"),
            ClassLabel::B => write!(f, "B"),
            ClassLabel::C => write!(f, "C"),
        }
    }
}

impl FromStr for ClassLabel {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" => Ok(ClassLabel::A),
            "B" => Ok(ClassLabel::B),
            "C" => Ok(ClassLabel::C),
            other => Err(DataError::UnknownLabel(other.to_string())),
        }
    }
}

/// Numeric samples-by-features grid with an explicit missingness mask.
///
/// `mask[[r, c]] == true` means the cell is observed; the stored value of a
/// masked-out cell is never read. The matrix is immutable after construction;
/// all mutation happens by producing new matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Array2<f64>,
    mask: Array2<bool>,
    col_names: Vec<String>,
    row_ids: Vec<String>,
}

impl DataMatrix {
    pub fn new(
        values: Array2<f64>,
        mask: Array2<bool>,
        col_names: Vec<String>,
        row_ids: Vec<String>,
    ) -> Result<Self, DataError> {
        if values.dim() != mask.dim() {
            return Err(DataError::ShapeMismatch(values.dim(), mask.dim()));
        }
        let (rows, cols) = values.dim();
        if col_names.len() != cols {
            return Err(DataError::ColumnNameCount {
                names: col_names.len(),
                cols,
            });
        }
        if row_ids.len() != rows {
            return Err(DataError::RowIdCount {
                ids: row_ids.len(),
                rows,
            });
        }
        let mut seen = HashSet::new();
        for name in &col_names {
            if !seen.insert(name.as_str()) {
                return Err(DataError::DuplicateColumn(name.clone()));
            }
        }
        let mut seen = HashSet::new();
        for id in &row_ids {
            if !seen.insert(id.as_str()) {
                return Err(DataError::DuplicateRowId(id.clone()));
            }
        }
        Ok(DataMatrix {
            values,
            mask,
            col_names,
            row_ids,
        })
    }

    /// Fully observed matrix with generated row ids (`r0`, `r1`, ...) and the
    /// given column names.
    pub fn complete(values: Array2<f64>, col_names: Vec<String>) -> Result<Self, DataError> {
        let mask = Array2::from_elem(values.dim(), true);
        let row_ids = (0..values.nrows()).map(|i| format!("r{i}")).collect();
        DataMatrix::new(values, mask, col_names, row_ids)
    }

    /// Fully observed matrix with generated row ids and column names
    /// (`f0`, `f1`, ...).
    pub fn from_values(values: Array2<f64>) -> Self {
        let names = (0..values.ncols()).map(|j| format!("f{j}")).collect();
        DataMatrix::complete(values, names).expect("generated names are unique")
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn mask(&self) -> ArrayView2<'_, bool> {
        self.mask.view()
    }

    pub fn col_names(&self) -> &[String] {
        &self.col_names
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn col_index(&self, name: &str) -> Option<usize> {
        self.col_names.iter().position(|n| n == name)
    }

    pub fn is_observed(&self, row: usize, col: usize) -> bool {
        self.mask[[row, col]]
    }

    /// Observed value at a cell, `None` when the cell is masked out.
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.mask[[row, col]].then(|| self.values[[row, col]])
    }

    pub fn is_complete(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }

    pub fn observed_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn observed_fraction(&self) -> f64 {
        self.observed_count() as f64 / (self.n_rows() * self.n_cols()) as f64
    }

    /// Observed values of one column.
    pub fn observed_in_col(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows())
            .filter(|&r| self.mask[[r, col]])
            .map(|r| self.values[[r, col]])
            .collect()
    }

    /// Observed `(column name, value)` pairs for one row.
    pub fn observed_in_row(&self, row: usize) -> Vec<(&str, f64)> {
        (0..self.n_cols())
            .filter(|&c| self.mask[[row, c]])
            .map(|c| (self.col_names[c].as_str(), self.values[[row, c]]))
            .collect()
    }

    /// New matrix with the same names/ids, the given values and an all-true
    /// mask. Used by imputers to publish their completed grid.
    pub fn with_complete_values(&self, values: Array2<f64>) -> Self {
        assert_eq!(values.dim(), self.values.dim());
        DataMatrix {
            mask: Array2::from_elem(values.dim(), true),
            values,
            col_names: self.col_names.clone(),
            row_ids: self.row_ids.clone(),
        }
    }

    /// New matrix with the same names/ids and the given values and mask.
    pub fn with_values_and_mask(&self, values: Array2<f64>, mask: Array2<bool>) -> Self {
        assert_eq!(values.dim(), self.values.dim());
        assert_eq!(mask.dim(), self.values.dim());
        DataMatrix {
            values,
            mask,
            col_names: self.col_names.clone(),
            row_ids: self.row_ids.clone(),
        }
    }

    /// Select a subset of rows, preserving their order of appearance in `rows`.
    pub fn select_rows(&self, rows: &[usize]) -> DataMatrix {
        let (_, cols) = self.values.dim();
        let mut values = Array2::zeros((rows.len(), cols));
        let mut mask = Array2::from_elem((rows.len(), cols), false);
        let mut row_ids = Vec::with_capacity(rows.len());
        for (out, &r) in rows.iter().enumerate() {
            values.row_mut(out).assign(&self.values.row(r));
            mask.row_mut(out).assign(&self.mask.row(r));
            row_ids.push(self.row_ids[r].clone());
        }
        DataMatrix {
            values,
            mask,
            col_names: self.col_names.clone(),
            row_ids,
        }
    }
}

/// Fully observed feature matrix plus one class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: DataMatrix,
    labels: Vec<ClassLabel>,
}

impl LabeledDataset {
    pub fn new(features: DataMatrix, labels: Vec<ClassLabel>) -> Result<Self, DataError> {
        if !features.is_complete() {
            return Err(DataError::IncompleteFeatures);
        }
        if labels.len() != features.n_rows() {
            return Err(DataError::LabelCount {
                labels: labels.len(),
                rows: features.n_rows(),
            });
        }
        Ok(LabeledDataset { features, labels })
    }

    pub fn features(&self) -> &DataMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[ClassLabel] {
        &self.labels
    }

    pub fn n_rows(&self) -> usize {
        self.features.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    /// Per-class row counts in alphabet order `[A, B, C]`.
    pub fn class_counts(&self) -> [usize; 3] {
        let mut counts = [0usize; 3];
        for &l in &self.labels {
            counts[l.index()] += 1;
        }
        counts
    }

    /// Classes with at least one sample, in alphabet order.
    pub fn classes_present(&self) -> Vec<ClassLabel> {
        let counts = self.class_counts();
        ClassLabel::ALL
            .into_iter()
            .filter(|c| counts[c.index()] > 0)
            .collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: self.features.select_rows(rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
        }
    }
}
