use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Binary,
    Continuous,
}

#[derive(Debug, Error, PartialEq)]
pub enum MatrixError {
    #[error("feature matrix needs at least one column")]
    NoColumns,
    #[error("row {row} has {got} values, expected {expected}")]
    RaggedRow { row: usize, got: usize, expected: usize },
    #[error("column metadata length mismatch: {names} names, {kinds} kinds, {cols} columns")]
    Schema { names: usize, kinds: usize, cols: usize },
    #[error("binary column {column:?} row {row} holds {value}, expected 0 or 1")]
    NotBinary { column: String, row: usize, value: f64 },
    #[error("non-finite value at row {row}, column {column:?}")]
    NonFinite { row: usize, column: String },
}

/// Dense row-major `n × d` matrix with an explicit missing mask.
///
/// Values under the mask are stored as `0.0` and never read.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
    missing: Vec<bool>,
    col_names: Vec<String>,
    col_kind: Vec<ColumnKind>,
}

impl FeatureMatrix {
    /// Builds a matrix from rows of optional values (`None` = missing).
    pub fn from_rows(
        rows: &[Vec<Option<f64>>],
        col_names: Vec<String>,
        col_kind: Vec<ColumnKind>,
    ) -> Result<Self, MatrixError> {
        let n_cols = col_names.len();
        if n_cols == 0 {
            return Err(MatrixError::NoColumns);
        }
        if col_kind.len() != n_cols {
            return Err(MatrixError::Schema { names: n_cols, kinds: col_kind.len(), cols: n_cols });
        }
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        let mut missing = Vec::with_capacity(rows.len() * n_cols);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(MatrixError::RaggedRow { row: r, got: row.len(), expected: n_cols });
            }
            for (c, v) in row.iter().enumerate() {
                match v {
                    Some(x) => {
                        if !x.is_finite() {
                            return Err(MatrixError::NonFinite { row: r, column: col_names[c].clone() });
                        }
                        if col_kind[c] == ColumnKind::Binary && *x != 0.0 && *x != 1.0 {
                            return Err(MatrixError::NotBinary {
                                column: col_names[c].clone(),
                                row: r,
                                value: *x,
                            });
                        }
                        values.push(*x);
                        missing.push(false);
                    }
                    None => {
                        values.push(0.0);
                        missing.push(true);
                    }
                }
            }
        }
        Ok(Self { n_rows: rows.len(), n_cols, values, missing, col_names, col_kind })
    }

    /// All-continuous matrix without missing values, for quick construction.
    pub fn dense(rows: &[Vec<f64>]) -> Result<Self, MatrixError> {
        let d = rows.first().map_or(0, Vec::len);
        let opt: Vec<Vec<Option<f64>>> = rows.iter().map(|r| r.iter().map(|v| Some(*v)).collect()).collect();
        let names = (0..d).map(|j| format!("x{j}")).collect();
        Self::from_rows(&opt, names, vec![ColumnKind::Continuous; d])
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn col_names(&self) -> &[String] {
        &self.col_names
    }

    pub fn col_kinds(&self) -> &[ColumnKind] {
        &self.col_kind
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let i = row * self.n_cols + col;
        if self.missing[i] {
            None
        } else {
            Some(self.values[i])
        }
    }

    pub fn row(&self, row: usize) -> Vec<Option<f64>> {
        (0..self.n_cols).map(|c| self.get(row, c)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<Option<f64>>> {
        (0..self.n_rows).map(|r| self.row(r)).collect()
    }

    /// New matrix holding `indices` in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.n_cols);
        let mut missing = Vec::with_capacity(indices.len() * self.n_cols);
        for &r in indices {
            let s = r * self.n_cols;
            values.extend_from_slice(&self.values[s..s + self.n_cols]);
            missing.extend_from_slice(&self.missing[s..s + self.n_cols]);
        }
        Self {
            n_rows: indices.len(),
            n_cols: self.n_cols,
            values,
            missing,
            col_names: self.col_names.clone(),
            col_kind: self.col_kind.clone(),
        }
    }

    /// Replaces every observed value of `col` with `f(value)`.
    pub fn map_column(&mut self, col: usize, f: impl Fn(f64) -> f64) {
        for r in 0..self.n_rows {
            let i = r * self.n_cols + col;
            if !self.missing[i] {
                self.values[i] = f(self.values[i]);
            }
        }
    }

    /// Masks a single cell as missing.
    pub fn set_missing(&mut self, row: usize, col: usize) {
        let i = row * self.n_cols + col;
        self.missing[i] = true;
        self.values[i] = 0.0;
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().filter(|m| **m).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_binary_value_in_binary_column() {
        let err = FeatureMatrix::from_rows(
            &[vec![Some(0.5)]],
            vec!["flag".into()],
            vec![ColumnKind::Binary],
        )
        .unwrap_err();
        assert!(matches!(err, MatrixError::NotBinary { .. }));
    }

    #[test]
    fn missing_cells_read_as_none() {
        let m = FeatureMatrix::from_rows(
            &[vec![Some(1.0), None], vec![None, Some(2.0)]],
            vec!["a".into(), "b".into()],
            vec![ColumnKind::Continuous; 2],
        )
        .unwrap();
        assert_eq!(m.get(0, 1), None);
        assert_eq!(m.get(1, 1), Some(2.0));
        assert_eq!(m.missing_count(), 2);
        assert_eq!(m.select_rows(&[1]).row(0), vec![None, Some(2.0)]);
    }

    #[test]
    fn ragged_rows_and_empty_schema_are_errors() {
        assert_eq!(FeatureMatrix::dense(&[]).unwrap_err(), MatrixError::NoColumns);
        let err = FeatureMatrix::from_rows(
            &[vec![Some(1.0)], vec![]],
            vec!["a".into()],
            vec![ColumnKind::Continuous],
        )
        .unwrap_err();
        assert!(matches!(err, MatrixError::RaggedRow { row: 1, .. }));
    }
}
