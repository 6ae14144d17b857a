//! JSON helpers shared by the file formats.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// A matrix written either as nested rows or as a flat row-major array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixRows {
    Nested(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

impl MatrixRows {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        MatrixRows::Nested(m.row_iter().map(|r| r.iter().copied().collect()).collect())
    }

    pub fn to_matrix(&self, field: &str, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        let flat: Vec<f64> = match self {
            MatrixRows::Nested(r) => {
                if r.len() != rows {
                    return Err(Error::Format(format!(
                        "field `{field}`: expected {rows} rows, found {}",
                        r.len()
                    )));
                }
                if let Some(i) = r.iter().position(|row| row.len() != cols) {
                    return Err(Error::Format(format!(
                        "field `{field}`: row {i} has {} entries, expected {cols}",
                        r[i].len()
                    )));
                }
                r.iter().flatten().copied().collect()
            }
            MatrixRows::Flat(v) => {
                if v.len() != rows * cols {
                    return Err(Error::Format(format!(
                        "field `{field}`: expected {} entries, found {}",
                        rows * cols,
                        v.len()
                    )));
                }
                v.clone()
            }
        };
        if flat.iter().any(|x| !x.is_finite()) {
            return Err(Error::Format(format!("field `{field}`: non-finite entry")));
        }
        Ok(DMatrix::from_row_slice(rows, cols, &flat))
    }
}

pub fn vectors_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.column_iter()
        .map(|c| c.iter().copied().collect())
        .collect()
}

/// Columns of the result are the given vectors; all must have length `len`.
pub fn rows_to_columns(field: &str, vectors: &[Vec<f64>], len: usize) -> Result<DMatrix<f64>> {
    if let Some(i) = vectors.iter().position(|v| v.len() != len) {
        return Err(Error::Format(format!(
            "field `{field}`: entry {i} has length {}, expected {len}",
            vectors[i].len()
        )));
    }
    if vectors.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Format(format!("field `{field}`: non-finite entry")));
    }
    Ok(DMatrix::from_fn(len, vectors.len(), |r, c| vectors[c][r]))
}

pub fn vector_from(field: &str, v: &[f64], len: usize) -> Result<DVector<f64>> {
    if v.len() != len {
        return Err(Error::Format(format!(
            "field `{field}`: expected length {len}, found {}",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Format(format!("field `{field}`: non-finite entry")));
    }
    Ok(DVector::from_column_slice(v))
}

/// Matrix with explicit shape; used where empty dimensions must survive a round trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapedMatrix {
    pub rows: usize,
    pub cols: usize,
    /// Row-major entries.
    pub data: Vec<f64>,
}

impl From<&DMatrix<f64>> for ShapedMatrix {
    fn from(m: &DMatrix<f64>) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().iter().copied().collect(),
        }
    }
}

impl ShapedMatrix {
    pub fn to_matrix(&self, field: &str) -> Result<DMatrix<f64>> {
        MatrixRows::Flat(self.data.clone()).to_matrix(field, self.rows, self.cols)
    }
}
