use serde::{Deserialize, Serialize};

use crate::error::{NeoError, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl NumericMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        NumericMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(NeoError::Dimension {
                context: "matrix buffer",
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(NumericMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(NeoError::Dimension {
                    context: "matrix row",
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(NumericMatrix {
            rows: rows.len(),
            cols,
            data,
        })
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

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.cols {
            return Err(NeoError::Dimension {
                context: "matrix row",
                expected: self.cols,
                got: row.len(),
            });
        }
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    /// New matrix with the selected rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> NumericMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        NumericMatrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// New matrix holding columns `range` of every row.
    pub fn select_cols(&self, range: std::ops::Range<usize>) -> NumericMatrix {
        let width = range.len();
        let mut data = Vec::with_capacity(self.rows * width);
        for r in self.iter_rows() {
            data.extend_from_slice(&r[range.clone()]);
        }
        NumericMatrix {
            rows: self.rows,
            cols: width,
            data,
        }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.iter_rows().map(|r| r[j]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}
