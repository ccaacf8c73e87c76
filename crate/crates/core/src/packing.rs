//! Conversion of preprocessed rows into the two branch inputs.
//!
//! The dense branch takes the standardized numeric columns. The recurrent
//! branch takes one fixed-width vector per residue position:
//!
//! ```text
//! [mutant token * token_scale, wild-type token * token_scale, position / max_len,
//!  numerics..., hla code * hla_scale, 0, 0, ...]   (width 35 by default)
//! ```
//!
//! A position is padding when both token slots hold the pad code exactly;
//! the sequence length is the index of the first padding position.

use serde::{Deserialize, Serialize};

use crate::data::PAD_CODE;
use crate::error::{NeoError, Result};
use crate::matrix::NumericMatrix;
use crate::nn::{SeqData, SequenceSource};
use crate::preprocess::FeatureLayout;

pub const DEFAULT_STEP_WIDTH: usize = 35;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequencePacking {
    pub width: usize,
    pub token_scale: f64,
    pub hla_scale: f64,
    pub layout: FeatureLayout,
}

impl SequencePacking {
    /// Default packing for a layout with `n_hla` known alleles.
    pub fn new(layout: FeatureLayout, n_hla: usize) -> Result<Self> {
        let p = SequencePacking {
            width: DEFAULT_STEP_WIDTH,
            token_scale: 1.0 / PAD_CODE as f64,
            hla_scale: 1.0 / n_hla.saturating_sub(1).max(1) as f64,
            layout,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn used_width(&self) -> usize {
        3 + self.layout.n_numeric + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.used_width() > self.width {
            return Err(NeoError::Config(format!(
                "timestep width {} cannot hold {} packed features",
                self.width,
                self.used_width()
            )));
        }
        Ok(())
    }

    pub fn valid_len(&self, row: &[f64]) -> usize {
        let pad = PAD_CODE as f64;
        let (mt, wt) = (&row[self.layout.mutant()], &row[self.layout.wild_type()]);
        mt.iter()
            .zip(wt)
            .position(|(&a, &b)| a == pad && b == pad)
            .unwrap_or(self.layout.max_len)
    }

    /// Timestep buffer (`max_len x width`) and sequence length for one row.
    pub fn pack_row(&self, row: &[f64]) -> Result<(Vec<f64>, usize)> {
        if row.len() != self.layout.width() {
            return Err(NeoError::Dimension {
                context: "packed feature row",
                expected: self.layout.width(),
                got: row.len(),
            });
        }
        let max_len = self.layout.max_len;
        let numerics = &row[self.layout.numeric()];
        let hla = row[self.layout.hla()] * self.hla_scale;
        let mut steps = vec![0.0; max_len * self.width];
        for t in 0..max_len {
            let step = &mut steps[t * self.width..(t + 1) * self.width];
            step[0] = row[self.layout.mutant().start + t] * self.token_scale;
            step[1] = row[self.layout.wild_type().start + t] * self.token_scale;
            step[2] = t as f64 / max_len as f64;
            step[3..3 + numerics.len()].copy_from_slice(numerics);
            step[3 + numerics.len()] = hla;
        }
        Ok((steps, self.valid_len(row)))
    }

    pub fn pack(&self, rows: &NumericMatrix) -> Result<SeqData> {
        let mut out = SeqData::new(self.width, self.layout.max_len);
        for row in rows.iter_rows() {
            let (steps, len) = self.pack_row(row)?;
            out.push(&steps, len)?;
        }
        Ok(out)
    }

    /// Lazy sequence store over preprocessed rows.
    pub fn source(&self, rows: NumericMatrix) -> PackedRows {
        PackedRows {
            packing: self.clone(),
            rows,
        }
    }

    /// Dense-branch inputs (the numeric columns).
    pub fn dense_inputs(&self, rows: &NumericMatrix) -> NumericMatrix {
        rows.select_cols(self.layout.numeric())
    }
}

/// Preprocessed rows packed into timesteps on demand.
#[derive(Debug, Clone)]
pub struct PackedRows {
    pub packing: SequencePacking,
    pub rows: NumericMatrix,
}

impl SequenceSource for PackedRows {
    fn len(&self) -> usize {
        self.rows.rows()
    }

    fn width(&self) -> usize {
        self.packing.width
    }

    fn fill(&self, i: usize, buf: &mut Vec<f64>) -> Result<usize> {
        let (steps, len) = self.packing.pack_row(self.rows.row(i))?;
        *buf = steps;
        Ok(len)
    }
}
