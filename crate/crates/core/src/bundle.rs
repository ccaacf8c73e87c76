//! Versioned single-file model bundle.
//!
//! The file is one JSON document with sorted keys. Parameter tensors are
//! stored as base64 little-endian `f32` with explicit shapes; bundle
//! construction rounds every parameter to `f32` so that what is saved is
//! exactly what was used for prediction.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::FeatureRecord;
use crate::ensemble::{predict, EnsembleConfig, Prediction, RecordView};
use crate::error::{NeoError, Result};
use crate::json::to_canonical_string;
use crate::matrix::NumericMatrix;
use crate::nn::{Activation, Dense, FfnnModel, LstmLayer, Parameters, RnnModel};
use crate::packing::SequencePacking;
use crate::preprocess::{apply_records, TransformParams};

pub const BUNDLE_VERSION: &str = "neo-bundle/1";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub split: u64,
    pub smote: u64,
    pub ffnn: u64,
    pub rnn: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seeds: Seeds,
    /// SHA-256 of the canonical JSON of the configuration that produced the bundle.
    pub config_sha256: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub transform: TransformParams,
    pub packing: SequencePacking,
    pub ffnn: FfnnModel,
    pub rnn: RnnModel,
    pub ensemble: EnsembleConfig,
    pub provenance: Provenance,
}

/// Round every parameter to the nearest `f32`.
pub fn quantize_f32<P: Parameters>(model: &mut P) {
    for t in model.tensors_mut() {
        for v in t.iter_mut() {
            *v = *v as f32 as f64;
        }
    }
}

impl ModelBundle {
    pub fn new(
        transform: TransformParams,
        packing: SequencePacking,
        mut ffnn: FfnnModel,
        mut rnn: RnnModel,
        ensemble: EnsembleConfig,
        provenance: Provenance,
    ) -> Result<Self> {
        quantize_f32(&mut ffnn);
        quantize_f32(&mut rnn);
        let b = ModelBundle {
            transform,
            packing,
            ffnn,
            rnn,
            ensemble,
            provenance,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        self.ensemble.validate()?;
        self.packing.validate()?;
        let layout = self.transform.layout();
        if self.packing.layout != layout {
            return Err(NeoError::Config(
                "packing layout does not match the transform".into(),
            ));
        }
        if self.ffnn.input_width() != layout.n_numeric {
            return Err(NeoError::Dimension {
                context: "ffnn input width",
                expected: layout.n_numeric,
                got: self.ffnn.input_width(),
            });
        }
        if self.rnn.input_width != self.packing.width {
            return Err(NeoError::Dimension {
                context: "rnn input width",
                expected: self.packing.width,
                got: self.rnn.input_width,
            });
        }
        Ok(())
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.transform
            .numeric
            .iter()
            .map(|c| c.name.clone())
            .collect()
    }

    /// HLA alleles the transform can encode, in code order.
    pub fn known_alleles(&self) -> Vec<String> {
        let mut v: Vec<(u32, String)> = self
            .transform
            .hla_categories()
            .map(|m| m.iter().map(|(k, &c)| (c, k.clone())).collect())
            .unwrap_or_default();
        v.sort();
        v.into_iter().map(|(_, k)| k).collect()
    }

    /// Predict preprocessed rows; parallel over rows, output in input order.
    pub fn predict_rows(&self, rows: &NumericMatrix) -> Result<Vec<Prediction>> {
        let dense = self.packing.layout.numeric();
        (0..rows.rows())
            .into_par_iter()
            .map(|i| {
                let row = rows.row(i);
                let (steps, valid_len) = self.packing.pack_row(row)?;
                let view = RecordView {
                    dense: &row[dense.clone()],
                    sequence: crate::nn::SequenceView {
                        steps: &steps,
                        width: self.packing.width,
                        valid_len,
                    },
                };
                predict(&self.ffnn, &self.rnn, view, &self.ensemble)
            })
            .collect()
    }

    pub fn predict_records(&self, records: &[FeatureRecord]) -> Result<Vec<Prediction>> {
        self.predict_rows(&apply_records(&self.transform, records)?)
    }

    pub fn to_json(&self) -> Result<String> {
        to_canonical_string(&BundleFile::from(self))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| corrupt(text, e))?;
        match value.get("version").and_then(|v| v.as_str()) {
            Some(BUNDLE_VERSION) => {}
            found => {
                return Err(NeoError::BundleVersion {
                    expected: BUNDLE_VERSION.to_string(),
                    found: found.unwrap_or("<missing>").to_string(),
                })
            }
        }
        let file: BundleFile = serde_json::from_str(text).map_err(|e| corrupt(text, e))?;
        let b = file.into_bundle(text)?;
        b.validate()?;
        Ok(b)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| NeoError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| NeoError::io(path, e))?;
        Self::from_json(&text)
    }
}

fn corrupt(text: &str, e: serde_json::Error) -> NeoError {
    let offset = if e.line() == 0 {
        0
    } else {
        let line_start: usize = text
            .split_inclusive('\n')
            .take(e.line() - 1)
            .map(str::len)
            .sum();
        (line_start + e.column().saturating_sub(1)).min(text.len())
    };
    NeoError::CorruptBundle {
        offset,
        message: e.to_string(),
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Tensor {
    shape: Vec<usize>,
    data: String,
}

impl Tensor {
    fn encode(shape: Vec<usize>, values: &[f64]) -> Self {
        let bytes: Vec<u8> = values
            .iter()
            .flat_map(|&v| (v as f32).to_le_bytes())
            .collect();
        Tensor {
            shape,
            data: STANDARD.encode(bytes),
        }
    }

    fn decode(&self, expected: &[usize], text: &str) -> Result<Vec<f64>> {
        let fail = |message: String| NeoError::CorruptBundle {
            offset: text.find(&self.data).unwrap_or(0),
            message,
        };
        if self.shape != expected {
            return Err(fail(format!(
                "tensor shape {:?}, expected {:?}",
                self.shape, expected
            )));
        }
        let bytes = STANDARD
            .decode(&self.data)
            .map_err(|e| fail(format!("bad base64: {e}")))?;
        let n: usize = expected.iter().product();
        if bytes.len() != 4 * n {
            return Err(fail(format!(
                "tensor holds {} bytes, expected {}",
                bytes.len(),
                4 * n
            )));
        }
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect())
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DenseFile {
    weights: Tensor,
    bias: Tensor,
}

impl DenseFile {
    fn encode(d: &Dense) -> Self {
        DenseFile {
            weights: Tensor::encode(vec![d.outputs, d.inputs], &d.weights),
            bias: Tensor::encode(vec![d.outputs], &d.bias),
        }
    }

    fn decode(&self, text: &str) -> Result<Dense> {
        let (outputs, inputs) = match self.weights.shape[..] {
            [o, i] if o > 0 && i > 0 => (o, i),
            _ => {
                return Err(NeoError::CorruptBundle {
                    offset: text.find(&self.weights.data).unwrap_or(0),
                    message: format!("dense weight shape {:?} is not 2-d", self.weights.shape),
                })
            }
        };
        Ok(Dense {
            inputs,
            outputs,
            weights: self.weights.decode(&[outputs, inputs], text)?,
            bias: self.bias.decode(&[outputs], text)?,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LstmFile {
    w: Tensor,
    u: Tensor,
    b: Tensor,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FfnnFile {
    hidden_activation: Activation,
    layers: Vec<DenseFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RnnFile {
    input_width: usize,
    layers: Vec<LstmFile>,
    readout: DenseFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleFile {
    version: String,
    transform: TransformParams,
    packing: SequencePacking,
    ffnn: FfnnFile,
    rnn: RnnFile,
    ensemble: EnsembleConfig,
    provenance: Provenance,
}

impl From<&ModelBundle> for BundleFile {
    fn from(b: &ModelBundle) -> Self {
        BundleFile {
            version: BUNDLE_VERSION.to_string(),
            transform: b.transform.clone(),
            packing: b.packing.clone(),
            ffnn: FfnnFile {
                hidden_activation: b.ffnn.hidden_activation,
                layers: b.ffnn.layers.iter().map(DenseFile::encode).collect(),
            },
            rnn: RnnFile {
                input_width: b.rnn.input_width,
                layers: b
                    .rnn
                    .layers
                    .iter()
                    .map(|l| LstmFile {
                        w: Tensor::encode(vec![4 * l.hidden, l.inputs], &l.w),
                        u: Tensor::encode(vec![4 * l.hidden, l.hidden], &l.u),
                        b: Tensor::encode(vec![4 * l.hidden], &l.b),
                    })
                    .collect(),
                readout: DenseFile::encode(&b.rnn.readout),
            },
            ensemble: b.ensemble,
            provenance: b.provenance.clone(),
        }
    }
}

impl BundleFile {
    fn into_bundle(self, text: &str) -> Result<ModelBundle> {
        let structural = |message: &str| NeoError::CorruptBundle {
            offset: 0,
            message: message.to_string(),
        };
        let layers = self
            .ffnn
            .layers
            .iter()
            .map(|l| l.decode(text))
            .collect::<Result<Vec<_>>>()?;
        if layers.is_empty()
            || layers.windows(2).any(|w| w[0].outputs != w[1].inputs)
            || layers.last().unwrap().outputs != 1
        {
            return Err(structural(
                "ffnn layer shapes do not chain to a single output",
            ));
        }
        let ffnn = FfnnModel {
            hidden_activation: self.ffnn.hidden_activation,
            layers,
        };

        let mut lstm = Vec::with_capacity(self.rnn.layers.len());
        let mut prev = self.rnn.input_width;
        for l in &self.rnn.layers {
            let hidden = match l.u.shape[..] {
                [rows, h] if rows == 4 * h && h > 0 => h,
                _ => return Err(structural("lstm recurrent weights are not 4h x h")),
            };
            lstm.push(LstmLayer {
                inputs: prev,
                hidden,
                w: l.w.decode(&[4 * hidden, prev], text)?,
                u: l.u.decode(&[4 * hidden, hidden], text)?,
                b: l.b.decode(&[4 * hidden], text)?,
            });
            prev = hidden;
        }
        let readout = self.rnn.readout.decode(text)?;
        if lstm.is_empty() || readout.inputs != prev || readout.outputs != 1 {
            return Err(structural("rnn readout does not match the last lstm layer"));
        }
        Ok(ModelBundle {
            transform: self.transform,
            packing: self.packing,
            ffnn,
            rnn: RnnModel {
                input_width: self.rnn.input_width,
                layers: lstm,
                readout,
            },
            ensemble: self.ensemble,
            provenance: self.provenance,
        })
    }
}
