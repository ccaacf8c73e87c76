//! Relevance propagation over the dense branch and correlation screening of
//! the numeric features.

use serde::{Deserialize, Serialize};

use crate::error::{NeoError, Result};
use crate::matrix::NumericMatrix;
use crate::nn::FfnnModel;

pub const LRP_EPSILON: f64 = 1e-6;
pub const DEFAULT_REDUNDANCY_THRESHOLD: f64 = 0.75;

fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Epsilon-rule relevance of each input feature for the pre-sigmoid score.
///
/// Each layer redistributes the relevance of unit `k` onto its inputs in
/// proportion to `a_j * w_jk`, stabilized by `eps * sign(z_k)`.
pub fn lrp(model: &FfnnModel, x: &[f64]) -> Result<Vec<f64>> {
    lrp_with_epsilon(model, x, LRP_EPSILON)
}

pub fn lrp_with_epsilon(model: &FfnnModel, x: &[f64], eps: f64) -> Result<Vec<f64>> {
    let trace = model.trace(x)?;
    let mut relevance = vec![trace.score()];
    for (l, layer) in model.layers.iter().enumerate().rev() {
        let a = &trace.activations[l];
        let mut below = vec![0.0; layer.inputs];
        for (k, &r) in relevance.iter().enumerate() {
            if r == 0.0 {
                continue;
            }
            let w = layer.row(k);
            let z: f64 = a.iter().zip(w).map(|(ai, wi)| ai * wi).sum();
            let scale = r / (z + eps * sign(z));
            for ((b, &ai), &wi) in below.iter_mut().zip(a).zip(w) {
                *b += ai * wi * scale;
            }
        }
        relevance = below;
    }
    Ok(relevance)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub mean_abs_relevance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceReport {
    pub records: usize,
    pub epsilon: f64,
    pub features: Vec<FeatureImportance>,
}

/// Mean |R_i| over the rows of `x`.
pub fn aggregate_importance(
    model: &FfnnModel,
    x: &NumericMatrix,
    names: &[String],
) -> Result<RelevanceReport> {
    if names.len() != model.input_width() {
        return Err(NeoError::Dimension {
            context: "feature names",
            expected: model.input_width(),
            got: names.len(),
        });
    }
    if x.rows() == 0 {
        return Err(NeoError::Data("relevance needs at least one record".into()));
    }
    let mut sums = vec![0.0; names.len()];
    for row in x.iter_rows() {
        for (s, r) in sums.iter_mut().zip(lrp(model, row)?) {
            *s += r.abs();
        }
    }
    let n = x.rows() as f64;
    Ok(RelevanceReport {
        records: x.rows(),
        epsilon: LRP_EPSILON,
        features: names
            .iter()
            .zip(sums)
            .map(|(name, s)| FeatureImportance {
                feature: name.clone(),
                mean_abs_relevance: s / n,
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: NumericMatrix,
    /// Zero-variance columns; their off-diagonal entries are 0.
    pub degenerate: Vec<usize>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values.get(i, j)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (i, n) in self.names.iter().enumerate() {
            out.push_str(n);
            for v in self.values.row(i) {
                out.push_str(&format!(",{v:?}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Pearson correlation between every pair of columns.
pub fn correlation_matrix(x: &NumericMatrix, names: &[String]) -> Result<CorrelationMatrix> {
    if x.rows() < 2 {
        return Err(NeoError::Data(format!(
            "correlation needs at least 2 rows, got {}",
            x.rows()
        )));
    }
    let p = x.cols();
    if names.len() != p {
        return Err(NeoError::Dimension {
            context: "feature names",
            expected: p,
            got: names.len(),
        });
    }
    let n = x.rows() as f64;
    let centered: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            let col = x.column(j);
            let mean = col.iter().sum::<f64>() / n;
            col.iter().map(|v| v - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = centered
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let degenerate: Vec<usize> = (0..p).filter(|&j| norms[j] == 0.0).collect();

    let mut values = NumericMatrix::zeros(p, p);
    for i in 0..p {
        values.set(i, i, 1.0);
        for j in i + 1..p {
            let r = if norms[i] == 0.0 || norms[j] == 0.0 {
                0.0
            } else {
                let dot: f64 = centered[i]
                    .iter()
                    .zip(&centered[j])
                    .map(|(a, b)| a * b)
                    .sum();
                (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0)
            };
            values.set(i, j, r);
            values.set(j, i, r);
        }
    }
    Ok(CorrelationMatrix {
        names: names.to_vec(),
        values,
        degenerate,
    })
}

/// Unordered column pairs `(i, j)`, `i < j`, with `|r| > threshold`.
pub fn redundancy_report(cm: &CorrelationMatrix, threshold: f64) -> Vec<(usize, usize)> {
    let p = cm.names.len();
    let mut pairs = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            if cm.get(i, j).abs() > threshold {
                pairs.push((i, j));
            }
        }
    }
    pairs
}
