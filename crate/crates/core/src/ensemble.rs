//! Fixed-weight aggregation of the two branch probabilities.

use serde::{Deserialize, Serialize};

use crate::error::{NeoError, Result};
use crate::nn::{classify, FfnnModel, RnnModel, SequenceView};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleConfig {
    pub w_ffnn: f64,
    pub w_rnn: f64,
    pub threshold: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            w_ffnn: 0.5,
            w_rnn: 0.5,
            threshold: 0.5,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.w_ffnn >= 0.0 && self.w_rnn >= 0.0)
            || (self.w_ffnn + self.w_rnn - 1.0).abs() > 1e-12
        {
            return Err(NeoError::Config(format!(
                "ensemble weights must be nonnegative and sum to 1, got ({}, {})",
                self.w_ffnn, self.w_rnn
            )));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(NeoError::Config(format!(
                "ensemble threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

fn check_prob(p: f64, which: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(NeoError::Data(format!(
            "{which} probability {p} outside [0, 1]"
        )))
    }
}

pub fn aggregate(p_ffnn: f64, p_rnn: f64, cfg: &EnsembleConfig) -> Result<f64> {
    check_prob(p_ffnn, "ffnn")?;
    check_prob(p_rnn, "rnn")?;
    Ok((cfg.w_ffnn * p_ffnn + cfg.w_rnn * p_rnn).clamp(0.0, 1.0))
}

/// One preprocessed record in both branch views.
#[derive(Debug, Clone, Copy)]
pub struct RecordView<'a> {
    pub dense: &'a [f64],
    pub sequence: SequenceView<'a>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub p_ffnn: f64,
    pub p_rnn: f64,
    pub probability: f64,
    pub label: u8,
}

pub fn predict(
    ffnn: &FfnnModel,
    rnn: &RnnModel,
    record: RecordView<'_>,
    cfg: &EnsembleConfig,
) -> Result<Prediction> {
    let p_ffnn = ffnn.forward(record.dense)?;
    let p_rnn = rnn.forward(record.sequence)?;
    let probability = aggregate(p_ffnn, p_rnn, cfg)?;
    Ok(Prediction {
        p_ffnn,
        p_rnn,
        probability,
        label: classify(probability, cfg.threshold),
    })
}
