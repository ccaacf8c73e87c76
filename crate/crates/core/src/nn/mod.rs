//! Feed-forward and LSTM branches, loss, gradients and optimizers.
//!
//! All arithmetic is `f64`. Parameters are stored as flat row-major buffers
//! and exposed to the optimizer as an ordered list of tensors; gradients use
//! the same order and shapes.

mod dense;
mod ffnn;
mod loss;
mod lstm;
mod optim;
mod train;

pub use dense::Dense;
pub use ffnn::{FfnnModel, FfnnTrace};
pub use loss::{bce_loss, mean_bce, PROB_CLIP};
pub use lstm::{lstm_step, Gate, LstmLayer, LstmState, RnnModel, SeqData, SequenceView};
pub use optim::{optimizer_step, AdamState, OptimizerKind};
pub use train::{train, SequenceSource, TrainConfig, TrainHistory, Trainable};

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NeoError, Result};

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// 1 iff `p >= threshold`.
pub fn classify(p: f64, threshold: f64) -> u8 {
    u8::from(p >= threshold)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }
}

/// Layer-size list in `8:16:32:1` notation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Arch(pub Vec<usize>);

impl FromStr for Arch {
    type Err = NeoError;

    fn from_str(s: &str) -> Result<Self> {
        let sizes = s
            .split(':')
            .map(|part| {
                part.trim().parse::<usize>().map_err(|_| {
                    NeoError::Config(format!(
                        "invalid architecture '{s}': '{part}' is not a layer size"
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let arch = Arch(sizes);
        arch.validate()?;
        Ok(arch)
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join(":"))
    }
}

impl Serialize for Arch {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Arch {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Arch {
    pub fn validate(&self) -> Result<()> {
        if self.0.len() < 2 {
            return Err(NeoError::Config(format!(
                "architecture '{self}' needs at least an input and an output layer"
            )));
        }
        if self.0.contains(&0) {
            return Err(NeoError::Config(format!(
                "architecture '{self}' has a zero-width layer"
            )));
        }
        if *self.0.last().unwrap() != 1 {
            return Err(NeoError::Config(format!(
                "architecture '{self}' must end in a single output unit"
            )));
        }
        Ok(())
    }

    pub fn sizes(&self) -> &[usize] {
        &self.0
    }
}

/// Ordered view of a model's trainable tensors.
pub trait Parameters {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn zero_grads(&self) -> Vec<Vec<f64>> {
        self.tensors().iter().map(|t| vec![0.0; t.len()]).collect()
    }

    fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

/// Glorot-uniform draw for a `fan_out x fan_in` matrix.
pub(crate) fn glorot<R: Rng>(rng: &mut R, fan_in: usize, fan_out: usize) -> Vec<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..fan_in * fan_out)
        .map(|_| rng.gen_range(-limit..=limit))
        .collect()
}
