use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dense::{axpy, Dense};
use super::loss::bce_loss;
use super::{sigmoid, Activation, Arch, Parameters};
use crate::error::{NeoError, Result};

/// Dense branch: hidden layers use `hidden_activation`, the single output
/// unit feeds a sigmoid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FfnnModel {
    pub hidden_activation: Activation,
    pub layers: Vec<Dense>,
}

/// Per-layer values from one forward pass. `activations[0]` is the input and
/// the last entry holds the single pre-sigmoid score.
#[derive(Debug, Clone)]
pub struct FfnnTrace {
    pub pre: Vec<Vec<f64>>,
    pub activations: Vec<Vec<f64>>,
}

impl FfnnTrace {
    pub fn score(&self) -> f64 {
        self.activations.last().expect("non-empty trace")[0]
    }
}

impl FfnnModel {
    pub fn init(arch: &Arch, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = arch
            .sizes()
            .windows(2)
            .map(|w| Dense::glorot(w[0], w[1], &mut rng))
            .collect();
        Ok(FfnnModel {
            hidden_activation: Activation::Relu,
            layers,
        })
    }

    pub fn zeros(arch: &Arch) -> Result<Self> {
        arch.validate()?;
        Ok(FfnnModel {
            hidden_activation: Activation::Relu,
            layers: arch
                .sizes()
                .windows(2)
                .map(|w| Dense::zeros(w[0], w[1]))
                .collect(),
        })
    }

    pub fn arch(&self) -> Arch {
        let mut sizes = vec![self.layers[0].inputs];
        sizes.extend(self.layers.iter().map(|l| l.outputs));
        Arch(sizes)
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn trace(&self, x: &[f64]) -> Result<FfnnTrace> {
        if x.len() != self.input_width() {
            return Err(NeoError::Dimension {
                context: "ffnn input",
                expected: self.input_width(),
                got: x.len(),
            });
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(activations.last().unwrap());
            let a = if l == last {
                z.clone()
            } else {
                z.iter().map(|&v| self.hidden_activation.apply(v)).collect()
            };
            pre.push(z);
            activations.push(a);
        }
        Ok(FfnnTrace { pre, activations })
    }

    /// Pre-sigmoid output.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        Ok(self.trace(x)?.score())
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.score(x)?))
    }

    /// Add the BCE gradient for one example to `grads` and return its loss.
    pub fn accumulate(&self, x: &[f64], y: u8, grads: &mut [Vec<f64>]) -> Result<f64> {
        let trace = self.trace(x)?;
        let p = sigmoid(trace.score());
        let mut delta = vec![p - y as f64];
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = &trace.activations[l];
            let (gw, rest) = grads[2 * l..].split_at_mut(1);
            for (k, &d) in delta.iter().enumerate() {
                axpy(
                    &mut gw[0][k * layer.inputs..(k + 1) * layer.inputs],
                    d,
                    input,
                );
                rest[0][k] += d;
            }
            if l > 0 {
                let mut prev = vec![0.0; layer.inputs];
                for (k, &d) in delta.iter().enumerate() {
                    axpy(&mut prev, d, layer.row(k));
                }
                for (j, v) in prev.iter_mut().enumerate() {
                    *v *= self
                        .hidden_activation
                        .derivative(trace.pre[l - 1][j], trace.activations[l][j]);
                }
                delta = prev;
            }
        }
        Ok(bce_loss(p, y))
    }
}

impl Parameters for FfnnModel {
    fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}
