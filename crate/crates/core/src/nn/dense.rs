use rand::Rng;
use serde::{Deserialize, Serialize};

use super::glorot;

/// Affine map `W x + b` with `W` stored row-major as `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    pub fn glorot<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        Dense {
            inputs,
            outputs,
            weights: glorot(rng, inputs, outputs),
            bias: vec![0.0; outputs],
        }
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.weights[k * self.inputs..(k + 1) * self.inputs]
    }

    pub fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.inputs);
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.bias[k] + dot(self.row(k), x);
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.outputs];
        self.forward_into(x, &mut out);
        out
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `acc += s * v`
#[inline]
pub(crate) fn axpy(acc: &mut [f64], s: f64, v: &[f64]) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += s * x;
    }
}
