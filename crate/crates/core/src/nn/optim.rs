use serde::{Deserialize, Serialize};

use super::train::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
    /// Adam for epochs `< switch_epoch`, plain SGD afterwards. Without an
    /// explicit switch point the first half of the epochs use Adam.
    AdamThenSgd {
        switch_epoch: Option<usize>,
    },
}

impl OptimizerKind {
    pub fn uses_adam(&self, epoch: usize, epochs: usize) -> bool {
        match *self {
            OptimizerKind::Sgd => false,
            OptimizerKind::Adam => true,
            OptimizerKind::AdamThenSgd { switch_epoch } => {
                epoch < switch_epoch.unwrap_or(epochs / 2)
            }
        }
    }
}

/// Adam moment estimates, one buffer per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
}

impl AdamState {
    pub fn new(shapes: &[&[f64]]) -> Self {
        AdamState {
            m: shapes.iter().map(|p| vec![0.0; p.len()]).collect(),
            v: shapes.iter().map(|p| vec![0.0; p.len()]).collect(),
            t: 0,
        }
    }
}

/// Apply one update to every tensor. `epoch` selects the phase of an
/// Adam-then-SGD schedule.
pub fn optimizer_step(
    params: &mut [&mut [f64]],
    grads: &[Vec<f64>],
    state: &mut AdamState,
    cfg: &TrainConfig,
    epoch: usize,
) {
    let lr = cfg.learning_rate;
    if !cfg.optimizer.uses_adam(epoch, cfg.epochs) {
        for (p, g) in params.iter_mut().zip(grads) {
            for (w, d) in p.iter_mut().zip(g) {
                *w -= lr * d;
            }
        }
        return;
    }

    state.t += 1;
    let (b1, b2, eps) = (cfg.beta1, cfg.beta2, cfg.epsilon);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let (m, v) = (&mut state.m[k], &mut state.v[k]);
        for j in 0..p.len() {
            m[j] = b1 * m[j] + (1.0 - b1) * g[j];
            v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
            let m_hat = m[j] / c1;
            let v_hat = v[j] / c2;
            p[j] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}
