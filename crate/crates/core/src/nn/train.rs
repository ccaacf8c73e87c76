use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::optim::{optimizer_step, AdamState, OptimizerKind};
use super::{FfnnModel, Parameters, RnnModel, SeqData, SequenceView};
use crate::error::{NeoError, Result};
use crate::matrix::NumericMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            batch_size: 100,
            epochs: 100,
            optimizer: OptimizerKind::AdamThenSgd { switch_epoch: None },
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    /// Defaults for the recurrent branch (5 epochs).
    pub fn rnn_default() -> Self {
        TrainConfig {
            epochs: 5,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(NeoError::Config("learning_rate must be > 0".into()));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(NeoError::Config(
                "batch_size and epochs must be >= 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
            || !(self.epsilon.is_finite() && self.epsilon > 0.0)
        {
            return Err(NeoError::Config("adam hyperparameters out of range".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Mean training BCE per epoch, accumulated over the epoch's mini-batches.
    pub epoch_loss: Vec<f64>,
    pub warnings: Vec<String>,
}

/// A model that can accumulate per-example gradients over some input store.
pub trait Trainable: Parameters {
    type Input: ?Sized;

    fn examples(input: &Self::Input) -> usize;

    fn accumulate_example(
        &self,
        input: &Self::Input,
        i: usize,
        y: u8,
        grads: &mut [Vec<f64>],
    ) -> Result<f64>;

    /// Mean loss and mean gradient over `batch`.
    fn batch_gradients(
        &self,
        input: &Self::Input,
        labels: &[u8],
        batch: &[usize],
    ) -> Result<(f64, Vec<Vec<f64>>)> {
        if batch.is_empty() {
            return Err(NeoError::Data("empty batch".into()));
        }
        let mut grads = self.zero_grads();
        let mut loss = 0.0;
        for &i in batch {
            loss += self.accumulate_example(input, i, labels[i], &mut grads)?;
        }
        let scale = 1.0 / batch.len() as f64;
        for g in &mut grads {
            g.iter_mut().for_each(|v| *v *= scale);
        }
        Ok((loss * scale, grads))
    }
}

impl Trainable for FfnnModel {
    type Input = NumericMatrix;

    fn examples(input: &NumericMatrix) -> usize {
        input.rows()
    }

    fn accumulate_example(
        &self,
        input: &NumericMatrix,
        i: usize,
        y: u8,
        grads: &mut [Vec<f64>],
    ) -> Result<f64> {
        self.accumulate(input.row(i), y, grads)
    }
}

/// Random-access store of sequences, materialized one record at a time.
pub trait SequenceSource: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn width(&self) -> usize;

    /// Overwrite `buf` with record `i`'s timesteps and return its valid length.
    fn fill(&self, i: usize, buf: &mut Vec<f64>) -> Result<usize>;
}

impl SequenceSource for SeqData {
    fn len(&self) -> usize {
        SeqData::len(self)
    }

    fn width(&self) -> usize {
        self.width
    }

    fn fill(&self, i: usize, buf: &mut Vec<f64>) -> Result<usize> {
        let v = self.view(i);
        buf.clear();
        buf.extend_from_slice(v.steps);
        Ok(v.valid_len)
    }
}

impl Trainable for RnnModel {
    type Input = dyn SequenceSource;

    fn examples(input: &dyn SequenceSource) -> usize {
        input.len()
    }

    fn accumulate_example(
        &self,
        input: &dyn SequenceSource,
        i: usize,
        y: u8,
        grads: &mut [Vec<f64>],
    ) -> Result<f64> {
        let mut buf = Vec::new();
        let valid_len = input.fill(i, &mut buf)?;
        let view = SequenceView {
            steps: &buf,
            width: input.width(),
            valid_len,
        };
        self.accumulate(view, y, grads)
    }
}

/// Mini-batch training with a per-epoch seeded shuffle.
pub fn train<M: Trainable>(
    model: &mut M,
    input: &M::Input,
    labels: &[u8],
    cfg: &TrainConfig,
) -> Result<TrainHistory> {
    cfg.validate()?;
    let n = M::examples(input);
    if n == 0 {
        return Err(NeoError::Data("training set is empty".into()));
    }
    if labels.len() != n {
        return Err(NeoError::Dimension {
            context: "training labels",
            expected: n,
            got: labels.len(),
        });
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(NeoError::Data("training labels must be 0 or 1".into()));
    }

    let mut history = TrainHistory::default();
    let positives = labels.iter().filter(|&&y| y == 1).count();
    if positives == 0 || positives == n {
        history.warnings.push(format!(
            "training data has a single class ({positives} positives of {n})"
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut state = AdamState::new(&model.tensors());
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let (loss, grads) = model.batch_gradients(input, labels, batch)?;
            total += loss * batch.len() as f64;
            optimizer_step(&mut model.tensors_mut(), &grads, &mut state, cfg, epoch);
        }
        history.epoch_loss.push(total / n as f64);
    }
    Ok(history)
}
