//! LSTM layers and the stacked recurrent branch.
//!
//! One step of a layer with input `x`, previous hidden `h` and cell `c`:
//!
//! ```text
//! f  = sigmoid(W_f x + U_f h + b_f)
//! i  = sigmoid(W_i x + U_i h + b_i)
//! o  = sigmoid(W_o x + U_o h + b_o)
//! c~ = tanh(W_c x + U_c h + b_c)
//! c' = f * c + i * c~
//! h' = o * tanh(c')
//! ```
//!
//! The four blocks are stored stacked in the order forget, input, output,
//! candidate. Gradients use full backpropagation through time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dense::{axpy, dot, Dense};
use super::loss::bce_loss;
use super::{glorot, sigmoid, Arch, Parameters};
use crate::error::{NeoError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Forget = 0,
    Input = 1,
    Output = 2,
    Candidate = 3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmLayer {
    pub inputs: usize,
    pub hidden: usize,
    /// `4 * hidden x inputs`
    pub w: Vec<f64>,
    /// `4 * hidden x hidden`
    pub u: Vec<f64>,
    /// `4 * hidden`
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        LstmState {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

impl LstmLayer {
    pub fn zeros(inputs: usize, hidden: usize) -> Self {
        LstmLayer {
            inputs,
            hidden,
            w: vec![0.0; 4 * hidden * inputs],
            u: vec![0.0; 4 * hidden * hidden],
            b: vec![0.0; 4 * hidden],
        }
    }

    pub fn glorot<R: Rng>(inputs: usize, hidden: usize, rng: &mut R) -> Self {
        let mut layer = LstmLayer::zeros(inputs, hidden);
        for g in 0..4 {
            let w = glorot(rng, inputs, hidden);
            layer.w[g * hidden * inputs..(g + 1) * hidden * inputs].copy_from_slice(&w);
            let u = glorot(rng, hidden, hidden);
            layer.u[g * hidden * hidden..(g + 1) * hidden * hidden].copy_from_slice(&u);
        }
        layer
    }

    pub fn input_weights(&self, g: Gate) -> &[f64] {
        let n = self.hidden * self.inputs;
        &self.w[g as usize * n..(g as usize + 1) * n]
    }

    pub fn recurrent_weights(&self, g: Gate) -> &[f64] {
        let n = self.hidden * self.hidden;
        &self.u[g as usize * n..(g as usize + 1) * n]
    }

    pub fn bias(&self, g: Gate) -> &[f64] {
        &self.b[g as usize * self.hidden..(g as usize + 1) * self.hidden]
    }

    /// One step; also returns the activated blocks `[f; i; o; c~]`.
    pub fn step_with_gates(&self, x: &[f64], s: &LstmState) -> Result<(LstmState, Vec<f64>)> {
        if x.len() != self.inputs {
            return Err(NeoError::Dimension {
                context: "lstm input",
                expected: self.inputs,
                got: x.len(),
            });
        }
        if s.h.len() != self.hidden || s.c.len() != self.hidden {
            return Err(NeoError::Dimension {
                context: "lstm state",
                expected: self.hidden,
                got: s.h.len().min(s.c.len()),
            });
        }
        Ok(self.step_unchecked(x, s))
    }

    fn step_unchecked(&self, x: &[f64], s: &LstmState) -> (LstmState, Vec<f64>) {
        let h = self.hidden;
        let mut gates = vec![0.0; 4 * h];
        for (r, g) in gates.iter_mut().enumerate() {
            let pre = self.b[r]
                + dot(&self.w[r * self.inputs..(r + 1) * self.inputs], x)
                + dot(&self.u[r * h..(r + 1) * h], &s.h);
            *g = if r < 3 * h { sigmoid(pre) } else { pre.tanh() };
        }
        let mut next = LstmState::zeros(h);
        for j in 0..h {
            next.c[j] = gates[j] * s.c[j] + gates[h + j] * gates[3 * h + j];
            next.h[j] = gates[2 * h + j] * next.c[j].tanh();
        }
        (next, gates)
    }
}

pub fn lstm_step(layer: &LstmLayer, x: &[f64], s: &LstmState) -> Result<LstmState> {
    Ok(layer.step_with_gates(x, s)?.0)
}

/// Borrowed input sequence: `valid_len` timesteps of `width` values, row-major.
/// Trailing timesteps beyond `valid_len` are padding and never read.
#[derive(Debug, Clone, Copy)]
pub struct SequenceView<'a> {
    pub steps: &'a [f64],
    pub width: usize,
    pub valid_len: usize,
}

impl<'a> SequenceView<'a> {
    pub fn step(&self, t: usize) -> &'a [f64] {
        &self.steps[t * self.width..(t + 1) * self.width]
    }
}

/// A batch of fixed-capacity sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqData {
    pub width: usize,
    pub max_len: usize,
    pub steps: Vec<f64>,
    pub valid_len: Vec<usize>,
}

impl SeqData {
    pub fn new(width: usize, max_len: usize) -> Self {
        SeqData {
            width,
            max_len,
            steps: Vec::new(),
            valid_len: Vec::new(),
        }
    }

    pub fn push(&mut self, steps: &[f64], valid_len: usize) -> Result<()> {
        if steps.len() != self.width * self.max_len {
            return Err(NeoError::Dimension {
                context: "sequence buffer",
                expected: self.width * self.max_len,
                got: steps.len(),
            });
        }
        self.steps.extend_from_slice(steps);
        self.valid_len.push(valid_len.min(self.max_len));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.valid_len.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valid_len.is_empty()
    }

    pub fn view(&self, i: usize) -> SequenceView<'_> {
        let stride = self.width * self.max_len;
        SequenceView {
            steps: &self.steps[i * stride..(i + 1) * stride],
            width: self.width,
            valid_len: self.valid_len[i],
        }
    }
}

/// Stacked LSTM layers followed by a dense readout on the last hidden state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RnnModel {
    pub input_width: usize,
    pub layers: Vec<LstmLayer>,
    pub readout: Dense,
}

struct StepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

impl RnnModel {
    /// `arch` is `input:hidden_1:...:hidden_k:1`.
    pub fn init(arch: &Arch, seed: u64) -> Result<Self> {
        Self::build(arch, Some(seed))
    }

    pub fn zeros(arch: &Arch) -> Result<Self> {
        Self::build(arch, None)
    }

    fn build(arch: &Arch, seed: Option<u64>) -> Result<Self> {
        arch.validate()?;
        let sizes = arch.sizes();
        if sizes.len() < 3 {
            return Err(NeoError::Config(format!(
                "recurrent architecture '{arch}' needs at least one LSTM layer"
            )));
        }
        let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
        let hidden = &sizes[1..sizes.len() - 1];
        let mut layers = Vec::with_capacity(hidden.len());
        let mut prev = sizes[0];
        for &h in hidden {
            layers.push(match rng.as_mut() {
                Some(r) => LstmLayer::glorot(prev, h, r),
                None => LstmLayer::zeros(prev, h),
            });
            prev = h;
        }
        let readout = match rng.as_mut() {
            Some(r) => Dense::glorot(prev, 1, r),
            None => Dense::zeros(prev, 1),
        };
        Ok(RnnModel {
            input_width: sizes[0],
            layers,
            readout,
        })
    }

    pub fn arch(&self) -> Arch {
        let mut sizes = vec![self.input_width];
        sizes.extend(self.layers.iter().map(|l| l.hidden));
        sizes.push(1);
        Arch(sizes)
    }

    fn check(&self, seq: &SequenceView<'_>) -> Result<()> {
        if seq.width != self.input_width {
            return Err(NeoError::Dimension {
                context: "rnn timestep width",
                expected: self.input_width,
                got: seq.width,
            });
        }
        if seq.valid_len == 0 {
            return Err(NeoError::Data("empty input sequence".into()));
        }
        if seq.steps.len() < seq.valid_len * seq.width {
            return Err(NeoError::Dimension {
                context: "rnn sequence buffer",
                expected: seq.valid_len * seq.width,
                got: seq.steps.len(),
            });
        }
        Ok(())
    }

    /// Pre-sigmoid output.
    pub fn score(&self, seq: SequenceView<'_>) -> Result<f64> {
        self.check(&seq)?;
        let mut states: Vec<LstmState> = self
            .layers
            .iter()
            .map(|l| LstmState::zeros(l.hidden))
            .collect();
        for t in 0..seq.valid_len {
            let mut input = seq.step(t).to_vec();
            for (layer, state) in self.layers.iter().zip(states.iter_mut()) {
                let (next, _) = layer.step_unchecked(&input, state);
                input.clone_from(&next.h);
                *state = next;
            }
        }
        let top = &states.last().expect("at least one layer").h;
        Ok(self.readout.bias[0] + dot(self.readout.row(0), top))
    }

    pub fn forward(&self, seq: SequenceView<'_>) -> Result<f64> {
        Ok(sigmoid(self.score(seq)?))
    }

    /// Add the BCE gradient for one sequence to `grads` and return its loss.
    pub fn accumulate(&self, seq: SequenceView<'_>, y: u8, grads: &mut [Vec<f64>]) -> Result<f64> {
        self.check(&seq)?;
        let steps = seq.valid_len;

        let mut inputs: Vec<Vec<f64>> = (0..steps).map(|t| seq.step(t).to_vec()).collect();
        let mut caches: Vec<Vec<StepCache>> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let mut state = LstmState::zeros(layer.hidden);
            let mut cache = Vec::with_capacity(steps);
            let mut outputs = Vec::with_capacity(steps);
            for x in inputs {
                let (next, gates) = layer.step_unchecked(&x, &state);
                outputs.push(next.h.clone());
                cache.push(StepCache {
                    x,
                    h_prev: state.h,
                    c_prev: state.c,
                    gates,
                    tanh_c: next.c.iter().map(|v| v.tanh()).collect(),
                });
                state = next;
            }
            caches.push(cache);
            inputs = outputs;
        }

        let top = &inputs[steps - 1];
        let z = self.readout.bias[0] + dot(self.readout.row(0), top);
        let p = sigmoid(z);
        let dz = p - y as f64;

        let n_lstm = 3 * self.layers.len();
        axpy(&mut grads[n_lstm], dz, top);
        grads[n_lstm + 1][0] += dz;

        let top_hidden = self.readout.inputs;
        let mut dh_out = vec![vec![0.0; top_hidden]; steps];
        dh_out[steps - 1] = self.readout.row(0).iter().map(|w| dz * w).collect();

        for (l, layer) in self.layers.iter().enumerate().rev() {
            let h = layer.hidden;
            let Some([gw, gu, gb]) = grads.get_mut(3 * l..3 * l + 3) else {
                unreachable!("gradient tensors mirror parameters")
            };
            let mut dh_next = vec![0.0; h];
            let mut dc_next = vec![0.0; h];
            let mut dx_all = vec![Vec::new(); steps];
            let mut da = vec![0.0; 4 * h];
            for t in (0..steps).rev() {
                let c = &caches[l][t];
                for j in 0..h {
                    let (f, i, o, g) = (
                        c.gates[j],
                        c.gates[h + j],
                        c.gates[2 * h + j],
                        c.gates[3 * h + j],
                    );
                    let tc = c.tanh_c[j];
                    let dh = dh_out[t][j] + dh_next[j];
                    let dc = dc_next[j] + dh * o * (1.0 - tc * tc);
                    da[j] = dc * c.c_prev[j] * f * (1.0 - f);
                    da[h + j] = dc * g * i * (1.0 - i);
                    da[2 * h + j] = dh * tc * o * (1.0 - o);
                    da[3 * h + j] = dc * i * (1.0 - g * g);
                    dc_next[j] = dc * f;
                }
                let mut dx = vec![0.0; layer.inputs];
                dh_next.iter_mut().for_each(|v| *v = 0.0);
                for (r, &d) in da.iter().enumerate() {
                    let w_row = &layer.w[r * layer.inputs..(r + 1) * layer.inputs];
                    let u_row = &layer.u[r * h..(r + 1) * h];
                    axpy(&mut gw[r * layer.inputs..(r + 1) * layer.inputs], d, &c.x);
                    axpy(&mut gu[r * h..(r + 1) * h], d, &c.h_prev);
                    gb[r] += d;
                    axpy(&mut dx, d, w_row);
                    axpy(&mut dh_next, d, u_row);
                }
                dx_all[t] = dx;
            }
            dh_out = dx_all;
        }
        Ok(bce_loss(p, y))
    }
}

impl Parameters for RnnModel {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self
            .layers
            .iter()
            .flat_map(|l| [l.w.as_slice(), l.u.as_slice(), l.b.as_slice()])
            .collect();
        out.push(&self.readout.weights);
        out.push(&self.readout.bias);
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self
            .layers
            .iter_mut()
            .flat_map(|l| [l.w.as_mut_slice(), l.u.as_mut_slice(), l.b.as_mut_slice()])
            .collect();
        out.push(&mut self.readout.weights);
        out.push(&mut self.readout.bias);
        out
    }
}
