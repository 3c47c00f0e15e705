//! Trainable layer primitives: affine maps and stacked LSTM cells.
//!
//! Layers own their parameters as plain vectors; `stage` copies them onto a
//! tape as leaves for one differentiable pass. Weight initialization is
//! uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero except the
//! LSTM forget gate at +1.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::tape::{Tape, Tensor};

fn uniform_init(rng: &mut ChaCha8Rng, n: usize, fan_in: usize) -> Vec<f64> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    (0..n).map(|_| rng.gen_range(-bound..bound)).collect()
}

/// Dense affine layer y = x W^T + b with weight shape (out x in).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major (out x in).
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl AffineMap {
    pub fn init(in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            in_dim,
            out_dim,
            weight: uniform_init(rng, out_dim * in_dim, in_dim),
            bias: vec![0.0; out_dim],
        }
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub fn stage(&self, tape: &mut Tape) -> StagedAffine {
        StagedAffine {
            weight: tape.leaf(self.out_dim, self.in_dim, &self.weight),
            bias: tape.leaf(1, self.out_dim, &self.bias),
        }
    }
}

/// Tape handles for one staged affine layer.
#[derive(Debug, Clone, Copy)]
pub struct StagedAffine {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl StagedAffine {
    pub fn apply(&self, tape: &mut Tape, x: Tensor) -> Tensor {
        let y = tape.matmul_nt(x, self.weight);
        tape.add_row(y, self.bias)
    }
}

/// One LSTM layer. Gate order in the packed matrices is input, forget,
/// cell, output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmLayer {
    pub in_dim: usize,
    pub hidden: usize,
    /// (4h x in), row-major.
    pub w_ih: Vec<f64>,
    /// (4h x h), row-major.
    pub w_hh: Vec<f64>,
    /// (4h), forget-gate block starts at h.
    pub bias: Vec<f64>,
}

impl LstmLayer {
    pub fn init(in_dim: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut bias = vec![0.0; 4 * hidden];
        for b in bias.iter_mut().skip(hidden).take(hidden) {
            *b = 1.0; // forget-gate stabilization
        }
        Self {
            in_dim,
            hidden,
            w_ih: uniform_init(rng, 4 * hidden * in_dim, in_dim),
            w_hh: uniform_init(rng, 4 * hidden * hidden, hidden),
            bias,
        }
    }

    pub fn param_count(&self) -> usize {
        self.w_ih.len() + self.w_hh.len() + self.bias.len()
    }
}

/// A stack of LSTM layers; layer k+1 consumes layer k's per-step output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmStack {
    pub layers: Vec<LstmLayer>,
}

impl LstmStack {
    pub fn init(in_dim: usize, hidden: usize, n_layers: usize, rng: &mut ChaCha8Rng) -> Self {
        let layers = (0..n_layers)
            .map(|k| LstmLayer::init(if k == 0 { in_dim } else { hidden }, hidden, rng))
            .collect();
        Self { layers }
    }

    pub fn hidden(&self) -> usize {
        self.layers[0].hidden
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum()
    }

    pub fn stage(&self, tape: &mut Tape) -> StagedLstm {
        StagedLstm {
            layers: self
                .layers
                .iter()
                .map(|l| StagedLstmLayer {
                    w_ih: tape.leaf(4 * l.hidden, l.in_dim, &l.w_ih),
                    w_hh: tape.leaf(4 * l.hidden, l.hidden, &l.w_hh),
                    bias: tape.leaf(1, 4 * l.hidden, &l.bias),
                    hidden: l.hidden,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StagedLstmLayer {
    pub w_ih: Tensor,
    pub w_hh: Tensor,
    pub bias: Tensor,
    hidden: usize,
}

/// Per-layer (hidden, cell) state handles.
pub type LstmState = Vec<(Tensor, Tensor)>;

#[derive(Debug, Clone)]
pub struct StagedLstm {
    pub layers: Vec<StagedLstmLayer>,
}

impl StagedLstm {
    pub fn zero_state(&self, tape: &mut Tape, batch: usize) -> LstmState {
        self.layers
            .iter()
            .map(|l| (tape.zeros(batch, l.hidden), tape.zeros(batch, l.hidden)))
            .collect()
    }

    /// Advance the stack one step. Returns the top layer's hidden output.
    pub fn step(&self, tape: &mut Tape, input: Tensor, state: &mut LstmState) -> Tensor {
        let mut x = input;
        for (layer, (h, c)) in self.layers.iter().zip(state.iter_mut()) {
            let hid = layer.hidden;
            let from_in = tape.matmul_nt(x, layer.w_ih);
            let from_h = tape.matmul_nt(*h, layer.w_hh);
            let pre0 = tape.add(from_in, from_h);
            let pre = tape.add_row(pre0, layer.bias);
            let i_pre = tape.slice_cols(pre, 0, hid);
            let f_pre = tape.slice_cols(pre, hid, hid);
            let g_pre = tape.slice_cols(pre, 2 * hid, hid);
            let o_pre = tape.slice_cols(pre, 3 * hid, hid);
            let i = tape.sigmoid(i_pre);
            let f = tape.sigmoid(f_pre);
            let g = tape.tanh(g_pre);
            let o = tape.sigmoid(o_pre);
            let keep = tape.mul(f, *c);
            let write = tape.mul(i, g);
            let c_new = tape.add(keep, write);
            let c_act = tape.tanh(c_new);
            let h_new = tape.mul(o, c_act);
            *h = h_new;
            *c = c_new;
            x = h_new;
        }
        x
    }

    /// Run the stack over a step-indexed input sequence from a zero state.
    /// Returns every top-layer output and the final per-layer states.
    pub fn forward_seq(&self, tape: &mut Tape, inputs: &[Tensor]) -> (Vec<Tensor>, LstmState) {
        assert!(!inputs.is_empty(), "forward_seq on empty sequence");
        let mut state = self.zero_state(tape, inputs[0].rows);
        let outputs = inputs
            .iter()
            .map(|x| self.step(tape, *x, &mut state))
            .collect();
        (outputs, state)
    }
}
