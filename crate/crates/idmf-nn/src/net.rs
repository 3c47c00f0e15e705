//! The follower-trajectory prediction network: two disjoint LSTM encoders
//! over the leader's position and velocity sequences, key/value projections
//! of the concatenated encodings, and an attention decoder that emits one
//! normalized follower position per step.
//!
//! The decoder consumes the attention context as its step input (no output
//! feedback); its initial state is the position encoder's final state, and
//! each output is an affine map of [decoder hidden, context].

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use idmf_core::normalize::{denormalize, normalize_window};
use idmf_core::trajectory::SequenceWindow;

use crate::attention::scaled_dot_attention;
use crate::error::NnError;
use crate::layers::{AffineMap, LstmStack, LstmState, StagedAffine, StagedLstm};
use crate::tape::{Tape, Tensor};

/// Network dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetConfig {
    /// Hidden width of every LSTM and projection.
    pub hidden: usize,
    /// Stacked LSTM layers per encoder/decoder.
    pub layers: usize,
    /// Input and output sequence length.
    pub horizon: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            hidden: 128,
            layers: 2,
            horizon: 80,
        }
    }
}

impl NetConfig {
    pub fn desk(horizon: usize) -> Self {
        Self {
            hidden: 32,
            layers: 2,
            horizon,
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.hidden < 2 || self.layers == 0 || self.horizon == 0 {
            return Err(NnError::Config(format!("invalid net config {self:?}")));
        }
        Ok(())
    }

    /// Closed-form parameter count for this architecture.
    pub fn expected_param_count(&self) -> usize {
        let h = self.hidden;
        let lstm = |in_dim: usize| 4 * h * (in_dim + h + 1);
        let encoder = lstm(1) + (self.layers - 1) * lstm(h);
        let decoder = lstm(h) + (self.layers - 1) * lstm(h);
        let projection = h * 2 * h + h;
        let output = 2 * h + 1;
        2 * encoder + 2 * projection + decoder + output
    }
}

/// The learnable parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FollowerNet {
    pub config: NetConfig,
    pub seed: u64,
    pub pos_encoder: LstmStack,
    pub vel_encoder: LstmStack,
    pub key_map: AffineMap,
    pub value_map: AffineMap,
    pub decoder: LstmStack,
    pub output_map: AffineMap,
}

impl FollowerNet {
    /// Deterministic initialization: same config and seed give bit-identical
    /// parameters.
    pub fn init(config: NetConfig, seed: u64) -> Result<Self, NnError> {
        config.validate()?;
        let h = config.hidden;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self {
            config,
            seed,
            pos_encoder: LstmStack::init(1, h, config.layers, &mut rng),
            vel_encoder: LstmStack::init(1, h, config.layers, &mut rng),
            key_map: AffineMap::init(2 * h, h, &mut rng),
            value_map: AffineMap::init(2 * h, h, &mut rng),
            decoder: LstmStack::init(h, h, config.layers, &mut rng),
            output_map: AffineMap::init(2 * h, 1, &mut rng),
        })
    }

    pub fn param_count(&self) -> usize {
        self.pos_encoder.param_count()
            + self.vel_encoder.param_count()
            + self.key_map.param_count()
            + self.value_map.param_count()
            + self.decoder.param_count()
            + self.output_map.param_count()
    }

    fn param_slices(&self) -> Vec<&[f64]> {
        let mut slices = Vec::new();
        for stack in [&self.pos_encoder, &self.vel_encoder] {
            for l in &stack.layers {
                slices.push(l.w_ih.as_slice());
                slices.push(l.w_hh.as_slice());
                slices.push(l.bias.as_slice());
            }
        }
        for map in [&self.key_map, &self.value_map] {
            slices.push(map.weight.as_slice());
            slices.push(map.bias.as_slice());
        }
        for l in &self.decoder.layers {
            slices.push(l.w_ih.as_slice());
            slices.push(l.w_hh.as_slice());
            slices.push(l.bias.as_slice());
        }
        slices.push(self.output_map.weight.as_slice());
        slices.push(self.output_map.bias.as_slice());
        slices
    }

    fn param_slices_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut slices: Vec<&mut Vec<f64>> = Vec::new();
        for stack in [&mut self.pos_encoder, &mut self.vel_encoder] {
            for l in stack.layers.iter_mut() {
                slices.push(&mut l.w_ih);
                slices.push(&mut l.w_hh);
                slices.push(&mut l.bias);
            }
        }
        for map in [&mut self.key_map, &mut self.value_map] {
            slices.push(&mut map.weight);
            slices.push(&mut map.bias);
        }
        for l in self.decoder.layers.iter_mut() {
            slices.push(&mut l.w_ih);
            slices.push(&mut l.w_hh);
            slices.push(&mut l.bias);
        }
        slices.push(&mut self.output_map.weight);
        slices.push(&mut self.output_map.bias);
        slices
    }

    /// All parameters concatenated in staging order.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for s in self.param_slices() {
            out.extend_from_slice(s);
        }
        out
    }

    /// Overwrite parameters from a flat vector in staging order.
    pub fn set_params_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "flat parameter length mismatch");
        let mut pos = 0;
        for s in self.param_slices_mut() {
            let len = s.len();
            s.copy_from_slice(&flat[pos..pos + len]);
            pos += len;
        }
    }

    /// Copy all parameters onto a tape for one differentiable pass.
    pub fn stage(&self, tape: &mut Tape) -> StagedNet {
        let pos_encoder = self.pos_encoder.stage(tape);
        let vel_encoder = self.vel_encoder.stage(tape);
        let key_map = self.key_map.stage(tape);
        let value_map = self.value_map.stage(tape);
        let decoder = self.decoder.stage(tape);
        let output_map = self.output_map.stage(tape);
        let mut param_leaves = Vec::new();
        for staged in [&pos_encoder, &vel_encoder] {
            for l in &staged.layers {
                param_leaves.extend([l.w_ih, l.w_hh, l.bias]);
            }
        }
        for map in [&key_map, &value_map] {
            param_leaves.extend([map.weight, map.bias]);
        }
        for l in &decoder.layers {
            param_leaves.extend([l.w_ih, l.w_hh, l.bias]);
        }
        param_leaves.extend([output_map.weight, output_map.bias]);
        StagedNet {
            horizon: self.config.horizon,
            pos_encoder,
            vel_encoder,
            key_map,
            value_map,
            decoder,
            output_map,
            param_leaves,
        }
    }

    /// Predict the follower position series for a window, in meters.
    pub fn predict(&self, window: &SequenceWindow) -> Vec<f64> {
        let mut tape = Tape::new();
        self.predict_with(&mut tape, window)
    }

    /// [`FollowerNet::predict`] reusing a caller-owned tape arena.
    pub fn predict_with(&self, tape: &mut Tape, window: &SequenceWindow) -> Vec<f64> {
        tape.clear();
        let (normed, norm) = normalize_window(window);
        let staged = self.stage(tape);
        let out = staged.forward(tape, &normed.leader_positions, &normed.leader_velocities);
        denormalize(tape.value(out), &norm)
    }

    pub fn save_checkpoint(&self, path: impl AsRef<Path>) -> Result<(), NnError> {
        let header = CheckpointHeader {
            format: CHECKPOINT_FORMAT.into(),
            config: self.config,
            seed: self.seed,
            param_count: self.param_count(),
        };
        let header_json = serde_json::to_vec(&header)?;
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&(header_json.len() as u32).to_le_bytes())?;
        w.write_all(&header_json)?;
        for p in self.params_flat() {
            w.write_all(&p.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Self, NnError> {
        let mut r = BufReader::new(File::open(path)?);
        let mut len_bytes = [0u8; 4];
        r.read_exact(&mut len_bytes)
            .map_err(|_| NnError::Checkpoint("truncated header length".into()))?;
        let header_len = u32::from_le_bytes(len_bytes) as usize;
        if header_len > 1 << 20 {
            return Err(NnError::Checkpoint(format!(
                "implausible header length {header_len}"
            )));
        }
        let mut header_json = vec![0u8; header_len];
        r.read_exact(&mut header_json)
            .map_err(|_| NnError::Checkpoint("truncated header".into()))?;
        let header: CheckpointHeader = serde_json::from_slice(&header_json)
            .map_err(|e| NnError::Checkpoint(format!("bad header: {e}")))?;
        if header.format != CHECKPOINT_FORMAT {
            return Err(NnError::Checkpoint(format!(
                "unsupported checkpoint format '{}', expected '{CHECKPOINT_FORMAT}'",
                header.format
            )));
        }
        let mut net = Self::init(header.config, header.seed)?;
        if header.param_count != net.param_count() {
            return Err(NnError::Checkpoint(format!(
                "parameter count {} does not match config ({})",
                header.param_count,
                net.param_count()
            )));
        }
        let mut raw = Vec::new();
        r.read_to_end(&mut raw)?;
        if raw.len() != header.param_count * 8 {
            return Err(NnError::Checkpoint(format!(
                "parameter block has {} bytes, expected {}",
                raw.len(),
                header.param_count * 8
            )));
        }
        let flat: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        net.set_params_flat(&flat);
        Ok(net)
    }
}

const CHECKPOINT_FORMAT: &str = "follower-net-v1";

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointHeader {
    format: String,
    config: NetConfig,
    seed: u64,
    param_count: usize,
}

/// Encoder outputs consumed by the decoder.
pub struct EncodeOut {
    /// (H x h) attention keys.
    pub keys: Tensor,
    /// (H x h) attention values.
    pub values: Tensor,
    /// Decoder initial state: the position encoder's final state.
    pub decoder_init: LstmState,
}

/// Tape handles for one staged forward pass.
pub struct StagedNet {
    horizon: usize,
    pub pos_encoder: StagedLstm,
    pub vel_encoder: StagedLstm,
    pub key_map: StagedAffine,
    pub value_map: StagedAffine,
    pub decoder: StagedLstm,
    pub output_map: StagedAffine,
    /// Every parameter leaf in flat-layout order.
    pub param_leaves: Vec<Tensor>,
}

impl StagedNet {
    /// Encode normalized leader positions and velocities into attention
    /// keys/values and the decoder's initial state.
    pub fn encode(&self, tape: &mut Tape, positions: &[f64], velocities: &[f64]) -> EncodeOut {
        assert_eq!(
            positions.len(),
            self.horizon,
            "position sequence length {} != horizon {}",
            positions.len(),
            self.horizon
        );
        assert_eq!(
            velocities.len(),
            self.horizon,
            "velocity sequence length {} != horizon {}",
            velocities.len(),
            self.horizon
        );
        let pos_in = tape.leaf(1, positions.len(), positions);
        let vel_in = tape.leaf(1, velocities.len(), velocities);
        let pos_steps: Vec<Tensor> = (0..self.horizon)
            .map(|t| tape.slice_cols(pos_in, t, 1))
            .collect();
        let vel_steps: Vec<Tensor> = (0..self.horizon)
            .map(|t| tape.slice_cols(vel_in, t, 1))
            .collect();
        let (pos_outs, pos_final) = self.pos_encoder.forward_seq(tape, &pos_steps);
        let (vel_outs, _vel_final) = self.vel_encoder.forward_seq(tape, &vel_steps);
        let pos_seq = tape.concat_rows(&pos_outs);
        let vel_seq = tape.concat_rows(&vel_outs);
        let joint = tape.concat_cols(&[pos_seq, vel_seq]);
        EncodeOut {
            keys: self.key_map.apply(tape, joint),
            values: self.value_map.apply(tape, joint),
            decoder_init: pos_final,
        }
    }

    /// Decode one normalized position per step. The attention query is the
    /// decoder's current top-layer hidden state; the context vector is the
    /// decoder's step input.
    pub fn decode(&self, tape: &mut Tape, enc: &EncodeOut) -> Tensor {
        let mut state = enc.decoder_init.clone();
        let mut outputs = Vec::with_capacity(self.horizon);
        for _ in 0..self.horizon {
            let query = state.last().expect("decoder state").0;
            let (context, _weights) = scaled_dot_attention(tape, query, enc.keys, enc.values);
            let hidden = self.decoder.step(tape, context, &mut state);
            let joint = tape.concat_cols(&[hidden, context]);
            outputs.push(self.output_map.apply(tape, joint));
        }
        tape.concat_rows(&outputs)
    }

    /// Full normalized forward pass: (H x 1) predicted positions.
    pub fn forward(&self, tape: &mut Tape, positions: &[f64], velocities: &[f64]) -> Tensor {
        let enc = self.encode(tape, positions, velocities);
        self.decode(tape, &enc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window(start: f64, horizon: usize) -> SequenceWindow {
        let dt = 0.1;
        SequenceWindow {
            window_id: "w".into(),
            dt,
            leader_positions: (0..horizon)
                .map(|k| start + 11.0 * k as f64 * dt + (k as f64 * 0.21).sin())
                .collect(),
            leader_velocities: (0..horizon).map(|k| 11.0 + (k as f64 * 0.21).cos()).collect(),
            follower_positions: (0..horizon).map(|k| start - 14.0 + 11.0 * k as f64 * dt).collect(),
            follower_initial_velocity: 11.0,
        }
    }

    #[test]
    fn same_seed_gives_identical_parameters() {
        let cfg = NetConfig::desk(10);
        let a = FollowerNet::init(cfg, 3).unwrap();
        let b = FollowerNet::init(cfg, 3).unwrap();
        assert_eq!(a.params_flat(), b.params_flat());
        let c = FollowerNet::init(cfg, 4).unwrap();
        assert_ne!(a.params_flat(), c.params_flat());
    }

    #[test]
    fn key_map_shape_at_full_width() {
        let net = FollowerNet::init(NetConfig::default(), 0).unwrap();
        assert_eq!(net.key_map.out_dim, 128);
        assert_eq!(net.key_map.in_dim, 256);
        assert_eq!(net.param_count(), net.config.expected_param_count());
    }

    #[test]
    fn key_map_shape_at_desk_width() {
        let net = FollowerNet::init(NetConfig::desk(80), 0).unwrap();
        assert_eq!(net.key_map.out_dim, 32);
        assert_eq!(net.key_map.in_dim, 64);
        assert_eq!(net.param_count(), net.config.expected_param_count());
    }

    #[test]
    fn flat_round_trip_preserves_parameters() {
        let mut net = FollowerNet::init(NetConfig::desk(10), 5).unwrap();
        let flat = net.params_flat();
        assert_eq!(flat.len(), net.param_count());
        let mut mutated = flat.clone();
        mutated[7] += 0.5;
        net.set_params_flat(&mutated);
        assert_eq!(net.params_flat(), mutated);
    }

    #[test]
    fn encode_shapes() {
        let h = 8;
        let horizon = 12;
        let net = FollowerNet::init(
            NetConfig {
                hidden: h,
                layers: 2,
                horizon,
            },
            1,
        )
        .unwrap();
        let mut tape = Tape::new();
        let staged = net.stage(&mut tape);
        let pos: Vec<f64> = (0..horizon).map(|k| k as f64 * 0.01).collect();
        let vel = vec![0.3; horizon];
        let enc = staged.encode(&mut tape, &pos, &vel);
        assert_eq!((enc.keys.rows, enc.keys.cols), (horizon, h));
        assert_eq!((enc.values.rows, enc.values.cols), (horizon, h));
        assert_eq!(enc.decoder_init.len(), 2);
        let out = staged.decode(&mut tape, &enc);
        assert_eq!((out.rows, out.cols), (horizon, 1));
    }

    #[test]
    fn zero_parameters_give_zero_outputs() {
        let mut net = FollowerNet::init(NetConfig::desk(9), 1).unwrap();
        let zeros = vec![0.0; net.param_count()];
        net.set_params_flat(&zeros);
        let mut tape = Tape::new();
        let staged = net.stage(&mut tape);
        let pos: Vec<f64> = (0..9).map(|k| 0.1 * k as f64).collect();
        let vel = vec![0.4; 9];
        let enc = staged.encode(&mut tape, &pos, &vel);
        assert!(tape.value(enc.keys).iter().all(|&v| v == 0.0));
        assert!(tape.value(enc.values).iter().all(|&v| v == 0.0));
        let out = staged.decode(&mut tape, &enc);
        assert!(tape.value(out).iter().all(|&v| v == 0.0));
    }

    /// Scalar reference evaluation of the whole forward pass, sharing no
    /// code with the tape path.
    mod reference {
        use crate::layers::{LstmLayer, LstmStack};
        use crate::net::FollowerNet;

        fn sigmoid(x: f64) -> f64 {
            1.0 / (1.0 + (-x).exp())
        }

        pub struct State {
            pub h: Vec<Vec<f64>>,
            pub c: Vec<Vec<f64>>,
        }

        pub fn zero_state(stack: &LstmStack) -> State {
            State {
                h: stack.layers.iter().map(|l| vec![0.0; l.hidden]).collect(),
                c: stack.layers.iter().map(|l| vec![0.0; l.hidden]).collect(),
            }
        }

        fn step_layer(layer: &LstmLayer, x: &[f64], h: &mut Vec<f64>, c: &mut Vec<f64>) -> Vec<f64> {
            let hid = layer.hidden;
            let mut pre = vec![0.0; 4 * hid];
            for (row, p) in pre.iter_mut().enumerate() {
                let mut acc = layer.bias[row];
                for (j, xj) in x.iter().enumerate() {
                    acc += layer.w_ih[row * layer.in_dim + j] * xj;
                }
                for (j, hj) in h.iter().enumerate() {
                    acc += layer.w_hh[row * hid + j] * hj;
                }
                *p = acc;
            }
            for u in 0..hid {
                let i = sigmoid(pre[u]);
                let f = sigmoid(pre[hid + u]);
                let g = pre[2 * hid + u].tanh();
                let o = sigmoid(pre[3 * hid + u]);
                c[u] = f * c[u] + i * g;
                h[u] = o * c[u].tanh();
            }
            h.clone()
        }

        pub fn step_stack(stack: &LstmStack, x: &[f64], state: &mut State) -> Vec<f64> {
            let mut cur = x.to_vec();
            for (k, layer) in stack.layers.iter().enumerate() {
                let (mut h, mut c) = (state.h[k].clone(), state.c[k].clone());
                cur = step_layer(layer, &cur, &mut h, &mut c);
                state.h[k] = h;
                state.c[k] = c;
            }
            cur
        }

        pub fn affine(w: &[f64], b: &[f64], in_dim: usize, x: &[f64]) -> Vec<f64> {
            (0..b.len())
                .map(|o| {
                    let mut acc = b[o];
                    for (j, xj) in x.iter().enumerate() {
                        acc += w[o * in_dim + j] * xj;
                    }
                    acc
                })
                .collect()
        }

        pub fn forward(net: &FollowerNet, pos: &[f64], vel: &[f64]) -> Vec<f64> {
            let h = net.config.hidden;
            let horizon = net.config.horizon;
            let mut pos_state = zero_state(&net.pos_encoder);
            let mut vel_state = zero_state(&net.vel_encoder);
            let mut keys = Vec::new();
            let mut values = Vec::new();
            for t in 0..horizon {
                let po = step_stack(&net.pos_encoder, &[pos[t]], &mut pos_state);
                let vo = step_stack(&net.vel_encoder, &[vel[t]], &mut vel_state);
                let joint: Vec<f64> = po.iter().chain(vo.iter()).cloned().collect();
                keys.push(affine(&net.key_map.weight, &net.key_map.bias, 2 * h, &joint));
                values.push(affine(&net.value_map.weight, &net.value_map.bias, 2 * h, &joint));
            }
            let mut dec_state = pos_state;
            let mut out = Vec::new();
            for _ in 0..horizon {
                let query = dec_state.h.last().unwrap().clone();
                let scale = 1.0 / (h as f64).sqrt();
                let logits: Vec<f64> = keys
                    .iter()
                    .map(|k| k.iter().zip(&query).map(|(a, b)| a * b).sum::<f64>() * scale)
                    .collect();
                let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
                let z: f64 = exps.iter().sum();
                let mut context = vec![0.0; h];
                for (w, v) in exps.iter().zip(&values) {
                    for (cx, vx) in context.iter_mut().zip(v) {
                        *cx += w / z * vx;
                    }
                }
                let hidden = step_stack(&net.decoder, &context, &mut dec_state);
                let joint: Vec<f64> = hidden.iter().chain(context.iter()).cloned().collect();
                out.push(affine(&net.output_map.weight, &net.output_map.bias, 2 * h, &joint)[0]);
            }
            out
        }
    }

    #[test]
    fn forward_matches_scalar_reference_at_tiny_dims() {
        let net = FollowerNet::init(
            NetConfig {
                hidden: 2,
                layers: 2,
                horizon: 3,
            },
            11,
        )
        .unwrap();
        let pos = [0.0, 0.011, 0.023];
        let vel = [0.36, 0.37, 0.365];
        let mut tape = Tape::new();
        let staged = net.stage(&mut tape);
        let out = staged.forward(&mut tape, &pos, &vel);
        let expected = reference::forward(&net, &pos, &vel);
        for (got, want) in tape.value(out).iter().zip(&expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn forward_matches_scalar_reference_at_desk_dims() {
        let net = FollowerNet::init(
            NetConfig {
                hidden: 8,
                layers: 2,
                horizon: 10,
            },
            23,
        )
        .unwrap();
        let pos: Vec<f64> = (0..10).map(|k| 0.012 * k as f64).collect();
        let vel: Vec<f64> = (0..10).map(|k| 0.35 + 0.01 * (k as f64).sin()).collect();
        let mut tape = Tape::new();
        let staged = net.stage(&mut tape);
        let out = staged.forward(&mut tape, &pos, &vel);
        let expected = reference::forward(&net, &pos, &vel);
        for (got, want) in tape.value(out).iter().zip(&expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn predict_is_deterministic_and_translation_equivariant() {
        let net = FollowerNet::init(NetConfig::desk(40), 9).unwrap();
        let w = window(250.0, 40);
        let a = net.predict(&w);
        let b = net.predict(&w);
        assert_eq!(a, b);

        let mut shifted = w.clone();
        let c = 57.0;
        for p in shifted.leader_positions.iter_mut() {
            *p += c;
        }
        for p in shifted.follower_positions.iter_mut() {
            *p += c;
        }
        let s = net.predict(&shifted);
        for (x, y) in a.iter().zip(&s) {
            assert!((x + c - y).abs() < 1e-9, "{x} + {c} vs {y}");
        }
    }

    #[test]
    fn predictions_are_finite_for_random_nets_and_windows() {
        for seed in 0..30 {
            let net = FollowerNet::init(NetConfig::desk(20), seed).unwrap();
            let w = window(seed as f64 * 13.7, 20);
            assert!(net.predict(&w).iter().all(|p| p.is_finite()));
        }
    }

    #[test]
    fn checkpoint_round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        let net = FollowerNet::init(NetConfig::desk(16), 77).unwrap();
        net.save_checkpoint(&path).unwrap();
        let loaded = FollowerNet::load_checkpoint(&path).unwrap();
        assert_eq!(net.params_flat(), loaded.params_flat());
        assert_eq!(net.config, loaded.config);
    }

    #[test]
    fn corrupted_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        let net = FollowerNet::init(NetConfig::desk(16), 77).unwrap();
        net.save_checkpoint(&path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[6] ^= 0xff; // flip a header byte
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            FollowerNet::load_checkpoint(&path),
            Err(NnError::Checkpoint(_))
        ));
        // Truncated parameter block.
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[6] ^= 0xff; // restore
        bytes.truncate(bytes.len() - 9);
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            FollowerNet::load_checkpoint(&path),
            Err(NnError::Checkpoint(_))
        ));
    }
}
