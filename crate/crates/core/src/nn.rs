//! Layers built on the tape: LSTM cell, bidirectional runner, character
//! convolution bank, additive attention and embedding tables.

use rand::Rng;

use crate::autodiff::{Tape, Var};
use crate::error::TensorError;
use crate::params::{ParamId, ParamStore};
use crate::tensor::Tensor;

type Result<T> = std::result::Result<T, TensorError>;

/// Half-width of the uniform range used for weight initialization.
pub const INIT_RANGE: f64 = 0.08;
pub const FORGET_BIAS_INIT: f64 = 1.0;
/// Convolution window sizes of the character CNN, in output order.
pub const CONV_WINDOWS: [usize; 3] = [2, 3, 4];

fn uniform<R: Rng + ?Sized>(shape: &[usize], rng: &mut R) -> Result<Tensor> {
    Tensor::uniform_with(shape, rng, INIT_RANGE)
}

/// Single-layer LSTM cell without peepholes.
///
/// The four gates are stored stacked in the order input, forget, output,
/// candidate: `w` is `4h × input`, `u` is `4h × h` and `b` has length `4h`.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    pub w: ParamId,
    pub u: ParamId,
    pub b: ParamId,
    pub input_dim: usize,
    pub hidden_dim: usize,
}

impl LstmParams {
    pub fn init<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let w = store.add(format!("{prefix}.w"), uniform(&[4 * hidden_dim, input_dim], rng)?);
        let u = store.add(format!("{prefix}.u"), uniform(&[4 * hidden_dim, hidden_dim], rng)?);
        let mut bias = vec![0.0; 4 * hidden_dim];
        bias[hidden_dim..2 * hidden_dim].fill(FORGET_BIAS_INIT);
        let b = store.add(format!("{prefix}.b"), Tensor::vector(bias)?);
        Ok(Self {
            w,
            u,
            b,
            input_dim,
            hidden_dim,
        })
    }

    /// One step: returns `(h_t, c_t)`.
    pub fn step(&self, tape: &mut Tape, x: Var, h_prev: Var, c_prev: Var) -> Result<(Var, Var)> {
        let h = self.hidden_dim;
        for (v, expect) in [(x, self.input_dim), (h_prev, h), (c_prev, h)] {
            if tape.value(v).shape() != [expect] {
                return Err(TensorError::ShapeMismatch {
                    op: "lstm_step",
                    left: vec![expect],
                    right: tape.value(v).shape().to_vec(),
                });
            }
        }
        let (w, u, b) = (tape.param(self.w), tape.param(self.u), tape.param(self.b));
        let wx = tape.matmul(w, x)?;
        let uh = tape.matmul(u, h_prev)?;
        let pre = tape.add(wx, uh)?;
        let pre = tape.add(pre, b)?;
        let i_pre = tape.slice(pre, 0, h)?;
        let f_pre = tape.slice(pre, h, h)?;
        let o_pre = tape.slice(pre, 2 * h, h)?;
        let g_pre = tape.slice(pre, 3 * h, h)?;
        let i = tape.sigmoid(i_pre)?;
        let f = tape.sigmoid(f_pre)?;
        let o = tape.sigmoid(o_pre)?;
        let g = tape.tanh(g_pre)?;
        let fc = tape.mul(f, c_prev)?;
        let ig = tape.mul(i, g)?;
        let c = tape.add(fc, ig)?;
        let tc = tape.tanh(c)?;
        let h_t = tape.mul(o, tc)?;
        Ok((h_t, c))
    }

    /// Runs the cell over `seq` from zero state, returning every hidden state.
    pub fn run(&self, tape: &mut Tape, seq: &[Var]) -> Result<Vec<Var>> {
        let zeros = Tensor::zeros(&[self.hidden_dim])?;
        let mut h = tape.constant(zeros.clone())?;
        let mut c = tape.constant(zeros)?;
        let mut out = Vec::with_capacity(seq.len());
        for &x in seq {
            (h, c) = self.step(tape, x, h, c)?;
            out.push(h);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiLstmParams {
    pub forward: LstmParams,
    pub backward: LstmParams,
}

/// Result of a bidirectional pass over a sequence of length `n`.
#[derive(Clone, Debug)]
pub struct BiLstmOutput {
    /// `states[t] = [h→_t; h←_t]`.
    pub states: Vec<Var>,
    /// `h→_n`, the forward state after the last element.
    pub final_forward: Var,
    /// `h←_1`, the backward state after reading back to the first element.
    pub final_backward: Var,
}

impl BiLstmParams {
    pub fn init<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let forward = LstmParams::init(store, &format!("{prefix}.fwd"), input_dim, hidden_dim, rng)?;
        let backward = LstmParams::init(store, &format!("{prefix}.bwd"), input_dim, hidden_dim, rng)?;
        Ok(Self { forward, backward })
    }

    pub fn output_dim(&self) -> usize {
        2 * self.forward.hidden_dim
    }

    pub fn run(&self, tape: &mut Tape, seq: &[Var]) -> Result<BiLstmOutput> {
        if seq.is_empty() {
            return Err(TensorError::Empty { op: "bilstm_run" });
        }
        let fwd = self.forward.run(tape, seq)?;
        let reversed: Vec<Var> = seq.iter().rev().copied().collect();
        let mut bwd = self.backward.run(tape, &reversed)?;
        bwd.reverse();
        let states = fwd
            .iter()
            .zip(&bwd)
            .map(|(&f, &b)| tape.concat(&[f, b]))
            .collect::<Result<Vec<_>>>()?;
        Ok(BiLstmOutput {
            states,
            final_forward: *fwd.last().unwrap(),
            final_backward: bwd[0],
        })
    }
}

/// Number of filters per window so that the pooled output has `total` values.
/// The remainder goes to the smallest windows first: 100 → 34, 33, 33.
pub fn filter_counts(total: usize) -> [usize; 3] {
    let base = total / 3;
    let extra = total % 3;
    let mut counts = [base; 3];
    for c in counts.iter_mut().take(extra) {
        *c += 1;
    }
    counts
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvWindow {
    pub width: usize,
    /// `num_filters × (width · embed_dim)`; row `f` is filter `f` applied to a
    /// window flattened position-major.
    pub filters: ParamId,
    pub bias: ParamId,
    pub num_filters: usize,
}

/// Convolution filters with windows 2, 3 and 4 over character embeddings.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvFilterBank {
    pub windows: Vec<ConvWindow>,
    pub embed_dim: usize,
}

impl ConvFilterBank {
    pub fn init<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        embed_dim: usize,
        output_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let counts = filter_counts(output_dim);
        if counts.contains(&0) {
            return Err(TensorError::ZeroDim {
                shape: counts.to_vec(),
            });
        }
        let mut windows = Vec::with_capacity(3);
        for (&width, &num_filters) in CONV_WINDOWS.iter().zip(&counts) {
            let filters = store.add(
                format!("{prefix}.w{width}"),
                uniform(&[num_filters, width * embed_dim], rng)?,
            );
            let bias = store.add(format!("{prefix}.b{width}"), Tensor::zeros(&[num_filters])?);
            windows.push(ConvWindow {
                width,
                filters,
                bias,
                num_filters,
            });
        }
        Ok(Self { windows, embed_dim })
    }

    pub fn output_dim(&self) -> usize {
        self.windows.iter().map(|w| w.num_filters).sum()
    }

    /// Feature maps for each window, one row per filter and one column per
    /// window position. `embeds` must already be padded to at least the
    /// widest window.
    pub fn feature_maps(&self, tape: &mut Tape, embeds: &[Var]) -> Result<Vec<Var>> {
        let widest = CONV_WINDOWS[CONV_WINDOWS.len() - 1];
        if embeds.len() < widest {
            return Err(TensorError::Index {
                op: "char_conv",
                index: widest,
                bound: embeds.len(),
            });
        }
        let mut maps = Vec::with_capacity(self.windows.len());
        for win in &self.windows {
            let positions = embeds.len() - win.width + 1;
            let mut rows = Vec::with_capacity(positions);
            for p in 0..positions {
                rows.push(tape.concat(&embeds[p..p + win.width])?);
            }
            let unfolded = tape.stack_rows(&rows)?;
            let columns = tape.transpose(unfolded)?;
            let f = tape.param(win.filters);
            let b = tape.param(win.bias);
            let raw = tape.matmul(f, columns)?;
            maps.push(tape.add_row_bias(raw, b)?);
        }
        Ok(maps)
    }

    /// 1-max pooling of each filter, concatenated in window order.
    pub fn pooled(&self, tape: &mut Tape, embeds: &[Var]) -> Result<Var> {
        let maps = self.feature_maps(tape, embeds)?;
        let pooled = maps
            .into_iter()
            .map(|m| tape.rowmax(m))
            .collect::<Result<Vec<_>>>()?;
        tape.concat(&pooled)
    }
}

/// Additive attention: `e_t = vᵀ tanh(W_dec s + W_enc a_t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionParams {
    pub w_dec: ParamId,
    pub w_enc: ParamId,
    pub v: ParamId,
    pub att_dim: usize,
}

/// Annotation-side terms that stay fixed for a whole target sentence.
#[derive(Clone, Copy, Debug)]
pub struct AttentionKeys {
    /// `annotation_dim × n`, annotations as columns.
    pub annotations: Var,
    /// `att_dim × n`, `W_enc a_t` as columns.
    pub projected: Var,
}

impl AttentionParams {
    pub fn init<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        att_dim: usize,
        decoder_dim: usize,
        annotation_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let w_dec = store.add(format!("{prefix}.w_dec"), uniform(&[att_dim, decoder_dim], rng)?);
        let w_enc = store.add(format!("{prefix}.w_enc"), uniform(&[att_dim, annotation_dim], rng)?);
        let v = store.add(format!("{prefix}.v"), uniform(&[att_dim], rng)?);
        Ok(Self {
            w_dec,
            w_enc,
            v,
            att_dim,
        })
    }

    pub fn keys(&self, tape: &mut Tape, annotations: &[Var]) -> Result<AttentionKeys> {
        if annotations.is_empty() {
            return Err(TensorError::Empty { op: "attention" });
        }
        let rows = tape.stack_rows(annotations)?;
        let cols = tape.transpose(rows)?;
        let w_enc = tape.param(self.w_enc);
        let projected = tape.matmul(w_enc, cols)?;
        Ok(AttentionKeys {
            annotations: cols,
            projected,
        })
    }

    /// Returns `(context, weights)` for decoder state `s`.
    pub fn context(&self, tape: &mut Tape, keys: &AttentionKeys, s: Var) -> Result<(Var, Var)> {
        let w_dec = tape.param(self.w_dec);
        let query = tape.matmul(w_dec, s)?;
        let summed = tape.add_row_bias(keys.projected, query)?;
        let act = tape.tanh(summed)?;
        let by_position = tape.transpose(act)?;
        let v = tape.param(self.v);
        let scores = tape.matmul(by_position, v)?;
        let weights = tape.softmax(scores)?;
        let context = tape.matmul(keys.annotations, weights)?;
        Ok((context, weights))
    }
}

/// Convenience wrapper computing keys and context in one call.
pub fn attention_context(
    p: &AttentionParams,
    tape: &mut Tape,
    decoder_state: Var,
    annotations: &[Var],
) -> Result<(Var, Var)> {
    let keys = p.keys(tape, annotations)?;
    p.context(tape, &keys, decoder_state)
}

/// Lookup table with one row per vocabulary entry.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    pub matrix: ParamId,
    pub vocab_size: usize,
    pub dim: usize,
    /// Frozen tables are read as constants, so no gradient reaches them.
    pub trainable: bool,
}

impl EmbeddingTable {
    pub fn new(store: &mut ParamStore, name: &str, matrix: Tensor, trainable: bool) -> Result<Self> {
        let (vocab_size, dim) = match matrix.shape() {
            [r, c] => (*r, *c),
            other => {
                return Err(TensorError::Rank { rank: other.len() });
            }
        };
        let matrix = store.add(name, matrix);
        Ok(Self {
            matrix,
            vocab_size,
            dim,
            trainable,
        })
    }

    pub fn lookup(&self, tape: &mut Tape, index: usize) -> Result<Var> {
        if self.trainable {
            let m = tape.param(self.matrix);
            tape.row(m, index)
        } else {
            if index >= self.vocab_size {
                return Err(TensorError::Index {
                    op: "embedding",
                    index,
                    bound: self.vocab_size,
                });
            }
            let row = tape.params().get(self.matrix).row(index).to_vec();
            tape.constant(Tensor::vector(row)?)
        }
    }
}

/// Affine map `W x + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
}

impl Linear {
    pub fn init<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        output_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let w = store.add(format!("{prefix}.w"), uniform(&[output_dim, input_dim], rng)?);
        let b = store.add(format!("{prefix}.b"), Tensor::zeros(&[output_dim])?);
        Ok(Self { w, b })
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let w = tape.param(self.w);
        let b = tape.param(self.b);
        let wx = tape.matmul(w, x)?;
        tape.add(wx, b)
    }
}
