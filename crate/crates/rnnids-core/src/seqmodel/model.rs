//! Model structure and the forward pass.
//!
//! Each layer owns four input weight matrices, four recurrent weight
//! matrices, and four bias vectors. A cell step computes
//!
//! ```text
//! i = σ(W_i x + R_i h' + b_i)      f = σ(W_f x + R_f h' + b_f)
//! o = σ(W_o x + R_o h' + b_o)      z = tanh(W_z x + R_z h' + b_z)
//! c = f ∘ c' + i ∘ z               h = o ∘ tanh(c)
//! ```
//!
//! with `h'`, `c'` the previous hidden and cell state and `∘` the
//! elementwise product. Tokens enter through an embedding table and the top
//! layer's hidden state maps to vocabulary logits through a linear
//! projection; the training objective is next-token cross-entropy.

use ndarray::{Array1, Array2};
use rand::Rng;

use super::corpus::Vocab;
use super::LstmConfig;
use super::SeqModelError;

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Weights and biases of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayerParams {
    pub w_i: Array2<f64>,
    pub w_f: Array2<f64>,
    pub w_z: Array2<f64>,
    pub w_o: Array2<f64>,
    pub r_i: Array2<f64>,
    pub r_f: Array2<f64>,
    pub r_z: Array2<f64>,
    pub r_o: Array2<f64>,
    pub b_i: Array1<f64>,
    pub b_f: Array1<f64>,
    pub b_z: Array1<f64>,
    pub b_o: Array1<f64>,
}

pub(crate) const INIT_RANGE: f64 = 0.08;
pub(crate) const FORGET_BIAS_INIT: f64 = 1.0;

impl LstmLayerParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        LstmLayerParams {
            w_i: Array2::zeros((hidden, input_dim)),
            w_f: Array2::zeros((hidden, input_dim)),
            w_z: Array2::zeros((hidden, input_dim)),
            w_o: Array2::zeros((hidden, input_dim)),
            r_i: Array2::zeros((hidden, hidden)),
            r_f: Array2::zeros((hidden, hidden)),
            r_z: Array2::zeros((hidden, hidden)),
            r_o: Array2::zeros((hidden, hidden)),
            b_i: Array1::zeros(hidden),
            b_f: Array1::zeros(hidden),
            b_z: Array1::zeros(hidden),
            b_o: Array1::zeros(hidden),
        }
    }

    /// Uniform init in ±[`INIT_RANGE`]; the forget-gate bias starts at 1 so
    /// early cell state survives long enough to learn from.
    pub(crate) fn init<R: Rng>(rng: &mut R, input_dim: usize, hidden: usize) -> Self {
        let mut p = Self::zeros(input_dim, hidden);
        for m in [&mut p.w_i, &mut p.w_f, &mut p.w_z, &mut p.w_o] {
            m.mapv_inplace(|_| rng.gen_range(-INIT_RANGE..=INIT_RANGE));
        }
        for m in [&mut p.r_i, &mut p.r_f, &mut p.r_z, &mut p.r_o] {
            m.mapv_inplace(|_| rng.gen_range(-INIT_RANGE..=INIT_RANGE));
        }
        for v in [&mut p.b_i, &mut p.b_z, &mut p.b_o] {
            v.mapv_inplace(|_| rng.gen_range(-INIT_RANGE..=INIT_RANGE));
        }
        p.b_f.fill(FORGET_BIAS_INIT);
        p
    }

    pub fn hidden_size(&self) -> usize {
        self.r_i.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.w_i.ncols()
    }
}

/// Per-layer hidden and cell state vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<Array1<f64>>,
    pub c: Vec<Array1<f64>>,
}

impl LstmState {
    pub fn zeros(layers: &[LstmLayerParams]) -> Self {
        LstmState {
            h: layers
                .iter()
                .map(|l| Array1::zeros(l.hidden_size()))
                .collect(),
            c: layers
                .iter()
                .map(|l| Array1::zeros(l.hidden_size()))
                .collect(),
        }
    }
}

/// Everything a cell step computed, retained for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct CellCache {
    pub x: Array1<f64>,
    pub h_prev: Array1<f64>,
    pub c_prev: Array1<f64>,
    pub i: Array1<f64>,
    pub f: Array1<f64>,
    pub o: Array1<f64>,
    pub z: Array1<f64>,
    pub c: Array1<f64>,
    pub h: Array1<f64>,
}

pub(crate) fn cell_forward(
    params: &LstmLayerParams,
    x: &Array1<f64>,
    h_prev: &Array1<f64>,
    c_prev: &Array1<f64>,
) -> CellCache {
    let i = (params.w_i.dot(x) + params.r_i.dot(h_prev) + &params.b_i).mapv(sigmoid);
    let f = (params.w_f.dot(x) + params.r_f.dot(h_prev) + &params.b_f).mapv(sigmoid);
    let o = (params.w_o.dot(x) + params.r_o.dot(h_prev) + &params.b_o).mapv(sigmoid);
    let z = (params.w_z.dot(x) + params.r_z.dot(h_prev) + &params.b_z).mapv(f64::tanh);
    let c = &f * c_prev + &i * &z;
    let h = &o * &c.mapv(f64::tanh);
    CellCache {
        x: x.clone(),
        h_prev: h_prev.clone(),
        c_prev: c_prev.clone(),
        i,
        f,
        o,
        z,
        c,
        h,
    }
}

/// One LSTM cell update; returns the new hidden and cell state.
pub fn lstm_cell_step(
    params: &LstmLayerParams,
    x: &Array1<f64>,
    h_prev: &Array1<f64>,
    c_prev: &Array1<f64>,
) -> Result<(Array1<f64>, Array1<f64>), SeqModelError> {
    let hidden = params.hidden_size();
    if x.len() != params.input_dim() || h_prev.len() != hidden || c_prev.len() != hidden {
        return Err(SeqModelError::ShapeMismatch {
            expected: format!("x[{}], h[{hidden}], c[{hidden}]", params.input_dim()),
            got: format!("x[{}], h[{}], c[{}]", x.len(), h_prev.len(), c_prev.len()),
        });
    }
    let cache = cell_forward(params, x, h_prev, c_prev);
    Ok((cache.h, cache.c))
}

/// Trained byte model: stacked layers, the token embedding, the logit
/// projection, and the vocabulary/configuration it was built with.
#[derive(Debug, Clone)]
pub struct LstmModel {
    pub layers: Vec<LstmLayerParams>,
    /// vocab × embedding_size.
    pub embedding: Array2<f64>,
    /// vocab × hidden size of the top layer.
    pub w_out: Array2<f64>,
    pub b_out: Array1<f64>,
    pub vocab: Vocab,
    pub config: LstmConfig,
}

impl LstmModel {
    /// Randomly initialized model for `vocab` under `config`, with
    /// `hidden_size` already resolved in the config.
    pub fn init<R: Rng>(rng: &mut R, vocab: Vocab, config: LstmConfig) -> LstmModel {
        let hidden = config
            .hidden_size
            .expect("hidden_size must be resolved before init");
        let mut layers = Vec::with_capacity(config.num_hidden_layers);
        for k in 0..config.num_hidden_layers {
            let input_dim = if k == 0 {
                config.embedding_size
            } else {
                hidden
            };
            layers.push(LstmLayerParams::init(rng, input_dim, hidden));
        }
        let mut embedding = Array2::zeros((vocab.len(), config.embedding_size));
        embedding.mapv_inplace(|_: f64| rng.gen_range(-INIT_RANGE..=INIT_RANGE));
        let mut w_out = Array2::zeros((vocab.len(), hidden));
        w_out.mapv_inplace(|_: f64| rng.gen_range(-INIT_RANGE..=INIT_RANGE));
        let b_out = Array1::zeros(vocab.len());
        LstmModel {
            layers,
            embedding,
            w_out,
            b_out,
            vocab,
            config,
        }
    }

    pub fn zero_state(&self) -> LstmState {
        LstmState::zeros(&self.layers)
    }

    /// Advances the state by one token and returns the logits for the next
    /// token.
    pub fn step(&self, token: usize, state: &mut LstmState) -> Array1<f64> {
        let mut x = self.embedding.row(token).to_owned();
        for (k, layer) in self.layers.iter().enumerate() {
            let cache = cell_forward(layer, &x, &state.h[k], &state.c[k]);
            x = cache.h.clone();
            state.h[k] = cache.h;
            state.c[k] = cache.c;
        }
        self.w_out.dot(&x) + &self.b_out
    }

    /// As [`LstmModel::step`] but retaining per-layer caches for BPTT.
    pub(crate) fn step_cached(&self, token: usize, state: &mut LstmState) -> StepCache {
        let mut x = self.embedding.row(token).to_owned();
        let mut layer_caches = Vec::with_capacity(self.layers.len());
        for (k, layer) in self.layers.iter().enumerate() {
            let cache = cell_forward(layer, &x, &state.h[k], &state.c[k]);
            x = cache.h.clone();
            state.h[k] = cache.h.clone();
            state.c[k] = cache.c.clone();
            layer_caches.push(cache);
        }
        let logits = self.w_out.dot(&x) + &self.b_out;
        StepCache {
            token,
            layer_caches,
            logits,
        }
    }
}

pub(crate) struct StepCache {
    pub token: usize,
    pub layer_caches: Vec<CellCache>,
    pub logits: Array1<f64>,
}

/// `-ln softmax(logits)[target]` computed via log-sum-exp, plus the
/// softmax probabilities.
pub(crate) fn cross_entropy(logits: &Array1<f64>, target: usize) -> (f64, Array1<f64>) {
    let max = logits.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let exps = logits.mapv(|v| (v - max).exp());
    let sum: f64 = exps.sum();
    let probs = exps / sum;
    let loss = sum.ln() + max - logits[target];
    (loss, probs)
}

/// Mean next-token cross-entropy over the corpus, with state threaded
/// across the whole sequence.
pub fn forward_loss(model: &LstmModel, tokens: &[usize]) -> Result<f64, SeqModelError> {
    if tokens.len() < 2 {
        return Err(SeqModelError::TooShort { len: tokens.len() });
    }
    let mut state = model.zero_state();
    let mut total = 0.0;
    for t in 0..tokens.len() - 1 {
        let logits = model.step(tokens[t], &mut state);
        let (loss, _) = cross_entropy(&logits, tokens[t + 1]);
        total += loss;
    }
    Ok(total / (tokens.len() - 1) as f64)
}
