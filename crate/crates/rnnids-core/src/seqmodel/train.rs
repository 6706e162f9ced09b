//! Training: truncated backpropagation through time with Adam updates and
//! global gradient-norm clipping.
//!
//! The corpus is walked in windows of `sequence_length` steps. Hidden and
//! cell state carry across windows within an epoch (and reset between
//! epochs), but gradients do not flow across window boundaries. Each window
//! produces the gradient of its mean next-token cross-entropy; windows are
//! averaged in groups of `batch_size` before every parameter update.

use ndarray::{Array1, Array2};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::corpus::TokenCorpus;
use super::model::{LstmLayerParams, LstmModel, LstmState, StepCache};
use super::{LstmConfig, SeqModelError};

pub(crate) struct LayerGrads {
    w_i: Array2<f64>,
    w_f: Array2<f64>,
    w_z: Array2<f64>,
    w_o: Array2<f64>,
    r_i: Array2<f64>,
    r_f: Array2<f64>,
    r_z: Array2<f64>,
    r_o: Array2<f64>,
    b_i: Array1<f64>,
    b_f: Array1<f64>,
    b_z: Array1<f64>,
    b_o: Array1<f64>,
}

impl LayerGrads {
    fn zeros_like(p: &LstmLayerParams) -> Self {
        LayerGrads {
            w_i: Array2::zeros(p.w_i.raw_dim()),
            w_f: Array2::zeros(p.w_f.raw_dim()),
            w_z: Array2::zeros(p.w_z.raw_dim()),
            w_o: Array2::zeros(p.w_o.raw_dim()),
            r_i: Array2::zeros(p.r_i.raw_dim()),
            r_f: Array2::zeros(p.r_f.raw_dim()),
            r_z: Array2::zeros(p.r_z.raw_dim()),
            r_o: Array2::zeros(p.r_o.raw_dim()),
            b_i: Array1::zeros(p.b_i.raw_dim()),
            b_f: Array1::zeros(p.b_f.raw_dim()),
            b_z: Array1::zeros(p.b_z.raw_dim()),
            b_o: Array1::zeros(p.b_o.raw_dim()),
        }
    }
}

/// Gradient of a loss with respect to every model parameter, in the same
/// canonical tensor order the model itself uses.
pub struct ModelGrads {
    pub(crate) layers: Vec<LayerGrads>,
    pub(crate) embedding: Array2<f64>,
    pub(crate) w_out: Array2<f64>,
    pub(crate) b_out: Array1<f64>,
}

impl ModelGrads {
    pub(crate) fn zeros_like(model: &LstmModel) -> Self {
        ModelGrads {
            layers: model.layers.iter().map(LayerGrads::zeros_like).collect(),
            embedding: Array2::zeros(model.embedding.raw_dim()),
            w_out: Array2::zeros(model.w_out.raw_dim()),
            b_out: Array1::zeros(model.b_out.raw_dim()),
        }
    }

    fn for_each_tensor(&self, mut f: impl FnMut(&[f64])) {
        for l in &self.layers {
            for m in [
                &l.w_i, &l.w_f, &l.w_z, &l.w_o, &l.r_i, &l.r_f, &l.r_z, &l.r_o,
            ] {
                f(m.as_slice().unwrap());
            }
            for v in [&l.b_i, &l.b_f, &l.b_z, &l.b_o] {
                f(v.as_slice().unwrap());
            }
        }
        f(self.embedding.as_slice().unwrap());
        f(self.w_out.as_slice().unwrap());
        f(self.b_out.as_slice().unwrap());
    }

    fn for_each_tensor_mut(&mut self, mut f: impl FnMut(&mut [f64])) {
        for l in &mut self.layers {
            for m in [
                &mut l.w_i, &mut l.w_f, &mut l.w_z, &mut l.w_o, &mut l.r_i, &mut l.r_f, &mut l.r_z,
                &mut l.r_o,
            ] {
                f(m.as_slice_mut().unwrap());
            }
            for v in [&mut l.b_i, &mut l.b_f, &mut l.b_z, &mut l.b_o] {
                f(v.as_slice_mut().unwrap());
            }
        }
        f(self.embedding.as_slice_mut().unwrap());
        f(self.w_out.as_slice_mut().unwrap());
        f(self.b_out.as_slice_mut().unwrap());
    }

    /// Flat copy of all gradients in canonical order.
    pub fn param_vec(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.for_each_tensor(|s| out.extend_from_slice(s));
        out
    }

    fn zero(&mut self) {
        self.for_each_tensor_mut(|s| s.fill(0.0));
    }

    fn scale(&mut self, k: f64) {
        self.for_each_tensor_mut(|s| {
            for v in s {
                *v *= k;
            }
        });
    }

    fn global_norm(&self) -> f64 {
        let mut acc = 0.0;
        self.for_each_tensor(|s| {
            for v in s {
                acc += v * v;
            }
        });
        acc.sqrt()
    }
}

impl LstmModel {
    fn for_each_param_tensor(&self, mut f: impl FnMut(&[f64])) {
        for l in &self.layers {
            for m in [
                &l.w_i, &l.w_f, &l.w_z, &l.w_o, &l.r_i, &l.r_f, &l.r_z, &l.r_o,
            ] {
                f(m.as_slice().unwrap());
            }
            for v in [&l.b_i, &l.b_f, &l.b_z, &l.b_o] {
                f(v.as_slice().unwrap());
            }
        }
        f(self.embedding.as_slice().unwrap());
        f(self.w_out.as_slice().unwrap());
        f(self.b_out.as_slice().unwrap());
    }

    fn for_each_param_tensor_mut(&mut self, mut f: impl FnMut(&mut [f64])) {
        for l in &mut self.layers {
            for m in [
                &mut l.w_i, &mut l.w_f, &mut l.w_z, &mut l.w_o, &mut l.r_i, &mut l.r_f, &mut l.r_z,
                &mut l.r_o,
            ] {
                f(m.as_slice_mut().unwrap());
            }
            for v in [&mut l.b_i, &mut l.b_f, &mut l.b_z, &mut l.b_o] {
                f(v.as_slice_mut().unwrap());
            }
        }
        f(self.embedding.as_slice_mut().unwrap());
        f(self.w_out.as_slice_mut().unwrap());
        f(self.b_out.as_slice_mut().unwrap());
    }

    /// All parameters flattened in canonical tensor order (the order the
    /// on-disk format uses as well).
    pub fn param_vec(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.for_each_param_tensor(|s| out.extend_from_slice(s));
        out
    }

    /// Overwrites all parameters from a flat vector in canonical order.
    pub fn load_param_vec(&mut self, v: &[f64]) -> Result<(), SeqModelError> {
        let expected: usize = {
            let mut n = 0;
            self.for_each_param_tensor(|s| n += s.len());
            n
        };
        if v.len() != expected {
            return Err(SeqModelError::ShapeMismatch {
                expected: format!("{expected} parameters"),
                got: format!("{}", v.len()),
            });
        }
        let mut off = 0;
        self.for_each_param_tensor_mut(|s| {
            s.copy_from_slice(&v[off..off + s.len()]);
            off += s.len();
        });
        Ok(())
    }

    fn apply_step(&mut self, step: &[f64]) {
        let mut off = 0;
        self.for_each_param_tensor_mut(|s| {
            for v in s.iter_mut() {
                *v -= step[off];
                off += 1;
            }
        });
    }
}

/// Adam moment estimates, flat and aligned with the canonical tensor order.
struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl AdamState {
    fn new(param_count: usize) -> Self {
        AdamState {
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            t: 0,
        }
    }

    /// Bias-corrected Adam step for gradient `g`, scaled by `lr`.
    fn step(&mut self, g: &[f64], lr: f64, out: &mut Vec<f64>) {
        self.t += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.t as i32);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.t as i32);
        out.clear();
        out.reserve(g.len());
        for ((m, v), &gk) in self.m.iter_mut().zip(self.v.iter_mut()).zip(g) {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * gk;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * gk * gk;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            out.push(lr * m_hat / (v_hat.sqrt() + ADAM_EPS));
        }
    }
}

/// row(u) outer product accumulate: `acc += u vᵀ`.
fn add_outer(acc: &mut Array2<f64>, u: &Array1<f64>, v: &Array1<f64>) {
    for (i, &ui) in u.iter().enumerate() {
        if ui != 0.0 {
            acc.row_mut(i).scaled_add(ui, v);
        }
    }
}

/// Runs one BPTT window over `tokens` (inputs plus one trailing target per
/// step). Accumulates the gradient of the window's mean loss into `grads`,
/// advances `state`, and returns the mean loss.
fn bptt_window(
    model: &LstmModel,
    tokens: &[usize],
    state: &mut LstmState,
    grads: &mut ModelGrads,
) -> f64 {
    let positions = tokens.len() - 1;
    let scale = 1.0 / positions as f64;

    let mut caches: Vec<StepCache> = Vec::with_capacity(positions);
    let mut probs: Vec<Array1<f64>> = Vec::with_capacity(positions);
    let mut total_loss = 0.0;
    for t in 0..positions {
        let cache = model.step_cached(tokens[t], state);
        let (loss, p) = super::model::cross_entropy(&cache.logits, tokens[t + 1]);
        total_loss += loss;
        caches.push(cache);
        probs.push(p);
    }

    let num_layers = model.layers.len();
    let mut dh_next: Vec<Array1<f64>> = model
        .layers
        .iter()
        .map(|l| Array1::zeros(l.hidden_size()))
        .collect();
    let mut dc_next: Vec<Array1<f64>> = model
        .layers
        .iter()
        .map(|l| Array1::zeros(l.hidden_size()))
        .collect();

    for t in (0..positions).rev() {
        let cache = &caches[t];
        let mut dlogits = probs[t].clone();
        dlogits[tokens[t + 1]] -= 1.0;
        dlogits *= scale;

        let h_top = &cache.layer_caches[num_layers - 1].h;
        add_outer(&mut grads.w_out, &dlogits, h_top);
        grads.b_out += &dlogits;
        let mut dh_above = model.w_out.t().dot(&dlogits);

        for k in (0..num_layers).rev() {
            let cc = &cache.layer_caches[k];
            let layer = &model.layers[k];
            let lg = &mut grads.layers[k];

            let dh = &dh_above + &dh_next[k];
            let tanh_c = cc.c.mapv(f64::tanh);
            let dc = &dc_next[k] + &(&dh * &cc.o * &tanh_c.mapv(|v| 1.0 - v * v));

            let do_pre = &dh * &tanh_c * &cc.o * &cc.o.mapv(|v| 1.0 - v);
            let df_pre = &dc * &cc.c_prev * &cc.f * &cc.f.mapv(|v| 1.0 - v);
            let di_pre = &dc * &cc.z * &cc.i * &cc.i.mapv(|v| 1.0 - v);
            let dz_pre = &dc * &cc.i * &cc.z.mapv(|v| 1.0 - v * v);

            add_outer(&mut lg.w_i, &di_pre, &cc.x);
            add_outer(&mut lg.w_f, &df_pre, &cc.x);
            add_outer(&mut lg.w_z, &dz_pre, &cc.x);
            add_outer(&mut lg.w_o, &do_pre, &cc.x);
            add_outer(&mut lg.r_i, &di_pre, &cc.h_prev);
            add_outer(&mut lg.r_f, &df_pre, &cc.h_prev);
            add_outer(&mut lg.r_z, &dz_pre, &cc.h_prev);
            add_outer(&mut lg.r_o, &do_pre, &cc.h_prev);
            lg.b_i += &di_pre;
            lg.b_f += &df_pre;
            lg.b_z += &dz_pre;
            lg.b_o += &do_pre;

            let dx = layer.w_i.t().dot(&di_pre)
                + layer.w_f.t().dot(&df_pre)
                + layer.w_z.t().dot(&dz_pre)
                + layer.w_o.t().dot(&do_pre);
            dh_next[k] = layer.r_i.t().dot(&di_pre)
                + layer.r_f.t().dot(&df_pre)
                + layer.r_z.t().dot(&dz_pre)
                + layer.r_o.t().dot(&do_pre);
            dc_next[k] = &dc * &cc.f;

            dh_above = dx;
        }

        grads
            .embedding
            .row_mut(cache.token)
            .scaled_add(1.0, &dh_above);
    }

    total_loss * scale
}

/// Loss and its gradient over the whole token sequence as one BPTT window
/// (no truncation), for gradient checking against finite differences of
/// [`super::model::forward_loss`].
pub fn loss_gradients(
    model: &LstmModel,
    tokens: &[usize],
) -> Result<(f64, ModelGrads), SeqModelError> {
    if tokens.len() < 2 {
        return Err(SeqModelError::TooShort { len: tokens.len() });
    }
    let mut grads = ModelGrads::zeros_like(model);
    let mut state = model.zero_state();
    let loss = bptt_window(model, tokens, &mut state, &mut grads);
    Ok((loss, grads))
}

/// A trained model plus its per-epoch loss trace.
pub struct TrainOutcome {
    pub model: LstmModel,
    pub loss_trace: Vec<f64>,
}

/// Trains a fresh model on the corpus. Deterministic for a given
/// `config.rng_seed`; fails with `TrainingDiverged` if an epoch's mean loss
/// stops being finite.
pub fn train(corpus: &TokenCorpus, config: &LstmConfig) -> Result<TrainOutcome, SeqModelError> {
    config.validate()?;
    if corpus.tokens.len() < 2 {
        return Err(SeqModelError::TooShort {
            len: corpus.tokens.len(),
        });
    }

    let mut resolved = config.clone();
    resolved.hidden_size = Some(config.resolved_hidden_size(corpus.tokens.len()));

    let mut rng = ChaCha8Rng::seed_from_u64(resolved.rng_seed);
    let mut model = LstmModel::init(&mut rng, corpus.vocab.clone(), resolved.clone());

    let tokens = &corpus.tokens;
    let positions = tokens.len() - 1;
    let window = resolved.sequence_length.min(positions);

    let mut grads = ModelGrads::zeros_like(&model);
    let mut adam = AdamState::new(model.param_vec().len());
    let mut flat_grads: Vec<f64> = Vec::new();
    let mut step_buf: Vec<f64> = Vec::new();
    let mut loss_trace = Vec::with_capacity(resolved.epochs);

    for epoch in 0..resolved.epochs {
        let mut state = model.zero_state();
        let mut epoch_loss = 0.0;
        let mut pending = 0usize;
        let mut pos = 0usize;

        while pos < positions {
            let w = window.min(positions - pos);
            let chunk = &tokens[pos..pos + w + 1];
            let mean = bptt_window(&model, chunk, &mut state, &mut grads);
            epoch_loss += mean * w as f64;
            pending += 1;
            pos += w;

            if pending == resolved.batch_size || pos >= positions {
                if pending > 1 {
                    grads.scale(1.0 / pending as f64);
                }
                if resolved.grad_clip > 0.0 {
                    let norm = grads.global_norm();
                    if norm > resolved.grad_clip {
                        grads.scale(resolved.grad_clip / norm);
                    }
                }
                flat_grads.clear();
                grads.for_each_tensor(|s| flat_grads.extend_from_slice(s));
                adam.step(&flat_grads, resolved.learning_rate, &mut step_buf);
                model.apply_step(&step_buf);
                grads.zero();
                pending = 0;
            }
        }

        let mean_epoch_loss = epoch_loss / positions as f64;
        if !mean_epoch_loss.is_finite() {
            return Err(SeqModelError::TrainingDiverged { epoch });
        }
        loss_trace.push(mean_epoch_loss);
    }

    Ok(TrainOutcome { model, loss_trace })
}
