//! From-scratch multi-layer LSTM byte model: corpus preprocessing, training
//! with truncated BPTT, sampling, and a versioned on-disk format.
//!
//! Training is single-threaded and deterministic for a given seed. Trained
//! models are immutable and safe to share across threads; concurrent
//! forward or sampling calls each own their state and rng.

mod corpus;
mod model;
mod persist;
mod sample;
mod train;

pub use corpus::{encode_corpus, TokenCorpus, Vocab};
pub use model::{forward_loss, lstm_cell_step, LstmLayerParams, LstmModel, LstmState};
pub use persist::{load_model, read_model, save_model, write_model, MODEL_MAGIC};
pub use sample::sample;
pub use train::{loss_gradients, train, ModelGrads, TrainOutcome};

use thiserror::Error;

/// Per-layer hidden width is sized to the corpus length when not set
/// explicitly, capped here to bound desk-scale memory and runtime.
pub const HIDDEN_SIZE_CAP: usize = 512;

/// Training and sampling configuration. The defaults are batch size 1,
/// learning rate 0.001, 100 epochs, 2 hidden layers, embedding width 64,
/// and sequence length 1 (per-step updates with state carried across the
/// corpus).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub num_hidden_layers: usize,
    pub embedding_size: usize,
    pub sequence_length: usize,
    /// `None` sizes each hidden layer to `min(corpus_len, HIDDEN_SIZE_CAP)`
    /// at training time.
    pub hidden_size: Option<usize>,
    pub rng_seed: u64,
    /// Sampling temperature; values <= 0 mean greedy argmax.
    pub temperature: f64,
    /// Global gradient-norm clip; <= 0 disables clipping.
    pub grad_clip: f64,
}

impl Default for LstmConfig {
    fn default() -> Self {
        LstmConfig {
            batch_size: 1,
            learning_rate: 0.001,
            epochs: 100,
            num_hidden_layers: 2,
            embedding_size: 64,
            sequence_length: 1,
            hidden_size: None,
            rng_seed: 0,
            temperature: 1.0,
            grad_clip: 5.0,
        }
    }
}

impl LstmConfig {
    pub fn validate(&self) -> Result<(), SeqModelError> {
        let mut problems = Vec::new();
        if self.batch_size == 0 {
            problems.push("batch_size must be >= 1");
        }
        if self.epochs == 0 {
            problems.push("epochs must be >= 1");
        }
        if self.num_hidden_layers == 0 {
            problems.push("num_hidden_layers must be >= 1");
        }
        if self.embedding_size == 0 {
            problems.push("embedding_size must be >= 1");
        }
        if self.sequence_length == 0 {
            problems.push("sequence_length must be >= 1");
        }
        if self.hidden_size == Some(0) {
            problems.push("hidden_size must be >= 1");
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            problems.push("learning_rate must be finite and >= 0");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(SeqModelError::InvalidConfig(problems.join("; ")))
        }
    }

    pub fn resolved_hidden_size(&self, corpus_len: usize) -> usize {
        self.hidden_size
            .unwrap_or_else(|| corpus_len.clamp(1, HIDDEN_SIZE_CAP))
    }
}

#[derive(Debug, Error)]
pub enum SeqModelError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("corpus too short: {len} token(s), need at least 2")]
    TooShort { len: usize },
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("octet 0x{octet:02x} is not in the model vocabulary")]
    UnknownToken { octet: u8 },
    #[error("sampling requires a non-empty seed")]
    EmptySeed,
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    TrainingDiverged { epoch: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("model file format error: {0}")]
    ModelFormat(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl SeqModelError {
    pub fn name(&self) -> &'static str {
        match self {
            SeqModelError::EmptyCorpus => "EmptyCorpus",
            SeqModelError::TooShort { .. } => "TooShort",
            SeqModelError::ShapeMismatch { .. } => "ShapeError",
            SeqModelError::UnknownToken { .. } => "UnknownToken",
            SeqModelError::EmptySeed => "EmptySeed",
            SeqModelError::TrainingDiverged { .. } => "TrainingDiverged",
            SeqModelError::InvalidConfig(_) => "InvalidConfig",
            SeqModelError::ModelFormat(_) => "ModelFormatError",
            SeqModelError::Io(_) => "IoError",
        }
    }
}
