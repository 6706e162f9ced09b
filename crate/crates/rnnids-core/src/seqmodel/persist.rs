//! Versioned flat-file model format.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic            12 bytes  "RNNIDS-LSTM\x01"
//! batch_size       u64
//! epochs           u64
//! num_hidden_layers u64
//! embedding_size   u64
//! sequence_length  u64
//! hidden_size      u64      (resolved per-layer width)
//! rng_seed         u64
//! learning_rate    f64
//! temperature      f64
//! grad_clip        f64
//! vocab_len        u64
//! vocab            vocab_len octets, token-id order
//! tensors          f64 × N, row-major, in canonical order:
//!                  per layer W_i W_f W_z W_o R_i R_f R_z R_o b_i b_f b_z b_o,
//!                  then embedding, output weights, output bias
//! ```
//!
//! The tensor order matches [`LstmModel::param_vec`].

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use super::corpus::Vocab;
use super::model::{LstmLayerParams, LstmModel};
use super::{LstmConfig, SeqModelError};

pub const MODEL_MAGIC: &[u8; 12] = b"RNNIDS-LSTM\x01";

pub fn save_model(model: &LstmModel, path: &Path) -> Result<(), SeqModelError> {
    let mut buf = Vec::new();
    write_model(model, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<LstmModel, SeqModelError> {
    let bytes = fs::read(path)?;
    read_model(&mut bytes.as_slice())
}

pub fn write_model<W: Write>(model: &LstmModel, w: &mut W) -> Result<(), SeqModelError> {
    let cfg = &model.config;
    let hidden = cfg.hidden_size.ok_or_else(|| {
        SeqModelError::ModelFormat("model config has no resolved hidden_size".to_string())
    })?;

    w.write_all(MODEL_MAGIC)?;
    for v in [
        cfg.batch_size as u64,
        cfg.epochs as u64,
        cfg.num_hidden_layers as u64,
        cfg.embedding_size as u64,
        cfg.sequence_length as u64,
        hidden as u64,
        cfg.rng_seed,
    ] {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in [cfg.learning_rate, cfg.temperature, cfg.grad_clip] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&(model.vocab.len() as u64).to_le_bytes())?;
    w.write_all(model.vocab.octets())?;
    for v in model.param_vec() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_model<R: Read>(r: &mut R) -> Result<LstmModel, SeqModelError> {
    let mut magic = [0u8; 12];
    read_exact(r, &mut magic)?;
    if &magic != MODEL_MAGIC {
        return Err(SeqModelError::ModelFormat(
            "bad magic; not a model file or unsupported version".to_string(),
        ));
    }

    let batch_size = read_u64(r)? as usize;
    let epochs = read_u64(r)? as usize;
    let num_hidden_layers = read_u64(r)? as usize;
    let embedding_size = read_u64(r)? as usize;
    let sequence_length = read_u64(r)? as usize;
    let hidden = read_u64(r)? as usize;
    let rng_seed = read_u64(r)?;
    let learning_rate = read_f64(r)?;
    let temperature = read_f64(r)?;
    let grad_clip = read_f64(r)?;

    let vocab_len = read_u64(r)? as usize;
    if vocab_len == 0 || vocab_len > 256 {
        return Err(SeqModelError::ModelFormat(format!(
            "invalid vocab length {vocab_len}"
        )));
    }
    let mut octets = vec![0u8; vocab_len];
    read_exact(r, &mut octets)?;
    let vocab = Vocab::from_octet_table(octets)?;

    if num_hidden_layers == 0 || embedding_size == 0 || hidden == 0 {
        return Err(SeqModelError::ModelFormat(
            "zero-sized model dimension".to_string(),
        ));
    }

    let config = LstmConfig {
        batch_size,
        learning_rate,
        epochs,
        num_hidden_layers,
        embedding_size,
        sequence_length,
        hidden_size: Some(hidden),
        rng_seed,
        temperature,
        grad_clip,
    };

    let mut layers = Vec::with_capacity(num_hidden_layers);
    for k in 0..num_hidden_layers {
        let input_dim = if k == 0 { embedding_size } else { hidden };
        layers.push(LstmLayerParams::zeros(input_dim, hidden));
    }
    let mut model = LstmModel {
        layers,
        embedding: ndarray::Array2::zeros((vocab_len, embedding_size)),
        w_out: ndarray::Array2::zeros((vocab_len, hidden)),
        b_out: ndarray::Array1::zeros(vocab_len),
        vocab,
        config,
    };

    let count = model.param_vec().len();
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        params.push(read_f64(r)?);
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(SeqModelError::ModelFormat(
            "trailing bytes after tensors".to_string(),
        ));
    }
    model.load_param_vec(&params)?;
    Ok(model)
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<(), SeqModelError> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            SeqModelError::ModelFormat("truncated model file".to_string())
        } else {
            SeqModelError::Io(e)
        }
    })
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, SeqModelError> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64, SeqModelError> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}
