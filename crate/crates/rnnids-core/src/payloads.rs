//! Toy polymorphic encoder corpora and their spectral renderings. The
//! encoder stands in for real shellcode encoder engines at desk scale: each
//! iteration XORs the body with a sliding key, prepends a fixed decoder-stub
//! marker plus two junk octets, and rotates the key. The stub octets repeat
//! at the same offsets in every encoded variant, which is exactly the
//! content-based pattern the spectral images expose.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io;
use std::path::Path;
use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Fixed decoder-stub marker prepended by every encoding round. The value
/// imitates a stub prologue; it is arbitrary but must stay fixed so
/// spectral columns are reproducible.
pub const STUB_MARKER: [u8; 8] = [0xEB, 0x10, 0x5E, 0x31, 0xC9, 0xB1, 0x00, 0x90];

/// Junk octets appended to the stub each round.
pub const JUNK_LEN: usize = 2;

#[derive(Debug, Error)]
pub enum PayloadError {
    #[error("encoder key must be non-empty")]
    EmptyKey,
    #[error("spectral matrix requires at least one variant")]
    NoVariants,
    #[error("corpus manifest is malformed: {0}")]
    BadManifest(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl PayloadError {
    pub fn name(&self) -> &'static str {
        match self {
            PayloadError::EmptyKey => "EmptyKey",
            PayloadError::NoVariants => "NoVariants",
            PayloadError::BadManifest(_) => "BadManifest",
            PayloadError::Io(_) => "IoError",
        }
    }
}

/// Encoded variants of one base payload, one per iteration count starting
/// at zero (unencoded).
#[derive(Debug, Clone)]
pub struct PayloadCorpus {
    pub variants: Vec<Vec<u8>>,
    pub engine: String,
    pub base_payload: Vec<u8>,
}

/// Applies `iterations` encoding rounds. Round r XORs the current body with
/// the key rotated r times (applied cyclically), then prepends the stub
/// marker and two junk octets drawn from the seeded stream. Zero iterations
/// returns the payload unchanged.
pub fn toy_encode(
    payload: &[u8],
    key: &[u8],
    iterations: usize,
    rng_seed: u64,
) -> Result<Vec<u8>, PayloadError> {
    if key.is_empty() {
        return Err(PayloadError::EmptyKey);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut body = payload.to_vec();
    let mut key = key.to_vec();
    for _ in 0..iterations {
        let xored = xor_slide(&body, &key);
        let mut next = Vec::with_capacity(STUB_MARKER.len() + JUNK_LEN + xored.len());
        next.extend_from_slice(&STUB_MARKER);
        next.push(rng.gen());
        next.push(rng.gen());
        next.extend_from_slice(&xored);
        body = next;
        key.rotate_left(1);
    }
    Ok(body)
}

/// XORs `data` with `key` repeated cyclically. Applying the same key twice
/// restores the input.
pub fn xor_slide(data: &[u8], key: &[u8]) -> Vec<u8> {
    data.iter()
        .zip(key.iter().cycle())
        .map(|(d, k)| d ^ k)
        .collect()
}

/// Builds variants for iteration counts `0..=max_iterations`. Each variant
/// is encoded independently, in parallel when the `parallel` feature is on.
pub fn generate_corpus(
    base: &[u8],
    key: &[u8],
    max_iterations: usize,
    rng_seed: u64,
    engine: &str,
) -> Result<PayloadCorpus, PayloadError> {
    if key.is_empty() {
        return Err(PayloadError::EmptyKey);
    }
    #[cfg(feature = "parallel")]
    let variants: Result<Vec<Vec<u8>>, PayloadError> = (0..=max_iterations)
        .into_par_iter()
        .map(|k| toy_encode(base, key, k, rng_seed))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let variants: Result<Vec<Vec<u8>>, PayloadError> = (0..=max_iterations)
        .map(|k| toy_encode(base, key, k, rng_seed))
        .collect();
    Ok(PayloadCorpus {
        variants: variants?,
        engine: engine.to_string(),
        base_payload: base.to_vec(),
    })
}

/// Sequential twin of [`generate_corpus`] for direct comparison.
pub fn generate_corpus_seq(
    base: &[u8],
    key: &[u8],
    max_iterations: usize,
    rng_seed: u64,
    engine: &str,
) -> Result<PayloadCorpus, PayloadError> {
    if key.is_empty() {
        return Err(PayloadError::EmptyKey);
    }
    let variants: Result<Vec<Vec<u8>>, PayloadError> = (0..=max_iterations)
        .map(|k| toy_encode(base, key, k, rng_seed))
        .collect();
    Ok(PayloadCorpus {
        variants: variants?,
        engine: engine.to_string(),
        base_payload: base.to_vec(),
    })
}

/// Row-per-variant matrix of octet values, zero-padded to the longest
/// variant. True row lengths are kept alongside so the padding stays
/// presentation-only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectralMatrix {
    pub rows: usize,
    pub cols: usize,
    /// Row-major cells, `rows * cols` octets.
    pub cells: Vec<u8>,
    pub true_lens: Vec<usize>,
}

impl SpectralMatrix {
    pub fn cell(&self, row: usize, col: usize) -> u8 {
        self.cells[row * self.cols + col]
    }

    /// Row `k` restored to its original unpadded length.
    pub fn row(&self, k: usize) -> &[u8] {
        &self.cells[k * self.cols..k * self.cols + self.true_lens[k]]
    }

    /// Column indices whose value is identical across all rows.
    pub fn constant_columns(&self) -> Vec<usize> {
        (0..self.cols)
            .filter(|&c| {
                let v = self.cell(0, c);
                (1..self.rows).all(|r| self.cell(r, c) == v)
            })
            .collect()
    }
}

/// One row per variant in iteration order, zero-padded to the maximum
/// variant length.
pub fn build_spectral(corpus: &PayloadCorpus) -> Result<SpectralMatrix, PayloadError> {
    if corpus.variants.is_empty() {
        return Err(PayloadError::NoVariants);
    }
    let cols = corpus.variants.iter().map(|v| v.len()).max().unwrap();
    let rows = corpus.variants.len();
    let mut cells = vec![0u8; rows * cols];
    let mut true_lens = Vec::with_capacity(rows);
    for (r, v) in corpus.variants.iter().enumerate() {
        cells[r * cols..r * cols + v.len()].copy_from_slice(v);
        true_lens.push(v.len());
    }
    Ok(SpectralMatrix {
        rows,
        cols,
        cells,
        true_lens,
    })
}

/// Binary PGM (P5, maxval 255): byte value 0x00 renders black, 0xFF white.
pub fn render_pgm(matrix: &SpectralMatrix) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", matrix.cols, matrix.rows);
    let mut out = Vec::with_capacity(header.len() + matrix.cells.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&matrix.cells);
    out
}

/// On-disk corpus manifest stored next to the `variant_<k>.bin` files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub engine: String,
    pub key_hex: String,
    pub rng_seed: u64,
    pub variants: usize,
}

/// Writes `variant_<k>.bin` files plus `manifest.json` into `dir`.
pub fn write_corpus_dir(
    corpus: &PayloadCorpus,
    key: &[u8],
    rng_seed: u64,
    dir: &Path,
) -> Result<(), PayloadError> {
    fs::create_dir_all(dir)?;
    for (k, v) in corpus.variants.iter().enumerate() {
        fs::write(dir.join(format!("variant_{k}.bin")), v)?;
    }
    let manifest = CorpusManifest {
        engine: corpus.engine.clone(),
        key_hex: key.iter().map(|b| format!("{b:02x}")).collect(),
        rng_seed,
        variants: corpus.variants.len(),
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| PayloadError::BadManifest(e.to_string()))?;
    fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}

/// Reads a corpus directory written by [`write_corpus_dir`].
pub fn read_corpus_dir(dir: &Path) -> Result<(PayloadCorpus, CorpusManifest), PayloadError> {
    let json = fs::read_to_string(dir.join("manifest.json"))?;
    let manifest: CorpusManifest =
        serde_json::from_str(&json).map_err(|e| PayloadError::BadManifest(e.to_string()))?;
    let mut variants = Vec::with_capacity(manifest.variants);
    for k in 0..manifest.variants {
        variants.push(fs::read(dir.join(format!("variant_{k}.bin")))?);
    }
    if variants.is_empty() {
        return Err(PayloadError::NoVariants);
    }
    let base = variants[0].clone();
    Ok((
        PayloadCorpus {
            variants,
            engine: manifest.engine.clone(),
            base_payload: base,
        },
        manifest,
    ))
}
