//! Drawing new byte sequences from a trained model.

use ndarray::Array1;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::LstmModel;
use super::SeqModelError;

/// Primes the state with `seed_bytes`, then draws `length` tokens from
/// `softmax(logits / temperature)` and decodes them back to octets.
/// Temperatures at or below zero select the argmax instead (greedy
/// continuation). Deterministic for a given `rng_seed`.
pub fn sample(
    model: &LstmModel,
    seed_bytes: &[u8],
    length: usize,
    temperature: f64,
    rng_seed: u64,
) -> Result<Vec<u8>, SeqModelError> {
    if seed_bytes.is_empty() {
        return Err(SeqModelError::EmptySeed);
    }
    let seed_tokens = model.vocab.encode(seed_bytes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    let mut state = model.zero_state();
    let mut logits = Array1::zeros(model.vocab.len());
    for &t in &seed_tokens {
        logits = model.step(t, &mut state);
    }

    let mut out = Vec::with_capacity(length);
    for _ in 0..length {
        let token = draw(&logits, temperature, &mut rng);
        out.push(token);
        logits = model.step(token, &mut state);
    }
    Ok(model.vocab.decode(&out))
}

fn draw(logits: &Array1<f64>, temperature: f64, rng: &mut ChaCha8Rng) -> usize {
    if temperature <= 0.0 {
        return argmax(logits);
    }
    let max = logits.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let weights: Vec<f64> = logits
        .iter()
        .map(|&l| ((l - max) / temperature).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let mut r = rng.gen_range(0.0..1.0) * total;
    for (i, w) in weights.iter().enumerate() {
        if r < *w {
            return i;
        }
        r -= w;
    }
    weights.len() - 1
}

fn argmax(logits: &Array1<f64>) -> usize {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate() {
        if v > logits[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqmodel::{encode_corpus, train, LstmConfig};

    #[test]
    fn memorized_pattern_continues_under_argmax() {
        let corpus = encode_corpus(&b"abc".repeat(12), "p").unwrap();
        let cfg = LstmConfig {
            epochs: 60,
            learning_rate: 0.05,
            hidden_size: Some(16),
            ..LstmConfig::default()
        };
        let outcome = train(&corpus, &cfg).unwrap();
        let got = sample(&outcome.model, b"ab", 7, 0.0, 0).unwrap();
        assert_eq!(got, b"cabcabc");
    }

    #[test]
    fn emits_exactly_requested_length_from_vocab() {
        let corpus = encode_corpus(b"xyzzy", "p").unwrap();
        let cfg = LstmConfig {
            epochs: 1,
            hidden_size: Some(4),
            ..LstmConfig::default()
        };
        let outcome = train(&corpus, &cfg).unwrap();
        let got = sample(&outcome.model, b"x", 1, 1.0, 5).unwrap();
        assert_eq!(got.len(), 1);
        assert!(outcome.model.vocab.id_of(got[0]).is_some());
        let long = sample(&outcome.model, b"xy", 64, 0.9, 5).unwrap();
        assert_eq!(long.len(), 64);
        assert!(long.iter().all(|&b| outcome.model.vocab.id_of(b).is_some()));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let corpus = encode_corpus(b"hello world hello", "p").unwrap();
        let cfg = LstmConfig {
            epochs: 2,
            hidden_size: Some(8),
            ..LstmConfig::default()
        };
        let outcome = train(&corpus, &cfg).unwrap();
        let a = sample(&outcome.model, b"he", 32, 0.8, 123).unwrap();
        let b = sample(&outcome.model, b"he", 32, 0.8, 123).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unseen_seed_octet_rejected() {
        let corpus = encode_corpus(b"aabb", "p").unwrap();
        let cfg = LstmConfig {
            epochs: 1,
            hidden_size: Some(4),
            ..LstmConfig::default()
        };
        let outcome = train(&corpus, &cfg).unwrap();
        assert!(matches!(
            sample(&outcome.model, b"aq", 4, 1.0, 0),
            Err(SeqModelError::UnknownToken { octet: b'q' })
        ));
    }
}
