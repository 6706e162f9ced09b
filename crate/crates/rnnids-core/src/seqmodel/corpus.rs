//! Byte-to-token preprocessing. Corpora are raw octet sequences; the
//! vocabulary is a bijection between the distinct octets observed and
//! contiguous token ids in first-occurrence order, so any byte sequence
//! (including invalid UTF-8 shellcode) round-trips exactly.

use super::SeqModelError;

/// Bijection between observed octet values and token ids `0..len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    octets: Vec<u8>,
    ids: [Option<u16>; 256],
}

impl Vocab {
    pub fn from_bytes(raw: &[u8]) -> Vocab {
        let mut octets = Vec::new();
        let mut ids = [None; 256];
        for &b in raw {
            if ids[b as usize].is_none() {
                ids[b as usize] = Some(octets.len() as u16);
                octets.push(b);
            }
        }
        Vocab { octets, ids }
    }

    /// Rebuilds the mapping from an id-ordered octet table.
    pub fn from_octet_table(octets: Vec<u8>) -> Result<Vocab, SeqModelError> {
        let mut ids = [None; 256];
        for (i, &b) in octets.iter().enumerate() {
            if ids[b as usize].is_some() {
                return Err(SeqModelError::ModelFormat(format!(
                    "duplicate octet 0x{b:02x} in vocab table"
                )));
            }
            ids[b as usize] = Some(i as u16);
        }
        Ok(Vocab { octets, ids })
    }

    pub fn len(&self) -> usize {
        self.octets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.octets.is_empty()
    }

    pub fn id_of(&self, octet: u8) -> Option<usize> {
        self.ids[octet as usize].map(|i| i as usize)
    }

    pub fn octet_of(&self, id: usize) -> u8 {
        self.octets[id]
    }

    /// Id-ordered octet table.
    pub fn octets(&self) -> &[u8] {
        &self.octets
    }

    pub fn encode(&self, bytes: &[u8]) -> Result<Vec<usize>, SeqModelError> {
        bytes
            .iter()
            .map(|&b| {
                self.id_of(b)
                    .ok_or(SeqModelError::UnknownToken { octet: b })
            })
            .collect()
    }

    pub fn decode(&self, tokens: &[usize]) -> Vec<u8> {
        tokens.iter().map(|&t| self.octet_of(t)).collect()
    }
}

/// A named training corpus: the raw octets, their token encoding, and the
/// vocabulary both were built from.
#[derive(Debug, Clone)]
pub struct TokenCorpus {
    pub bytes: Vec<u8>,
    pub tokens: Vec<usize>,
    pub vocab: Vocab,
    pub name: String,
}

/// Builds a corpus from raw octets; the vocabulary is assigned in
/// first-occurrence order.
pub fn encode_corpus(raw: &[u8], name: &str) -> Result<TokenCorpus, SeqModelError> {
    if raw.is_empty() {
        return Err(SeqModelError::EmptyCorpus);
    }
    let vocab = Vocab::from_bytes(raw);
    let tokens = vocab
        .encode(raw)
        .expect("every corpus octet is in its own vocab");
    Ok(TokenCorpus {
        bytes: raw.to_vec(),
        tokens,
        vocab,
        name: name.to_string(),
    })
}
