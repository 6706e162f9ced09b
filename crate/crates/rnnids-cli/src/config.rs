//! Optional key=value training config files. Keys match the training
//! configuration table's row names (case and separator insensitive), so a
//! file can read
//!
//! ```text
//! batch size = 1
//! learning rate = 0.001
//! number of the epochs = 100
//! number of the hidden layer = 2
//! word vector size = 64
//! sequence length = 1
//! ```
//!
//! The programmatic field names (`batch_size`, `epochs`, ...) are accepted
//! too. Command-line flags override file values.

use rnnids_core::seqmodel::LstmConfig;

pub fn apply_config_file(cfg: &mut LstmConfig, text: &str) -> Result<(), String> {
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("line {}: expected key = value", idx + 1));
        };
        let key = normalize(key);
        let value = value.trim();
        let parse_count = || -> Result<usize, String> {
            value
                .parse()
                .map_err(|_| format!("line {}: bad count `{value}`", idx + 1))
        };
        let parse_real = || -> Result<f64, String> {
            value
                .parse()
                .map_err(|_| format!("line {}: bad number `{value}`", idx + 1))
        };
        match key.as_str() {
            "batchsize" => cfg.batch_size = parse_count()?,
            "learningrate" => cfg.learning_rate = parse_real()?,
            "epochs" | "numberoftheepochs" | "numberofepochs" => cfg.epochs = parse_count()?,
            "numhiddenlayers" | "numberofthehiddenlayer" | "numberofhiddenlayers" => {
                cfg.num_hidden_layers = parse_count()?
            }
            "embeddingsize" | "wordvectorsize" => cfg.embedding_size = parse_count()?,
            "sequencelength" => cfg.sequence_length = parse_count()?,
            "hiddensize" => cfg.hidden_size = Some(parse_count()?),
            "temperature" => cfg.temperature = parse_real()?,
            "gradclip" => cfg.grad_clip = parse_real()?,
            "rngseed" | "seed" => {
                cfg.rng_seed = value
                    .parse()
                    .map_err(|_| format!("line {}: bad seed `{value}`", idx + 1))?
            }
            other => return Err(format!("line {}: unknown key `{other}`", idx + 1)),
        }
    }
    Ok(())
}

fn normalize(key: &str) -> String {
    key.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}
