//! `rnnids` — single entry point wiring the pipeline: payload corpus
//! generation, spectral images, model training and sampling, similarity
//! reports, signature synthesis, overlay dataset construction, scanning,
//! and the paired detector experiments.
//!
//! Every run writes a manifest next to its outputs; `rnnids rerun
//! <manifest>` replays the recorded invocation and reproduces the outputs
//! byte for byte. All randomness flows from explicit `--seed`/`--rng-seed`
//! flags, which default to the `RNNIDS_SEED` environment variable.

mod commands;
mod config;
mod manifest;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "rnnids",
    version,
    about = "Byte-model NIDS experimentation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate toy-encoded payload variants into a corpus directory.
    Corpus {
        /// Base payload file (read as raw bytes).
        #[arg(long)]
        base: PathBuf,
        /// Sliding XOR key as hex, e.g. 515151…a7.
        #[arg(long)]
        key: String,
        /// Highest iteration count; variants 0..=N are written.
        #[arg(long, default_value_t = 100)]
        iterations: usize,
        #[arg(long, env = "RNNIDS_SEED", default_value_t = 0)]
        seed: u64,
        /// Engine label recorded in the corpus manifest.
        #[arg(long, default_value = "toy-xor")]
        engine: String,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Render a corpus directory as a grayscale PGM spectral image.
    Spectra {
        #[arg(long)]
        corpus_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a byte model on a corpus file.
    Train {
        /// Corpus file, read as raw bytes.
        #[arg(long)]
        corpus: PathBuf,
        /// Optional key=value config file (same field names as the
        /// documented training configuration table).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        hidden_size: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        num_hidden_layers: Option<usize>,
        #[arg(long)]
        embedding_size: Option<usize>,
        #[arg(long)]
        sequence_length: Option<usize>,
        #[arg(long)]
        grad_clip: Option<f64>,
        #[arg(long, env = "RNNIDS_SEED", default_value_t = 0)]
        seed: u64,
        /// Model output file.
        #[arg(long)]
        out: PathBuf,
        /// Also write the per-epoch loss trace as JSON.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Sample bytes from a trained model.
    Sample {
        #[arg(long)]
        model: PathBuf,
        /// File whose bytes prime the model state.
        #[arg(long, conflicts_with = "seed_text")]
        seed_file: Option<PathBuf>,
        /// Literal text that primes the model state.
        #[arg(long)]
        seed_text: Option<String>,
        #[arg(long)]
        length: usize,
        /// Softmax temperature; 0 selects the argmax.
        #[arg(long, default_value_t = 1.0)]
        temperature: f64,
        #[arg(long, env = "RNNIDS_SEED", default_value_t = 0)]
        rng_seed: u64,
        /// Output file for the raw sampled bytes.
        #[arg(long)]
        out: PathBuf,
    },
    /// Pairwise similarity matrix over sequence files.
    Compare {
        /// lev | sw
        #[arg(long, default_value = "sw")]
        metric: String,
        #[arg(long = "match", default_value_t = 1.0)]
        match_score: f64,
        #[arg(long, default_value_t = -1.0)]
        mismatch: f64,
        #[arg(long, default_value_t = -1.0)]
        gap: f64,
        /// csv | table
        #[arg(long, default_value = "csv")]
        format: String,
        /// Also write the report to a file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sequence files, compared pairwise in the given order.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Train per-signature models and emit a synthetic ruleset.
    Siggen {
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "RNNIDS_SEED", default_value_t = 0)]
        seed: u64,
        /// Training epochs per signature.
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 1.0)]
        temperature: f64,
    },
    /// Build a labeled dataset: ingest a capture, synthesize malicious
    /// flows from rules, and overlay them.
    Dataset {
        /// Benign capture (classic pcap). Omit for a malicious-only set.
        #[arg(long)]
        pcap: Option<PathBuf>,
        /// Rules whose payload languages generate the malicious flows.
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        per_rule: usize,
        /// Size of the malicious source-host pool (documentation range).
        #[arg(long, default_value_t = 16)]
        pool_size: usize,
        #[arg(long, default_value_t = 256)]
        max_payload_len: usize,
        #[arg(long, env = "RNNIDS_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Scan a dataset with a ruleset and report FP/FN.
    Scan {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        rules: PathBuf,
        /// Extra ruleset compiled with synthetic provenance.
        #[arg(long)]
        synthetic: Option<PathBuf>,
        /// Evaluation report (JSON) output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Alarm list (JSONL) output path.
        #[arg(long)]
        alarms_out: Option<PathBuf>,
    },
    /// Paired baseline-vs-augmented detector evaluations.
    Experiment {
        #[command(subcommand)]
        which: ExperimentCmd,
    },
    /// Replay a recorded run manifest.
    Rerun { manifest: PathBuf },
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// Worm scenario: mutants overlaid on a benign capture; baseline vs
    /// baseline plus one synthetic rule.
    Worm {
        #[arg(long)]
        baseline: PathBuf,
        /// Ruleset file whose first rule is the synthetic variant.
        #[arg(long)]
        synthetic: PathBuf,
        /// Directory of mutant payload files.
        #[arg(long)]
        mutants: PathBuf,
        #[arg(long)]
        benign: PathBuf,
        #[arg(long, env = "RNNIDS_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// General case: an existing overlay dataset; baseline vs baseline
    /// plus a synthetic ruleset (must be disjoint from the rules that
    /// generated the dataset).
    General {
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        add: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum CliError {
    Core(rnnids_core::Error),
    Io(std::io::Error),
    Usage(String),
}

impl CliError {
    fn name(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.name(),
            CliError::Io(_) => "IoError",
            CliError::Usage(_) => "UsageError",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Io(e) => e.to_string(),
            CliError::Usage(m) => m.clone(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

macro_rules! from_core {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        }
    )*};
}
from_core!(
    rnnids_core::SeqModelError,
    rnnids_core::SimMetricsError,
    rnnids_core::SignatureError,
    rnnids_core::PayloadError,
    rnnids_core::DatasetError,
    rnnids_core::DetectorError
);

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    match commands::dispatch(cli.command, &argv[1..]) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let payload = serde_json::json!({
                "error": err.name(),
                "message": err.message(),
            });
            eprintln!("{payload}");
            ExitCode::from(1)
        }
    }
}
