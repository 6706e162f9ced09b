//! Subcommand handlers. Each run reconstructs its canonical argument
//! vector (with every seed resolved) and records it in a manifest next to
//! the primary output, so `rerun` replays are environment-independent.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;

use rnnids_core::dataset::{
    default_malicious_pool, ingest_pcap, overlay, read_dataset, synth_malicious_flows,
    write_dataset, FlowRecord, LabeledDataset,
};
use rnnids_core::detector::{
    evaluate, experiment_general, experiment_worm, scan, CompiledRule, Provenance, Ruleset,
};
use rnnids_core::payloads::{
    build_spectral, generate_corpus, read_corpus_dir, render_pgm, write_corpus_dir,
};
use rnnids_core::seqmodel::{encode_corpus, load_model, sample, save_model, train, LstmConfig};
use rnnids_core::signatures::{
    format_ruleset, parse_regex, parse_ruleset, repair_generated, SignatureRule,
};
use rnnids_core::simmetrics::{similarity_matrix, AlignmentParams, Metric};

use crate::config::apply_config_file;
use crate::manifest::{read_manifest, RunManifest};
use crate::{Cli, CliError, Command, ExperimentCmd};

pub fn dispatch(cmd: Command, _argv: &[String]) -> Result<(), CliError> {
    match cmd {
        Command::Corpus {
            base,
            key,
            iterations,
            seed,
            engine,
            out_dir,
        } => cmd_corpus(&base, &key, iterations, seed, &engine, &out_dir),
        Command::Spectra { corpus_dir, out } => cmd_spectra(&corpus_dir, &out),
        Command::Train {
            corpus,
            config,
            epochs,
            hidden_size,
            learning_rate,
            batch_size,
            num_hidden_layers,
            embedding_size,
            sequence_length,
            grad_clip,
            seed,
            out,
            trace_out,
        } => {
            let overrides = TrainOverrides {
                epochs,
                hidden_size,
                learning_rate,
                batch_size,
                num_hidden_layers,
                embedding_size,
                sequence_length,
                grad_clip,
            };
            cmd_train(
                &corpus,
                config.as_deref(),
                &overrides,
                seed,
                &out,
                trace_out.as_deref(),
            )
        }
        Command::Sample {
            model,
            seed_file,
            seed_text,
            length,
            temperature,
            rng_seed,
            out,
        } => cmd_sample(
            &model,
            seed_file.as_deref(),
            seed_text.as_deref(),
            length,
            temperature,
            rng_seed,
            &out,
        ),
        Command::Compare {
            metric,
            match_score,
            mismatch,
            gap,
            format,
            out,
            inputs,
        } => cmd_compare(
            &metric,
            match_score,
            mismatch,
            gap,
            &format,
            out.as_deref(),
            &inputs,
        ),
        Command::Siggen {
            rules,
            out,
            seed,
            epochs,
            temperature,
        } => cmd_siggen(&rules, &out, seed, epochs, temperature),
        Command::Dataset {
            pcap,
            rules,
            per_rule,
            pool_size,
            max_payload_len,
            seed,
            out,
        } => cmd_dataset(
            pcap.as_deref(),
            rules.as_deref(),
            per_rule,
            pool_size,
            max_payload_len,
            seed,
            &out,
        ),
        Command::Scan {
            dataset,
            rules,
            synthetic,
            out,
            alarms_out,
        } => cmd_scan(
            &dataset,
            &rules,
            synthetic.as_deref(),
            out.as_deref(),
            alarms_out.as_deref(),
        ),
        Command::Experiment { which } => match which {
            ExperimentCmd::Worm {
                baseline,
                synthetic,
                mutants,
                benign,
                seed,
                out,
            } => cmd_experiment_worm(
                &baseline,
                &synthetic,
                &mutants,
                &benign,
                seed,
                out.as_deref(),
            ),
            ExperimentCmd::General {
                rules,
                add,
                dataset,
                out,
            } => cmd_experiment_general(&rules, &add, &dataset, out.as_deref()),
        },
        Command::Rerun { manifest } => cmd_rerun(&manifest),
    }
}

fn parse_hex_key(key: &str) -> Result<Vec<u8>, CliError> {
    let cleaned: String = key.chars().filter(|c| !c.is_whitespace()).collect();
    if cleaned.is_empty() || !cleaned.len().is_multiple_of(2) {
        return Err(CliError::Usage(format!(
            "key `{key}` is not an even-length hex string"
        )));
    }
    (0..cleaned.len())
        .step_by(2)
        .map(|i| {
            u8::from_str_radix(&cleaned[i..i + 2], 16)
                .map_err(|_| CliError::Usage(format!("key `{key}` contains non-hex characters")))
        })
        .collect()
}

fn load_rules(path: &Path) -> Result<Vec<SignatureRule>, CliError> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_ruleset(&text)?)
}

fn arg(s: impl std::fmt::Display) -> String {
    s.to_string()
}

fn cmd_corpus(
    base: &Path,
    key_hex: &str,
    iterations: usize,
    seed: u64,
    engine: &str,
    out_dir: &Path,
) -> Result<(), CliError> {
    let base_bytes = std::fs::read(base)?;
    let key = parse_hex_key(key_hex)?;
    let corpus = generate_corpus(&base_bytes, &key, iterations, seed, engine)?;
    write_corpus_dir(&corpus, &key, seed, out_dir)?;
    println!(
        "wrote {} variants to {}",
        corpus.variants.len(),
        out_dir.display()
    );

    RunManifest::new(
        "corpus",
        &[
            arg("corpus"),
            arg("--base"),
            arg(base.display()),
            arg("--key"),
            arg(key_hex),
            arg("--iterations"),
            arg(iterations),
            arg("--seed"),
            arg(seed),
            arg("--engine"),
            arg(engine),
            arg("--out-dir"),
            arg(out_dir.display()),
        ],
    )
    .input(base)
    .output(out_dir)
    .seed("seed", seed)
    .write_next_to(out_dir)?;
    Ok(())
}

fn cmd_spectra(corpus_dir: &Path, out: &Path) -> Result<(), CliError> {
    let (corpus, _) = read_corpus_dir(corpus_dir)?;
    let matrix = build_spectral(&corpus)?;
    std::fs::write(out, render_pgm(&matrix))?;
    println!(
        "wrote {}x{} spectral image to {}",
        matrix.cols,
        matrix.rows,
        out.display()
    );

    RunManifest::new(
        "spectra",
        &[
            arg("spectra"),
            arg("--corpus-dir"),
            arg(corpus_dir.display()),
            arg("--out"),
            arg(out.display()),
        ],
    )
    .input(corpus_dir)
    .output(out)
    .write_next_to(out)?;
    Ok(())
}

struct TrainOverrides {
    epochs: Option<usize>,
    hidden_size: Option<usize>,
    learning_rate: Option<f64>,
    batch_size: Option<usize>,
    num_hidden_layers: Option<usize>,
    embedding_size: Option<usize>,
    sequence_length: Option<usize>,
    grad_clip: Option<f64>,
}

fn cmd_train(
    corpus_path: &Path,
    config_path: Option<&Path>,
    overrides: &TrainOverrides,
    seed: u64,
    out: &Path,
    trace_out: Option<&Path>,
) -> Result<(), CliError> {
    let raw = std::fs::read(corpus_path)?;
    let name = corpus_path
        .file_name()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_default();
    let corpus = encode_corpus(&raw, &name)?;

    let mut cfg = LstmConfig::default();
    if let Some(path) = config_path {
        let text = std::fs::read_to_string(path)?;
        apply_config_file(&mut cfg, &text).map_err(CliError::Usage)?;
    }
    if let Some(v) = overrides.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = overrides.hidden_size {
        cfg.hidden_size = Some(v);
    }
    if let Some(v) = overrides.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = overrides.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = overrides.num_hidden_layers {
        cfg.num_hidden_layers = v;
    }
    if let Some(v) = overrides.embedding_size {
        cfg.embedding_size = v;
    }
    if let Some(v) = overrides.sequence_length {
        cfg.sequence_length = v;
    }
    if let Some(v) = overrides.grad_clip {
        cfg.grad_clip = v;
    }
    cfg.rng_seed = seed;

    let outcome = train(&corpus, &cfg)?;
    save_model(&outcome.model, out)?;
    let final_loss = outcome.loss_trace.last().copied().unwrap_or(f64::NAN);
    println!(
        "trained on {} bytes (vocab {}), final loss {final_loss:.6}, model at {}",
        raw.len(),
        corpus.vocab.len(),
        out.display()
    );
    if let Some(trace_path) = trace_out {
        std::fs::write(
            trace_path,
            serde_json::to_string_pretty(&outcome.loss_trace).unwrap(),
        )?;
    }

    let mut args = vec![arg("train"), arg("--corpus"), arg(corpus_path.display())];
    if let Some(p) = config_path {
        args.extend([arg("--config"), arg(p.display())]);
    }
    for (flag, value) in [
        ("--batch-size", Some(arg(cfg.batch_size))),
        ("--learning-rate", Some(arg(cfg.learning_rate))),
        ("--epochs", Some(arg(cfg.epochs))),
        ("--num-hidden-layers", Some(arg(cfg.num_hidden_layers))),
        ("--embedding-size", Some(arg(cfg.embedding_size))),
        ("--sequence-length", Some(arg(cfg.sequence_length))),
        ("--hidden-size", cfg.hidden_size.map(arg)),
        ("--grad-clip", Some(arg(cfg.grad_clip))),
    ] {
        if let Some(v) = value {
            args.extend([arg(flag), v]);
        }
    }
    args.extend([arg("--seed"), arg(seed), arg("--out"), arg(out.display())]);
    if let Some(p) = trace_out {
        args.extend([arg("--trace-out"), arg(p.display())]);
    }

    let mut manifest = RunManifest::new("train", &args)
        .input(corpus_path)
        .output(out)
        .seed("seed", seed);
    if let Some(p) = trace_out {
        manifest = manifest.output(p);
    }
    manifest.write_next_to(out)?;
    Ok(())
}

fn cmd_sample(
    model_path: &Path,
    seed_file: Option<&Path>,
    seed_text: Option<&str>,
    length: usize,
    temperature: f64,
    rng_seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let model = load_model(model_path)?;
    let seed_bytes: Vec<u8> = match (seed_file, seed_text) {
        (Some(path), None) => std::fs::read(path)?,
        (None, Some(text)) => text.as_bytes().to_vec(),
        _ => {
            return Err(CliError::Usage(
                "exactly one of --seed-file / --seed-text is required".to_string(),
            ))
        }
    };
    let bytes = sample(&model, &seed_bytes, length, temperature, rng_seed)?;
    std::fs::write(out, &bytes)?;
    println!("sampled {length} bytes to {}", out.display());

    let mut args = vec![arg("sample"), arg("--model"), arg(model_path.display())];
    match (seed_file, seed_text) {
        (Some(p), _) => args.extend([arg("--seed-file"), arg(p.display())]),
        (_, Some(t)) => args.extend([arg("--seed-text"), arg(t)]),
        _ => unreachable!(),
    }
    args.extend([
        arg("--length"),
        arg(length),
        arg("--temperature"),
        arg(temperature),
        arg("--rng-seed"),
        arg(rng_seed),
        arg("--out"),
        arg(out.display()),
    ]);
    RunManifest::new("sample", &args)
        .input(model_path)
        .output(out)
        .seed("rng_seed", rng_seed)
        .write_next_to(out)?;
    Ok(())
}

fn cmd_compare(
    metric_name: &str,
    match_score: f64,
    mismatch: f64,
    gap: f64,
    format: &str,
    out: Option<&Path>,
    inputs: &[PathBuf],
) -> Result<(), CliError> {
    let metric = match metric_name {
        "lev" | "levenshtein" => Metric::Levenshtein,
        "sw" | "smith-waterman" => {
            Metric::SmithWaterman(AlignmentParams::new(match_score, mismatch, gap)?)
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown metric `{other}` (use lev or sw)"
            )))
        }
    };
    let sequences: Vec<(String, Vec<u8>)> = inputs
        .iter()
        .map(|p| {
            let label = p
                .file_stem()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_default();
            std::fs::read(p).map(|bytes| (label, bytes))
        })
        .collect::<Result<_, _>>()?;

    let matrix = similarity_matrix(&sequences, metric)?;
    let rendered = match format {
        "csv" => matrix.to_csv(),
        "table" => matrix.to_text_table(),
        other => {
            return Err(CliError::Usage(format!(
                "unknown format `{other}` (use csv or table)"
            )))
        }
    };
    print!("{rendered}");
    if let Some(path) = out {
        std::fs::write(path, &rendered)?;
        let mut args = vec![
            arg("compare"),
            arg("--metric"),
            arg(metric_name),
            arg("--match"),
            arg(match_score),
            arg("--mismatch"),
            arg(mismatch),
            arg("--gap"),
            arg(gap),
            arg("--format"),
            arg(format),
            arg("--out"),
            arg(path.display()),
        ];
        args.extend(inputs.iter().map(|p| arg(p.display())));
        let mut manifest = RunManifest::new("compare", &args).output(path);
        for p in inputs {
            manifest = manifest.input(p);
        }
        manifest.write_next_to(path)?;
    }
    Ok(())
}

const SIGGEN_SAMPLE_ATTEMPTS: u64 = 8;

fn cmd_siggen(
    rules_path: &Path,
    out: &Path,
    seed: u64,
    epochs: usize,
    temperature: f64,
) -> Result<(), CliError> {
    let rules = load_rules(rules_path)?;
    let mut synthetic: Vec<SignatureRule> = Vec::new();

    for (idx, rule) in rules.iter().enumerate() {
        let Some(pattern) = &rule.payload_pattern else {
            eprintln!("siggen: rule {} has no payload pattern, skipped", rule.id);
            continue;
        };
        let corpus = match encode_corpus(pattern.as_bytes(), &rule.id) {
            Ok(c) if c.tokens.len() >= 2 => c,
            _ => {
                eprintln!(
                    "siggen: rule {} pattern too short to model, skipped",
                    rule.id
                );
                continue;
            }
        };
        let cfg = LstmConfig {
            epochs,
            rng_seed: seed.wrapping_add(idx as u64),
            ..LstmConfig::default()
        };
        let outcome = train(&corpus, &cfg)?;

        let mut emitted = false;
        for attempt in 0..SIGGEN_SAMPLE_ATTEMPTS {
            let rng_seed = seed
                .wrapping_mul(1000)
                .wrapping_add(idx as u64 * SIGGEN_SAMPLE_ATTEMPTS + attempt);
            let raw = sample(
                &outcome.model,
                &pattern.as_bytes()[..1],
                pattern.len(),
                temperature,
                rng_seed,
            )?;
            let raw_text = String::from_utf8_lossy(&raw).to_string();
            let Ok(repaired) = repair_generated(&raw_text) else {
                continue;
            };
            // The repaired pattern must parse; reject degenerate empties.
            if repaired.is_empty() || parse_regex(&repaired).is_err() {
                continue;
            }
            synthetic.push(SignatureRule {
                id: format!("{}_rnn1", rule.id),
                header_conditions: rule.header_conditions.clone(),
                payload_pattern: Some(repaired.clone()),
                payload_regex: Some(parse_regex(&repaired).unwrap()),
                options: rule.options.clone(),
                actions: rule.actions.clone(),
            });
            emitted = true;
            break;
        }
        if !emitted {
            eprintln!("siggen: no repairable sample for rule {}, skipped", rule.id);
        }
    }

    std::fs::write(out, format_ruleset(&synthetic))?;
    println!(
        "emitted {} synthetic signatures to {}",
        synthetic.len(),
        out.display()
    );

    RunManifest::new(
        "siggen",
        &[
            arg("siggen"),
            arg("--rules"),
            arg(rules_path.display()),
            arg("--out"),
            arg(out.display()),
            arg("--seed"),
            arg(seed),
            arg("--epochs"),
            arg(epochs),
            arg("--temperature"),
            arg(temperature),
        ],
    )
    .input(rules_path)
    .output(out)
    .seed("seed", seed)
    .write_next_to(out)?;
    Ok(())
}

fn cmd_dataset(
    pcap: Option<&Path>,
    rules: Option<&Path>,
    per_rule: usize,
    pool_size: usize,
    max_payload_len: usize,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let benign: Vec<FlowRecord> = match pcap {
        Some(path) => {
            let report = ingest_pcap(&std::fs::read(path)?)?;
            eprintln!(
                "ingested {} flows ({} skipped, {} warnings)",
                report.flows.len(),
                report.skipped_total(),
                report.warnings
            );
            report.flows
        }
        None => Vec::new(),
    };

    let malicious = match rules {
        Some(path) => {
            let gen_rules = load_rules(path)?;
            let pool = default_malicious_pool(pool_size);
            let benign_hosts: BTreeSet<std::net::Ipv4Addr> = benign
                .iter()
                .flat_map(|f| [f.src_host, f.dst_host])
                .collect();
            let report = synth_malicious_flows(
                &gen_rules,
                per_rule,
                &pool,
                &benign_hosts,
                seed,
                max_payload_len,
            )?;
            for id in &report.skipped_rules {
                eprintln!("dataset: rule {id} skipped (unsatisfiable payload)");
            }
            report.flows
        }
        None => Vec::new(),
    };

    let dataset = overlay(benign, malicious, seed)?;
    write_dataset(&dataset, out)?;
    println!(
        "wrote dataset: {} benign + {} malicious flows to {}",
        dataset.manifest.benign_count,
        dataset.manifest.malicious_count,
        out.display()
    );

    let mut args = vec![arg("dataset")];
    if let Some(p) = pcap {
        args.extend([arg("--pcap"), arg(p.display())]);
    }
    if let Some(p) = rules {
        args.extend([arg("--rules"), arg(p.display())]);
    }
    args.extend([
        arg("--per-rule"),
        arg(per_rule),
        arg("--pool-size"),
        arg(pool_size),
        arg("--max-payload-len"),
        arg(max_payload_len),
        arg("--seed"),
        arg(seed),
        arg("--out"),
        arg(out.display()),
    ]);
    let mut manifest = RunManifest::new("dataset", &args)
        .output(out)
        .seed("seed", seed);
    if let Some(p) = pcap {
        manifest = manifest.input(p);
    }
    if let Some(p) = rules {
        manifest = manifest.input(p);
    }
    manifest.write_next_to(out)?;
    Ok(())
}

fn cmd_scan(
    dataset_path: &Path,
    rules_path: &Path,
    synthetic_path: Option<&Path>,
    out: Option<&Path>,
    alarms_out: Option<&Path>,
) -> Result<(), CliError> {
    let dataset: LabeledDataset = read_dataset(dataset_path)?;
    let mut ruleset = Ruleset::compile(load_rules(rules_path)?, Provenance::Original)?;
    if let Some(path) = synthetic_path {
        let extra = Ruleset::compile(load_rules(path)?, Provenance::Synthetic)?;
        ruleset = ruleset.merged(&extra)?;
    }

    let alarms = scan(&dataset, &ruleset);
    let report = evaluate(&dataset, &alarms);
    let json = serde_json::to_string_pretty(&report).unwrap();
    println!("{json}");

    if let Some(path) = alarms_out {
        let mut file = std::fs::File::create(path)?;
        for alarm in &alarms {
            writeln!(file, "{}", serde_json::to_string(alarm).unwrap())?;
        }
    }
    if let Some(path) = out {
        std::fs::write(path, &json)?;
        let mut args = vec![
            arg("scan"),
            arg("--dataset"),
            arg(dataset_path.display()),
            arg("--rules"),
            arg(rules_path.display()),
        ];
        if let Some(p) = synthetic_path {
            args.extend([arg("--synthetic"), arg(p.display())]);
        }
        args.extend([arg("--out"), arg(path.display())]);
        if let Some(p) = alarms_out {
            args.extend([arg("--alarms-out"), arg(p.display())]);
        }
        let mut manifest = RunManifest::new("scan", &args)
            .input(dataset_path)
            .input(rules_path)
            .maybe_input(&synthetic_path.map(Path::to_path_buf))
            .output(path);
        if let Some(p) = alarms_out {
            manifest = manifest.output(p);
        }
        manifest.write_next_to(path)?;
    }
    Ok(())
}

fn cmd_experiment_worm(
    baseline_path: &Path,
    synthetic_path: &Path,
    mutants_dir: &Path,
    benign_path: &Path,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let baseline = Ruleset::compile(load_rules(baseline_path)?, Provenance::Original)?;
    let mut synthetic_rules = load_rules(synthetic_path)?;
    if synthetic_rules.is_empty() {
        return Err(CliError::Usage(format!(
            "{} contains no signatures",
            synthetic_path.display()
        )));
    }
    let synthetic = CompiledRule::compile(synthetic_rules.remove(0), Provenance::Synthetic)?;

    let mut paths: Vec<PathBuf> = std::fs::read_dir(mutants_dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    paths.sort();
    let mutants: Vec<Vec<u8>> = paths.iter().map(std::fs::read).collect::<Result<_, _>>()?;
    if mutants.is_empty() {
        return Err(CliError::Usage(format!(
            "{} contains no mutant files",
            mutants_dir.display()
        )));
    }

    let benign = ingest_pcap(&std::fs::read(benign_path)?)?.flows;
    let (_, report) = experiment_worm(&baseline, &synthetic, &mutants, benign, seed)?;
    print!("{}", report.to_table());

    if let Some(path) = out {
        std::fs::write(path, serde_json::to_string_pretty(&report).unwrap())?;
        RunManifest::new(
            "experiment-worm",
            &[
                arg("experiment"),
                arg("worm"),
                arg("--baseline"),
                arg(baseline_path.display()),
                arg("--synthetic"),
                arg(synthetic_path.display()),
                arg("--mutants"),
                arg(mutants_dir.display()),
                arg("--benign"),
                arg(benign_path.display()),
                arg("--seed"),
                arg(seed),
                arg("--out"),
                arg(path.display()),
            ],
        )
        .input(baseline_path)
        .input(synthetic_path)
        .input(mutants_dir)
        .input(benign_path)
        .output(path)
        .seed("seed", seed)
        .write_next_to(path)?;
    }
    Ok(())
}

fn cmd_experiment_general(
    rules_path: &Path,
    add_path: &Path,
    dataset_path: &Path,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let baseline = Ruleset::compile(load_rules(rules_path)?, Provenance::Original)?;
    let added = Ruleset::compile(load_rules(add_path)?, Provenance::Synthetic)?;
    let dataset = read_dataset(dataset_path)?;
    let report = experiment_general(&baseline, &added, &dataset)?;
    print!("{}", report.to_table());

    if let Some(path) = out {
        std::fs::write(path, serde_json::to_string_pretty(&report).unwrap())?;
        RunManifest::new(
            "experiment-general",
            &[
                arg("experiment"),
                arg("general"),
                arg("--rules"),
                arg(rules_path.display()),
                arg("--add"),
                arg(add_path.display()),
                arg("--dataset"),
                arg(dataset_path.display()),
                arg("--out"),
                arg(path.display()),
            ],
        )
        .input(rules_path)
        .input(add_path)
        .input(dataset_path)
        .output(path)
        .write_next_to(path)?;
    }
    Ok(())
}

fn cmd_rerun(manifest_path: &Path) -> Result<(), CliError> {
    let manifest = read_manifest(manifest_path)?;
    if manifest.args.first().map(String::as_str) == Some("rerun") {
        return Err(CliError::Usage("manifest replays cannot nest".to_string()));
    }
    let mut argv = vec!["rnnids".to_string()];
    argv.extend(manifest.args.iter().cloned());
    let cli = Cli::try_parse_from(&argv)
        .map_err(|e| CliError::Usage(format!("manifest args do not parse: {e}")))?;
    dispatch(cli.command, &manifest.args)
}
