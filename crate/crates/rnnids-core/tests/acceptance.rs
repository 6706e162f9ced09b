//! Acceptance suite: one test per release criterion, each printing a
//! PASS line (run with `cargo test --test acceptance -- --nocapture` to see
//! them). Every tolerance is pinned here, in code.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rnnids_core::dataset::{
    default_malicious_pool, ingest_pcap, overlay, read_dataset_from, synth_malicious_flows,
    write_dataset_to, FlowRecord, Label, Proto,
};
use rnnids_core::detector::{
    experiment_general, experiment_worm, CompiledRule, Provenance, Ruleset,
};
use rnnids_core::payloads::{build_spectral, generate_corpus, render_pgm, toy_encode};
use rnnids_core::seqmodel::{
    encode_corpus, forward_loss, loss_gradients, sample, train, LstmConfig, LstmModel,
};
use rnnids_core::signatures::{compile, generate_matching, parse_ruleset, union, SignatureRule};
use rnnids_core::simmetrics::{
    levenshtein_distance, smith_waterman, sw_normalized_similarity_pct, AlignmentParams,
};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn read_fixture(name: &str) -> Vec<u8> {
    std::fs::read(fixtures().join(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

fn read_ruleset(name: &str) -> Vec<SignatureRule> {
    let text = String::from_utf8(read_fixture(name)).unwrap();
    parse_ruleset(&text).unwrap_or_else(|e| panic!("fixture ruleset {name}: {e}"))
}

/// Shipped toy-corpus parameters shared by criteria 5 and 10.
const CORPUS_KEY: [u8; 8] = [0x51, 0x51, 0x51, 0x51, 0x51, 0x51, 0x51, 0xA7];
const CORPUS_SEED: u64 = 77;

#[test]
fn criterion_01_alignment_oracle_equivalence() {
    let strings = common::enumerate_strings(b"ab", 6);
    let params = AlignmentParams::unit();
    let mut pairs = 0usize;
    for a in &strings {
        for b in &strings {
            assert_eq!(
                levenshtein_distance(a, b),
                common::lev_oracle(a, b),
                "levenshtein mismatch on {a:?} vs {b:?}"
            );
            if !a.is_empty() && !b.is_empty() {
                let got = smith_waterman(a, b, params).unwrap().max_score;
                let want = common::brute_force_local_max(a, b, 1.0, -1.0, -1.0);
                assert_eq!(got, want, "smith-waterman mismatch on {a:?} vs {b:?}");
            }
            pairs += 1;
        }
    }
    assert_eq!(pairs, 127 * 127);
    println!("[acceptance] criterion 1 (alignment oracle equivalence, {pairs} pairs): PASS");
}

#[test]
fn criterion_02_gradient_check() {
    let corpus = encode_corpus(b"abcbacabdcba", "gradcheck").unwrap();
    let cfg = LstmConfig {
        hidden_size: Some(6),
        embedding_size: 5,
        num_hidden_layers: 2,
        sequence_length: 32,
        ..LstmConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut model = LstmModel::init(&mut rng, corpus.vocab.clone(), cfg);
    // Wider-than-training weights keep the gradients well above the
    // central-difference noise floor.
    let base: Vec<f64> = model
        .param_vec()
        .iter()
        .map(|_| rng.gen_range(-0.5..0.5))
        .collect();
    model.load_param_vec(&base).unwrap();

    let (_, grads) = loss_gradients(&model, &corpus.tokens).unwrap();
    let analytic = grads.param_vec();

    let step = 1e-5;
    let mut worst = 0.0f64;
    let n = base.len();
    let sampled: Vec<usize> = (0..120).map(|_| rng.gen_range(0..n)).collect();
    for &idx in &sampled {
        let mut p = base.clone();
        p[idx] += step;
        model.load_param_vec(&p).unwrap();
        let lp = forward_loss(&model, &corpus.tokens).unwrap();
        p[idx] -= 2.0 * step;
        model.load_param_vec(&p).unwrap();
        let lm = forward_loss(&model, &corpus.tokens).unwrap();
        let numeric = (lp - lm) / (2.0 * step);
        let denom = numeric.abs().max(analytic[idx].abs()).max(1e-6);
        worst = worst.max((numeric - analytic[idx]).abs() / denom);
    }
    assert!(worst < 1e-4, "max relative error {worst}");
    println!(
        "[acceptance] criterion 2 (gradient check, {} params, max rel err {worst:.2e}): PASS",
        sampled.len()
    );
}

#[test]
fn criterion_03_loss_sanity() {
    // Zeroed output projection: loss is exactly ln |vocab|.
    for (bytes, vocab_size) in [
        (b"abcab".to_vec(), 3usize),
        ((0u8..=255).cycle().take(400).collect::<Vec<u8>>(), 256),
    ] {
        let corpus = encode_corpus(&bytes, "sanity").unwrap();
        assert_eq!(corpus.vocab.len(), vocab_size);
        let cfg = LstmConfig {
            hidden_size: Some(16),
            embedding_size: 8,
            ..LstmConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut model = LstmModel::init(&mut rng, corpus.vocab.clone(), cfg);
        model.w_out.fill(0.0);
        model.b_out.fill(0.0);
        let loss = forward_loss(&model, &corpus.tokens).unwrap();
        let expect = (vocab_size as f64).ln();
        assert!(
            (loss - expect).abs() < 1e-9,
            "vocab {vocab_size}: loss {loss} vs ln|V| {expect}"
        );
    }

    // Random small init lands within ±5% of ln |vocab|.
    let bytes: Vec<u8> = (0u8..=255).cycle().take(512).collect();
    let corpus = encode_corpus(&bytes, "sanity-rand").unwrap();
    let cfg = LstmConfig {
        hidden_size: Some(64),
        ..LstmConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let model = LstmModel::init(&mut rng, corpus.vocab.clone(), cfg);
    let loss = forward_loss(&model, &corpus.tokens).unwrap();
    let expect = 256f64.ln();
    assert!(
        (loss - expect).abs() <= 0.05 * expect,
        "random init loss {loss} outside ±5% of {expect}"
    );
    println!("[acceptance] criterion 3 (loss sanity, ln|V| within tolerance): PASS");
}

#[test]
fn criterion_04_memorization() {
    let fixture = read_fixture("memorize_200.bin");
    assert_eq!(fixture.len(), 200);
    let corpus = encode_corpus(&fixture, "memorize").unwrap();
    let cfg = LstmConfig {
        hidden_size: Some(200),
        ..LstmConfig::default()
    };
    assert_eq!(
        (cfg.batch_size, cfg.epochs, cfg.num_hidden_layers),
        (1, 100, 2)
    );
    assert_eq!(
        (cfg.learning_rate, cfg.sequence_length, cfg.embedding_size),
        (0.001, 1, 64)
    );

    let outcome = train(&corpus, &cfg).unwrap();
    let best = outcome
        .loss_trace
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    assert!(best < 0.1, "loss never dropped below 0.1 (best {best})");

    let continuation = sample(&outcome.model, &fixture[..10], 190, 0.0, 0).unwrap();
    let correct = continuation
        .iter()
        .zip(&fixture[10..])
        .filter(|(a, b)| a == b)
        .count();
    assert!(
        correct >= 171,
        "argmax continuation reproduced only {correct}/190 bytes"
    );
    println!(
        "[acceptance] criterion 4 (memorization: best loss {best:.4}, continuation {correct}/190): PASS"
    );
}

#[test]
fn criterion_05_mutant_similarity_band() {
    let base = read_fixture("base_payload.bin");
    let variants: Vec<Vec<u8>> = (1..=5)
        .map(|k| toy_encode(&base, &CORPUS_KEY, k, CORPUS_SEED).unwrap())
        .collect();
    let concatenated: Vec<u8> = variants.iter().flatten().copied().collect();
    let corpus = encode_corpus(&concatenated, "worms-together").unwrap();

    let cfg = LstmConfig {
        epochs: 40,
        hidden_size: Some(48),
        ..LstmConfig::default()
    };
    let outcome = train(&corpus, &cfg).unwrap();

    let params = AlignmentParams::unit();
    let mut all: Vec<f64> = Vec::new();
    for s_idx in 0..3usize {
        let length = variants[s_idx].len();
        let sampled = sample(
            &outcome.model,
            &concatenated[..8],
            length,
            1.0,
            1208 + s_idx as u64,
        )
        .unwrap();
        assert!(
            variants.iter().all(|v| *v != sampled),
            "sample {s_idx} is byte-identical to a training variant"
        );
        for v in &variants {
            all.push(sw_normalized_similarity_pct(&sampled, v, params).unwrap());
        }
    }
    let min = all.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(
        min >= 30.0 && max <= 95.0,
        "similarity band violated: [{min:.1}, {max:.1}] not within [30, 95]"
    );
    println!(
        "[acceptance] criterion 5 (mutant similarity band [{min:.1}, {max:.1}] within [30, 95]): PASS"
    );
}

#[test]
fn criterion_06_inverse_regex_soundness() {
    let mut patterns = 0usize;
    for file in [
        "protocols.sig",
        "attack_rules.sig",
        "gen_rules.sig",
        "add_rules.sig",
        "worm/baseline.sig",
        "worm/synthetic.sig",
    ] {
        for rule in read_ruleset(file) {
            let Some(ast) = rule.payload_regex else {
                continue;
            };
            let dfa = compile(&ast).unwrap();
            for seed in 0..1000u64 {
                let payload = generate_matching(&ast, seed, 256)
                    .unwrap_or_else(|e| panic!("rule {} seed {seed}: {e}", rule.id));
                assert!(
                    dfa.matches(&payload),
                    "rule {}: generated payload does not re-match",
                    rule.id
                );
            }
            patterns += 1;
        }
    }
    assert!(patterns >= 20);
    println!(
        "[acceptance] criterion 6 (inverse generation: {patterns} patterns x 1000 draws all re-match): PASS"
    );
}

#[test]
fn criterion_07_union_containment() {
    let strings = common::enumerate_strings(b"ab", 6);
    let mut rng = ChaCha8Rng::seed_from_u64(0x1111);
    let mut violations = 0usize;
    for _ in 0..500 {
        let r1 = common::random_ast(&mut rng, 3);
        let r2 = common::random_ast(&mut rng, 3);
        let d1 = compile(&r1).unwrap();
        let du = compile(&union(r1.clone(), r2)).unwrap();
        for s in &strings {
            if d1.matches(s) && !du.matches(s) {
                violations += 1;
            }
        }
    }
    assert_eq!(violations, 0);
    println!("[acceptance] criterion 7 (union containment, 500 pairs, 0 violations): PASS");
}

#[test]
fn criterion_08_experiment_worm_trend() {
    let benign = ingest_pcap(&read_fixture("benign.pcap")).unwrap().flows;

    let mut baseline_rules = read_ruleset("protocols.sig");
    baseline_rules.extend(read_ruleset("worm/baseline.sig"));
    let baseline = Ruleset::compile(baseline_rules, Provenance::Original).unwrap();

    let synthetic_rule = CompiledRule::compile(
        read_ruleset("worm/synthetic.sig").remove(0),
        Provenance::Synthetic,
    )
    .unwrap();

    let mutants_dir = fixtures().join("worm/mutants");
    let mut names: Vec<PathBuf> = std::fs::read_dir(&mutants_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    names.sort();
    let mutants: Vec<Vec<u8>> = names.iter().map(|p| std::fs::read(p).unwrap()).collect();
    assert_eq!(mutants.len(), 12);

    let (_, report) = experiment_worm(&baseline, &synthetic_rule, &mutants, benign, 11).unwrap();

    let fn_base = report.baseline.fn_pct.expect("malicious flows present");
    let fn_aug = report.augmented.fn_pct.expect("malicious flows present");
    assert!(
        fn_base > 0.0,
        "baseline FN should be positive, got {fn_base}"
    );
    assert_eq!(fn_aug, 0.0, "augmented FN should be 0, got {fn_aug}");
    assert_eq!(
        report.baseline.fp_pct, report.augmented.fp_pct,
        "FP must be unchanged by the synthetic worm rule"
    );
    println!(
        "[acceptance] criterion 8 (worm experiment: FN {fn_base:.2}% -> 0%, FP unchanged at {:.2}%): PASS",
        report.baseline.fp_pct.unwrap()
    );
}

#[test]
fn criterion_09_experiment_general_trend() {
    let benign = ingest_pcap(&read_fixture("benign.pcap")).unwrap().flows;
    let gen_rules = read_ruleset("gen_rules.sig");
    let pool = default_malicious_pool(16);
    let benign_hosts: BTreeSet<std::net::Ipv4Addr> = benign
        .iter()
        .flat_map(|f| [f.src_host, f.dst_host])
        .collect();
    let synth = synth_malicious_flows(&gen_rules, 40, &pool, &benign_hosts, 2024, 128).unwrap();
    assert!(synth.skipped_rules.is_empty());
    let dataset = overlay(benign, synth.flows, 5).unwrap();

    let mut baseline_rules = read_ruleset("protocols.sig");
    baseline_rules.extend(read_ruleset("attack_rules.sig"));
    let baseline = Ruleset::compile(baseline_rules, Provenance::Original).unwrap();
    let added = Ruleset::compile(read_ruleset("add_rules.sig"), Provenance::Synthetic).unwrap();

    let report = experiment_general(&baseline, &added, &dataset).unwrap();
    let fn_base = report.baseline.fn_pct.unwrap();
    let fn_aug = report.augmented.fn_pct.unwrap();
    let fp_base = report.baseline.fp_pct.unwrap();
    let fp_aug = report.augmented.fp_pct.unwrap();

    assert!(fn_base > 0.0, "baseline FN must be positive, got {fn_base}");
    assert!(
        fn_aug < fn_base,
        "FN must strictly decrease: {fn_base} -> {fn_aug}"
    );
    assert!(
        fp_aug - fp_base <= 1.0,
        "FP rose by more than 1 percentage point: {fp_base} -> {fp_aug}"
    );
    assert!(
        report.augmented.alarms >= report.baseline.alarms,
        "alarm count decreased: {} -> {}",
        report.baseline.alarms,
        report.augmented.alarms
    );
    println!(
        "[acceptance] criterion 9 (general experiment: FN {fn_base:.2}%->{fn_aug:.2}%, FP {fp_base:.2}%->{fp_aug:.2}%, alarms {}->{}): PASS",
        report.baseline.alarms, report.augmented.alarms
    );
}

#[test]
fn criterion_10_spectral_determinism() {
    let base = read_fixture("base_payload.bin");
    let corpus = generate_corpus(&base, &CORPUS_KEY, 100, CORPUS_SEED, "toy-xor").unwrap();
    assert_eq!(corpus.variants.len(), 101);

    let matrix_a = build_spectral(&corpus).unwrap();
    let pgm_a = render_pgm(&matrix_a);
    let corpus_b = generate_corpus(&base, &CORPUS_KEY, 100, CORPUS_SEED, "toy-xor").unwrap();
    let pgm_b = render_pgm(&build_spectral(&corpus_b).unwrap());
    assert_eq!(pgm_a, pgm_b, "spectral render differs across runs");

    let constant = matrix_a.constant_columns();
    assert!(
        constant.len() >= 8,
        "expected >= 8 constant columns, got {}",
        constant.len()
    );
    println!(
        "[acceptance] criterion 10 (spectral: byte-identical renders, {} constant columns): PASS",
        constant.len()
    );
}

#[test]
fn criterion_11_dataset_invariants() {
    let gen_rules = read_ruleset("gen_rules.sig");
    let dfas: BTreeMap<String, rnnids_core::signatures::Dfa> = gen_rules
        .iter()
        .map(|r| {
            (
                r.id.clone(),
                compile(r.payload_regex.as_ref().unwrap()).unwrap(),
            )
        })
        .collect();

    for trial in 0..10_000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial);
        let per_rule = rng.gen_range(1..=3usize);
        let pool_size = rng.gen_range(1..=8usize);
        let pool = default_malicious_pool(pool_size);

        let benign_count = rng.gen_range(0..=5usize);
        let benign: Vec<FlowRecord> = (0..benign_count)
            .map(|k| FlowRecord {
                src_host: std::net::Ipv4Addr::new(10, 0, rng.gen_range(0..4), rng.gen()),
                dst_host: std::net::Ipv4Addr::new(172, 16, 0, rng.gen_range(1..9)),
                src_port: rng.gen_range(1024..=65535),
                dst_port: rng.gen_range(1..1024),
                proto: if rng.gen_bool(0.5) {
                    Proto::Tcp
                } else {
                    Proto::Udp
                },
                payload: (0..rng.gen_range(0..32usize)).map(|_| rng.gen()).collect(),
                timestamp_micros: 1_000_000 + k as u64 * 977,
                label: Label::Benign,
                origin: "benign".to_string(),
            })
            .collect();
        let benign_hosts: BTreeSet<std::net::Ipv4Addr> = benign
            .iter()
            .flat_map(|f| [f.src_host, f.dst_host])
            .collect();

        let synth =
            synth_malicious_flows(&gen_rules, per_rule, &pool, &benign_hosts, trial, 64).unwrap();
        let dataset = overlay(benign, synth.flows, trial).unwrap();

        // Host disjointness.
        assert!(
            dataset
                .benign_hosts
                .intersection(&dataset.malicious_host_pool)
                .next()
                .is_none(),
            "trial {trial}: host sets overlap"
        );
        // Ground-truth completeness and origin consistency.
        for f in &dataset.flows {
            match f.label {
                Label::Benign => assert_eq!(f.origin, "benign"),
                Label::Malicious => assert!(dfas.contains_key(&f.origin)),
            }
        }
        assert_eq!(dataset.manifest.benign_count, dataset.benign_count());
        assert_eq!(dataset.manifest.malicious_count, dataset.malicious_count());

        // Round-trip and payload revalidation at read-back time.
        let mut buf = Vec::new();
        write_dataset_to(&dataset, &mut buf).unwrap();
        let back = read_dataset_from(&mut buf.as_slice()).unwrap();
        assert_eq!(
            back, dataset,
            "trial {trial}: round trip changed the dataset"
        );
        for f in back.flows.iter().filter(|f| f.label == Label::Malicious) {
            assert!(
                dfas[&f.origin].matches(&f.payload),
                "trial {trial}: payload fails revalidation against {}",
                f.origin
            );
        }
    }
    println!("[acceptance] criterion 11 (10000 randomized overlays, all invariants hold): PASS");
}
