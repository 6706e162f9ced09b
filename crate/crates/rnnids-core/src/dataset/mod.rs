//! Labeled traffic datasets built by overlay: benign flows ingested from
//! capture files, malicious flows synthesized from signature rules via
//! inverse regex generation, merged with malicious source hosts guaranteed
//! absent from the benign traces.

mod io;
mod pcap;
pub mod pcapgen;

pub use io::{read_dataset, read_dataset_from, write_dataset, write_dataset_to};
pub use pcap::{ingest_pcap, IngestReport};

use std::collections::BTreeSet;
use std::net::Ipv4Addr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signatures::{
    compile, generate_with_rng, CondOp, HeaderField, SignatureError, SignatureRule,
};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("pcap format error: {0}")]
    PcapFormat(String),
    #[error("benign hosts and malicious host pool overlap: {hosts:?}")]
    HostOverlap { hosts: Vec<Ipv4Addr> },
    #[error("malicious host pool is empty")]
    EmptyPool,
    #[error("dataset file line {line}: {msg}")]
    DatasetFormat { line: usize, msg: String },
    #[error("flow labeled {got} where {expected} was required")]
    InvalidLabel { expected: &'static str, got: String },
    #[error(transparent)]
    Signature(#[from] SignatureError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl DatasetError {
    pub fn name(&self) -> &'static str {
        match self {
            DatasetError::PcapFormat(_) => "PcapFormatError",
            DatasetError::HostOverlap { .. } => "HostOverlapError",
            DatasetError::EmptyPool => "EmptyPool",
            DatasetError::DatasetFormat { .. } => "DatasetFormatError",
            DatasetError::InvalidLabel { .. } => "InvalidLabel",
            DatasetError::Signature(e) => e.name(),
            DatasetError::Io(_) => "IoError",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Proto {
    Tcp,
    Udp,
}

impl Proto {
    pub fn as_str(&self) -> &'static str {
        match self {
            Proto::Tcp => "tcp",
            Proto::Udp => "udp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Benign,
    Malicious,
}

/// One observed packet as a flow record with its ground-truth label and
/// origin (`"benign"` or the id of the rule that generated it).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub src_host: Ipv4Addr,
    pub dst_host: Ipv4Addr,
    pub src_port: u16,
    pub dst_port: u16,
    pub proto: Proto,
    #[serde(with = "io::base64_bytes")]
    pub payload: Vec<u8>,
    pub timestamp_micros: u64,
    pub label: Label,
    pub origin: String,
}

/// Counts and seeds recorded alongside a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub benign_count: usize,
    pub malicious_count: usize,
    pub rng_seed: u64,
}

pub const DATASET_FORMAT_VERSION: u32 = 1;

/// Ordered flows plus the host sets the overlay construction guaranteed
/// disjoint and the manifest describing the build.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledDataset {
    pub flows: Vec<FlowRecord>,
    pub benign_hosts: BTreeSet<Ipv4Addr>,
    pub malicious_host_pool: BTreeSet<Ipv4Addr>,
    pub manifest: DatasetManifest,
}

impl LabeledDataset {
    pub fn benign_count(&self) -> usize {
        self.flows
            .iter()
            .filter(|f| f.label == Label::Benign)
            .count()
    }

    pub fn malicious_count(&self) -> usize {
        self.flows
            .iter()
            .filter(|f| f.label == Label::Malicious)
            .count()
    }
}

/// Default pool of malicious source addresses: the 192.0.2.0/24
/// documentation range, which real captures do not use.
pub fn default_malicious_pool(size: usize) -> BTreeSet<Ipv4Addr> {
    (1..=size.min(254))
        .map(|k| Ipv4Addr::new(192, 0, 2, k as u8))
        .collect()
}

/// Synthesized flows plus the rules skipped for unsatisfiable payloads.
#[derive(Debug)]
pub struct SynthReport {
    pub flows: Vec<FlowRecord>,
    pub skipped_rules: Vec<String>,
}

/// Upper bound on generated payload length.
pub const DEFAULT_MAX_PAYLOAD_LEN: usize = 256;

/// Generates `per_rule` malicious flows per rule. Payloads are drawn from
/// each rule's payload language; source hosts are drawn uniformly from
/// `pool` (reuse is permitted — concurrent infections); header fields
/// respect the rule's header conditions. Rules without a satisfiable
/// payload within `max_payload_len` are skipped and reported. Per-rule
/// generation is independent and runs on rayon when the `parallel` feature
/// is enabled.
pub fn synth_malicious_flows(
    rules: &[SignatureRule],
    per_rule: usize,
    pool: &BTreeSet<Ipv4Addr>,
    benign_hosts: &BTreeSet<Ipv4Addr>,
    rng_seed: u64,
    max_payload_len: usize,
) -> Result<SynthReport, DatasetError> {
    check_synth_preconditions(pool, benign_hosts)?;
    #[cfg(feature = "parallel")]
    let per_rule_results: Vec<Result<Vec<FlowRecord>, String>> = rules
        .par_iter()
        .enumerate()
        .map(|(idx, rule)| {
            synth_for_rule(
                rule,
                idx,
                per_rule,
                pool,
                benign_hosts,
                rng_seed,
                max_payload_len,
            )
        })
        .collect();
    #[cfg(not(feature = "parallel"))]
    let per_rule_results: Vec<Result<Vec<FlowRecord>, String>> = rules
        .iter()
        .enumerate()
        .map(|(idx, rule)| {
            synth_for_rule(
                rule,
                idx,
                per_rule,
                pool,
                benign_hosts,
                rng_seed,
                max_payload_len,
            )
        })
        .collect();
    Ok(collect_synth(per_rule_results))
}

/// Sequential twin of [`synth_malicious_flows`].
pub fn synth_malicious_flows_seq(
    rules: &[SignatureRule],
    per_rule: usize,
    pool: &BTreeSet<Ipv4Addr>,
    benign_hosts: &BTreeSet<Ipv4Addr>,
    rng_seed: u64,
    max_payload_len: usize,
) -> Result<SynthReport, DatasetError> {
    check_synth_preconditions(pool, benign_hosts)?;
    let per_rule_results: Vec<Result<Vec<FlowRecord>, String>> = rules
        .iter()
        .enumerate()
        .map(|(idx, rule)| {
            synth_for_rule(
                rule,
                idx,
                per_rule,
                pool,
                benign_hosts,
                rng_seed,
                max_payload_len,
            )
        })
        .collect();
    Ok(collect_synth(per_rule_results))
}

fn check_synth_preconditions(
    pool: &BTreeSet<Ipv4Addr>,
    benign_hosts: &BTreeSet<Ipv4Addr>,
) -> Result<(), DatasetError> {
    if pool.is_empty() {
        return Err(DatasetError::EmptyPool);
    }
    let overlap: Vec<Ipv4Addr> = pool.intersection(benign_hosts).copied().collect();
    if !overlap.is_empty() {
        return Err(DatasetError::HostOverlap { hosts: overlap });
    }
    Ok(())
}

fn collect_synth(per_rule_results: Vec<Result<Vec<FlowRecord>, String>>) -> SynthReport {
    let mut flows = Vec::new();
    let mut skipped_rules = Vec::new();
    for result in per_rule_results {
        match result {
            Ok(mut rule_flows) => flows.append(&mut rule_flows),
            Err(rule_id) => skipped_rules.push(rule_id),
        }
    }
    SynthReport {
        flows,
        skipped_rules,
    }
}

/// `Err(rule_id)` means the rule was skipped.
fn synth_for_rule(
    rule: &SignatureRule,
    rule_idx: usize,
    per_rule: usize,
    pool: &BTreeSet<Ipv4Addr>,
    benign_hosts: &BTreeSet<Ipv4Addr>,
    rng_seed: u64,
    max_payload_len: usize,
) -> Result<Vec<FlowRecord>, String> {
    let Some(regex) = &rule.payload_regex else {
        return Err(rule.id.clone());
    };
    let Ok(dfa) = compile(regex) else {
        return Err(rule.id.clone());
    };
    // Independent per-rule stream so parallel and sequential synthesis
    // produce identical flows.
    let mut rng =
        ChaCha8Rng::seed_from_u64(rng_seed ^ (rule_idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let pool_vec: Vec<Ipv4Addr> = pool.iter().copied().collect();
    let benign_vec: Vec<Ipv4Addr> = benign_hosts.iter().copied().collect();

    let mut flows = Vec::with_capacity(per_rule);
    for _ in 0..per_rule {
        let payload = match generate_with_rng(regex, &dfa, &mut rng, max_payload_len) {
            Ok(p) => p,
            Err(_) => return Err(rule.id.clone()),
        };
        let src_host = pool_vec[rng.gen_range(0..pool_vec.len())];
        let mut dst_host = if benign_vec.is_empty() {
            Ipv4Addr::new(198, 51, 100, 1)
        } else {
            benign_vec[rng.gen_range(0..benign_vec.len())]
        };
        let mut proto = Proto::Tcp;
        let mut src_port: u16 = rng.gen_range(1024..=65535);
        let mut dst_port: u16 = rng.gen_range(1..1024);
        for cond in &rule.header_conditions {
            if cond.op != CondOp::Eq {
                continue;
            }
            match cond.field {
                HeaderField::IpProto => {
                    if cond.value == "udp" {
                        proto = Proto::Udp;
                    }
                }
                HeaderField::SrcPort => {
                    if let Ok(p) = cond.value.parse() {
                        src_port = p;
                    }
                }
                HeaderField::DstPort => {
                    if let Ok(p) = cond.value.parse() {
                        dst_port = p;
                    }
                }
                HeaderField::DstHost => {
                    if let Ok(h) = cond.value.parse() {
                        dst_host = h;
                    }
                }
                // src-host is pool-controlled; a src-host condition cannot
                // override the disjointness guarantee.
                HeaderField::SrcHost => {}
            }
        }
        flows.push(FlowRecord {
            src_host,
            dst_host,
            src_port,
            dst_port,
            proto,
            payload,
            timestamp_micros: 0,
            label: Label::Malicious,
            origin: rule.id.clone(),
        });
    }
    Ok(flows)
}

/// Merges benign and malicious flows into one dataset: verifies host
/// disjointness, assigns malicious flows timestamps uniformly within the
/// benign capture's span, and orders everything by timestamp.
pub fn overlay(
    benign: Vec<FlowRecord>,
    malicious: Vec<FlowRecord>,
    rng_seed: u64,
) -> Result<LabeledDataset, DatasetError> {
    for f in &benign {
        if f.label != Label::Benign {
            return Err(DatasetError::InvalidLabel {
                expected: "benign",
                got: format!("{:?}", f.label),
            });
        }
    }
    for f in &malicious {
        if f.label != Label::Malicious {
            return Err(DatasetError::InvalidLabel {
                expected: "malicious",
                got: format!("{:?}", f.label),
            });
        }
    }

    let benign_hosts: BTreeSet<Ipv4Addr> = benign
        .iter()
        .flat_map(|f| [f.src_host, f.dst_host])
        .collect();
    let malicious_host_pool: BTreeSet<Ipv4Addr> = malicious.iter().map(|f| f.src_host).collect();
    let overlapping: Vec<Ipv4Addr> = benign_hosts
        .intersection(&malicious_host_pool)
        .copied()
        .collect();
    if !overlapping.is_empty() {
        return Err(DatasetError::HostOverlap { hosts: overlapping });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut malicious = malicious;
    if !benign.is_empty() {
        let lo = benign.iter().map(|f| f.timestamp_micros).min().unwrap();
        let hi = benign.iter().map(|f| f.timestamp_micros).max().unwrap();
        for f in &mut malicious {
            f.timestamp_micros = rng.gen_range(lo..=hi);
        }
    }

    let manifest = DatasetManifest {
        version: DATASET_FORMAT_VERSION,
        benign_count: benign.len(),
        malicious_count: malicious.len(),
        rng_seed,
    };
    let mut flows = benign;
    flows.extend(malicious);
    flows.sort_by_key(|f| f.timestamp_micros);

    Ok(LabeledDataset {
        flows,
        benign_hosts,
        malicious_host_pool,
        manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signatures::parse_ruleset;

    fn rule(id: &str, pattern: &str, extra: &str) -> SignatureRule {
        let text = format!("signature {id} {{\n payload /{pattern}/\n{extra}\n}}\n");
        parse_ruleset(&text).unwrap().remove(0)
    }

    fn benign_flow(src: Ipv4Addr, ts: u64) -> FlowRecord {
        FlowRecord {
            src_host: src,
            dst_host: Ipv4Addr::new(10, 0, 0, 99),
            src_port: 1111,
            dst_port: 80,
            proto: Proto::Tcp,
            payload: b"GET / HTTP/1.1".to_vec(),
            timestamp_micros: ts,
            label: Label::Benign,
            origin: "benign".to_string(),
        }
    }

    #[test]
    fn per_rule_count_and_payload_validity() {
        let r = rule("r1", "^EVIL-[0-9]{2}", "");
        let pool = default_malicious_pool(4);
        let report =
            synth_malicious_flows(std::slice::from_ref(&r), 3, &pool, &BTreeSet::new(), 7, 64)
                .unwrap();
        assert_eq!(report.flows.len(), 3);
        let dfa = compile(r.payload_regex.as_ref().unwrap()).unwrap();
        for f in &report.flows {
            assert!(dfa.matches(&f.payload));
            assert_eq!(f.origin, "r1");
            assert_eq!(f.label, Label::Malicious);
            assert!(pool.contains(&f.src_host));
        }
    }

    #[test]
    fn single_host_pool_reuses_host() {
        let r = rule("r1", "^x", "");
        let pool: BTreeSet<Ipv4Addr> = [Ipv4Addr::new(192, 0, 2, 1)].into_iter().collect();
        let report = synth_malicious_flows(&[r], 5, &pool, &BTreeSet::new(), 3, 64).unwrap();
        assert_eq!(report.flows.len(), 5);
        assert!(report
            .flows
            .iter()
            .all(|f| f.src_host == Ipv4Addr::new(192, 0, 2, 1)));
    }

    #[test]
    fn ip_proto_condition_forces_proto() {
        let tcp_rule = rule("rt", "^a", "ip-proto == tcp");
        let udp_rule = rule("ru", "^b", "ip-proto == udp");
        let pool = default_malicious_pool(2);
        let report =
            synth_malicious_flows(&[tcp_rule, udp_rule], 4, &pool, &BTreeSet::new(), 1, 64)
                .unwrap();
        for f in &report.flows {
            match f.origin.as_str() {
                "rt" => assert_eq!(f.proto, Proto::Tcp),
                "ru" => assert_eq!(f.proto, Proto::Udp),
                other => panic!("unexpected origin {other}"),
            }
        }
    }

    #[test]
    fn unsatisfiable_rule_skipped_and_reported() {
        let ok = rule("ok", "^hit", "");
        let impossible = rule("imp", "a{500}", "");
        let pool = default_malicious_pool(2);
        let report =
            synth_malicious_flows(&[ok, impossible], 2, &pool, &BTreeSet::new(), 1, 64).unwrap();
        assert_eq!(report.flows.len(), 2);
        assert_eq!(report.skipped_rules, vec!["imp".to_string()]);
    }

    #[test]
    fn parallel_and_sequential_synth_agree() {
        let rules = vec![rule("a", "^A+B", ""), rule("b", "^C[0-9]*", "")];
        let pool = default_malicious_pool(3);
        let p = synth_malicious_flows(&rules, 6, &pool, &BTreeSet::new(), 9, 64).unwrap();
        let s = synth_malicious_flows_seq(&rules, 6, &pool, &BTreeSet::new(), 9, 64).unwrap();
        assert_eq!(p.flows, s.flows);
    }

    #[test]
    fn overlay_of_single_malicious_flow() {
        let r = rule("r", "^m", "");
        let pool = default_malicious_pool(1);
        let synth = synth_malicious_flows(&[r], 1, &pool, &BTreeSet::new(), 2, 64).unwrap();
        let ds = overlay(vec![], synth.flows, 5).unwrap();
        assert_eq!(ds.flows.len(), 1);
        assert_eq!(ds.manifest.malicious_count, 1);
        assert_eq!(ds.manifest.benign_count, 0);
    }

    #[test]
    fn overlay_rejects_host_overlap() {
        let shared = Ipv4Addr::new(10, 0, 0, 1);
        let benign = vec![benign_flow(shared, 100)];
        let mut bad = benign_flow(shared, 0);
        bad.label = Label::Malicious;
        bad.origin = "r".to_string();
        let err = overlay(benign, vec![bad], 1).unwrap_err();
        match err {
            DatasetError::HostOverlap { hosts } => assert_eq!(hosts, vec![shared]),
            other => panic!("expected HostOverlap, got {other:?}"),
        }
    }

    #[test]
    fn overlay_orders_by_timestamp_within_benign_span() {
        let benign: Vec<FlowRecord> = (0..100)
            .map(|k| benign_flow(Ipv4Addr::new(10, 0, 0, 1), 1000 + k * 10))
            .collect();
        let r = rule("r", "^m+", "");
        let pool = default_malicious_pool(4);
        let synth = synth_malicious_flows(&[r], 10, &pool, &BTreeSet::new(), 8, 64).unwrap();
        let ds = overlay(benign, synth.flows, 99).unwrap();
        assert_eq!(ds.flows.len(), 110);
        for w in ds.flows.windows(2) {
            assert!(w[0].timestamp_micros <= w[1].timestamp_micros);
        }
        for f in ds.flows.iter().filter(|f| f.label == Label::Malicious) {
            assert!((1000..=1990).contains(&f.timestamp_micros));
        }
        assert_eq!(ds.manifest.benign_count, 100);
        assert_eq!(ds.manifest.malicious_count, 10);
    }

    #[test]
    fn overlay_is_deterministic() {
        let benign: Vec<FlowRecord> = (0..10)
            .map(|k| benign_flow(Ipv4Addr::new(10, 0, 0, 2), 50 + k))
            .collect();
        let r = rule("r", "^z[ab]{3}", "");
        let pool = default_malicious_pool(2);
        let synth = synth_malicious_flows(&[r], 5, &pool, &BTreeSet::new(), 4, 64).unwrap();
        let a = overlay(benign.clone(), synth.flows.clone(), 7).unwrap();
        let b = overlay(benign, synth.flows, 7).unwrap();
        assert_eq!(a, b);
    }
}
