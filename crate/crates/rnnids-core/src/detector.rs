//! Minimal signature-matching engine and the FP/FN evaluation harness.
//!
//! Scanning emits at most one alarm per (flow, rule) pair regardless of how
//! many offsets a pattern matches at, and never consults ground-truth
//! labels. Evaluation then derives the false-positive percentage over
//! benign flows and the false-negative percentage over malicious flows
//! from the labels.

use std::collections::{BTreeMap, BTreeSet};
use std::net::Ipv4Addr;

use serde::Serialize;
use thiserror::Error;

use crate::dataset::{FlowRecord, Label, LabeledDataset, Proto};
use crate::signatures::{compile, CondOp, Dfa, HeaderField, SignatureError, SignatureRule};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Error)]
pub enum DetectorError {
    #[error("duplicate rule id `{0}` in ruleset")]
    DuplicateRuleId(String),
    #[error("rule `{id}` has an invalid header condition: {msg}")]
    InvalidRule { id: String, msg: String },
    #[error("rules used to synthesize the dataset overlap the added rules: {ids:?}")]
    Leakage { ids: Vec<String> },
    #[error(transparent)]
    Signature(#[from] SignatureError),
}

impl DetectorError {
    pub fn name(&self) -> &'static str {
        match self {
            DetectorError::DuplicateRuleId(_) => "DuplicateRuleId",
            DetectorError::InvalidRule { .. } => "InvalidRule",
            DetectorError::Leakage { .. } => "LeakageError",
            DetectorError::Signature(e) => e.name(),
        }
    }
}

/// Where a rule came from, for experiment bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Original,
    Synthetic,
}

#[derive(Debug, Clone)]
enum CondValue {
    Proto(Proto),
    Host(Ipv4Addr),
    Port(u16),
}

#[derive(Debug, Clone)]
struct CompiledCondition {
    field: HeaderField,
    op: CondOp,
    value: CondValue,
}

impl CompiledCondition {
    fn matches(&self, flow: &FlowRecord) -> bool {
        match (&self.value, self.field) {
            (CondValue::Proto(p), HeaderField::IpProto) => cmp_eq_ne(self.op, flow.proto == *p),
            (CondValue::Host(h), HeaderField::SrcHost) => cmp_eq_ne(self.op, flow.src_host == *h),
            (CondValue::Host(h), HeaderField::DstHost) => cmp_eq_ne(self.op, flow.dst_host == *h),
            (CondValue::Port(p), HeaderField::SrcPort) => cmp_port(self.op, flow.src_port, *p),
            (CondValue::Port(p), HeaderField::DstPort) => cmp_port(self.op, flow.dst_port, *p),
            _ => false,
        }
    }
}

fn cmp_eq_ne(op: CondOp, eq: bool) -> bool {
    match op {
        CondOp::Eq => eq,
        CondOp::Ne => !eq,
        _ => false,
    }
}

fn cmp_port(op: CondOp, actual: u16, expected: u16) -> bool {
    match op {
        CondOp::Eq => actual == expected,
        CondOp::Ne => actual != expected,
        CondOp::Lt => actual < expected,
        CondOp::Le => actual <= expected,
        CondOp::Gt => actual > expected,
        CondOp::Ge => actual >= expected,
    }
}

/// A rule with its compiled payload automaton and validated header
/// conditions. Rules without a payload pattern never alarm.
#[derive(Debug, Clone)]
pub struct CompiledRule {
    pub rule: SignatureRule,
    pub provenance: Provenance,
    dfa: Option<Dfa>,
    conditions: Vec<CompiledCondition>,
}

impl CompiledRule {
    pub fn compile(rule: SignatureRule, provenance: Provenance) -> Result<Self, DetectorError> {
        let dfa = match &rule.payload_regex {
            Some(ast) => Some(compile(ast)?),
            None => None,
        };
        let mut conditions = Vec::with_capacity(rule.header_conditions.len());
        for cond in &rule.header_conditions {
            let value = match cond.field {
                HeaderField::IpProto => match cond.value.as_str() {
                    "tcp" => CondValue::Proto(Proto::Tcp),
                    "udp" => CondValue::Proto(Proto::Udp),
                    other => {
                        return Err(DetectorError::InvalidRule {
                            id: rule.id.clone(),
                            msg: format!("unknown ip-proto `{other}`"),
                        })
                    }
                },
                HeaderField::SrcHost | HeaderField::DstHost => {
                    CondValue::Host(cond.value.parse().map_err(|_| DetectorError::InvalidRule {
                        id: rule.id.clone(),
                        msg: format!("bad host address `{}`", cond.value),
                    })?)
                }
                HeaderField::SrcPort | HeaderField::DstPort => {
                    CondValue::Port(cond.value.parse().map_err(|_| DetectorError::InvalidRule {
                        id: rule.id.clone(),
                        msg: format!("bad port `{}`", cond.value),
                    })?)
                }
            };
            conditions.push(CompiledCondition {
                field: cond.field,
                op: cond.op,
                value,
            });
        }
        Ok(CompiledRule {
            rule,
            provenance,
            dfa,
            conditions,
        })
    }

    /// Header conditions and payload pattern both hold for the flow.
    pub fn matches_flow(&self, flow: &FlowRecord) -> bool {
        if !self.conditions.iter().all(|c| c.matches(flow)) {
            return false;
        }
        match &self.dfa {
            Some(dfa) => dfa.matches(&flow.payload),
            None => false,
        }
    }
}

/// Compiled rules with unique ids.
#[derive(Debug, Clone, Default)]
pub struct Ruleset {
    pub rules: Vec<CompiledRule>,
}

impl Ruleset {
    pub fn compile(
        rules: Vec<SignatureRule>,
        provenance: Provenance,
    ) -> Result<Ruleset, DetectorError> {
        let mut out = Ruleset::default();
        for rule in rules {
            out.push(CompiledRule::compile(rule, provenance)?)?;
        }
        Ok(out)
    }

    pub fn push(&mut self, rule: CompiledRule) -> Result<(), DetectorError> {
        if self.rules.iter().any(|r| r.rule.id == rule.rule.id) {
            return Err(DetectorError::DuplicateRuleId(rule.rule.id));
        }
        self.rules.push(rule);
        Ok(())
    }

    /// New ruleset containing this one's rules followed by `extra`'s.
    pub fn merged(&self, extra: &Ruleset) -> Result<Ruleset, DetectorError> {
        let mut out = self.clone();
        for rule in &extra.rules {
            out.push(rule.clone())?;
        }
        Ok(out)
    }

    pub fn ids(&self) -> Vec<String> {
        self.rules.iter().map(|r| r.rule.id.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

/// One (flow, rule) detection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Alarm {
    pub flow_index: usize,
    pub rule_id: String,
}

/// Scans every flow against every rule. Output is ordered by (flow index,
/// rule position) and is independent of ground-truth labels. Flows scan in
/// parallel when the `parallel` feature is enabled.
pub fn scan(dataset: &LabeledDataset, ruleset: &Ruleset) -> Vec<Alarm> {
    #[cfg(feature = "parallel")]
    let per_flow: Vec<Vec<Alarm>> = dataset
        .flows
        .par_iter()
        .enumerate()
        .map(|(idx, flow)| scan_flow(idx, flow, ruleset))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let per_flow: Vec<Vec<Alarm>> = dataset
        .flows
        .iter()
        .enumerate()
        .map(|(idx, flow)| scan_flow(idx, flow, ruleset))
        .collect();
    per_flow.into_iter().flatten().collect()
}

/// Sequential twin of [`scan`].
pub fn scan_seq(dataset: &LabeledDataset, ruleset: &Ruleset) -> Vec<Alarm> {
    dataset
        .flows
        .iter()
        .enumerate()
        .flat_map(|(idx, flow)| scan_flow(idx, flow, ruleset))
        .collect()
}

fn scan_flow(idx: usize, flow: &FlowRecord, ruleset: &Ruleset) -> Vec<Alarm> {
    ruleset
        .rules
        .iter()
        .filter(|rule| rule.matches_flow(flow))
        .map(|rule| Alarm {
            flow_index: idx,
            rule_id: rule.rule.id.clone(),
        })
        .collect()
}

/// FP/FN percentages, alarm count, and per-rule hit counts for one scan.
/// `fp_pct` is absent when the dataset has no benign flows, `fn_pct` when
/// it has no malicious flows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub fp_pct: Option<f64>,
    pub fn_pct: Option<f64>,
    pub alarms: usize,
    pub per_rule_hits: BTreeMap<String, usize>,
    pub benign_total: usize,
    pub malicious_total: usize,
}

/// Derives the report from ground-truth labels: FP% is the share of benign
/// flows with at least one alarm, FN% the share of malicious flows with
/// none.
pub fn evaluate(dataset: &LabeledDataset, alarms: &[Alarm]) -> EvalReport {
    let benign_total = dataset.benign_count();
    let malicious_total = dataset.malicious_count();

    let mut alarmed: Vec<bool> = vec![false; dataset.flows.len()];
    let mut per_rule_hits: BTreeMap<String, usize> = BTreeMap::new();
    for alarm in alarms {
        alarmed[alarm.flow_index] = true;
        *per_rule_hits.entry(alarm.rule_id.clone()).or_insert(0) += 1;
    }

    let benign_alarmed = dataset
        .flows
        .iter()
        .zip(&alarmed)
        .filter(|(f, &a)| f.label == Label::Benign && a)
        .count();
    let malicious_missed = dataset
        .flows
        .iter()
        .zip(&alarmed)
        .filter(|(f, &a)| f.label == Label::Malicious && !a)
        .count();

    EvalReport {
        fp_pct: (benign_total > 0).then(|| 100.0 * benign_alarmed as f64 / benign_total as f64),
        fn_pct: (malicious_total > 0)
            .then(|| 100.0 * malicious_missed as f64 / malicious_total as f64),
        alarms: alarms.len(),
        per_rule_hits,
        benign_total,
        malicious_total,
    }
}

/// Paired before/after evaluation on one shared dataset.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub baseline: EvalReport,
    pub augmented: EvalReport,
}

impl ExperimentReport {
    pub fn fp_delta(&self) -> Option<f64> {
        Some(self.augmented.fp_pct? - self.baseline.fp_pct?)
    }

    pub fn fn_delta(&self) -> Option<f64> {
        Some(self.augmented.fn_pct? - self.baseline.fn_pct?)
    }

    pub fn alarm_delta(&self) -> i64 {
        self.augmented.alarms as i64 - self.baseline.alarms as i64
    }

    /// Two-row plain-text table (baseline vs augmented ruleset).
    pub fn to_table(&self) -> String {
        fn cell(v: Option<f64>) -> String {
            match v {
                Some(v) => format!("{v:.2}"),
                None => "-".to_string(),
            }
        }
        let mut out = String::new();
        out.push_str("# one alarm per (flow, rule) pair\n");
        out.push_str(&format!(
            "{:<12} {:>8} {:>8} {:>8}\n",
            "ruleset", "FP[%]", "FN[%]", "alarms"
        ));
        out.push_str(&format!(
            "{:<12} {:>8} {:>8} {:>8}\n",
            "baseline",
            cell(self.baseline.fp_pct),
            cell(self.baseline.fn_pct),
            self.baseline.alarms
        ));
        out.push_str(&format!(
            "{:<12} {:>8} {:>8} {:>8}\n",
            "augmented",
            cell(self.augmented.fp_pct),
            cell(self.augmented.fn_pct),
            self.augmented.alarms
        ));
        out
    }
}

/// Origin label carried by worm-mutant flows in experiment datasets (these
/// flows come from an encoded corpus, not from a rule).
pub const MUTANT_ORIGIN: &str = "worm-mutant";

/// Worm-detection experiment: overlays the mutant payloads onto the benign
/// fixture as malicious flows, then evaluates the baseline ruleset against
/// the baseline plus the synthetic rule on that one dataset.
pub fn experiment_worm(
    baseline: &Ruleset,
    synthetic_rule: &CompiledRule,
    mutant_corpus: &[Vec<u8>],
    benign_fixture: Vec<FlowRecord>,
    rng_seed: u64,
) -> Result<(LabeledDataset, ExperimentReport), DetectorError> {
    assert_eq!(
        synthetic_rule.provenance,
        Provenance::Synthetic,
        "experiment_worm requires a synthetic-provenance rule"
    );
    let pool: Vec<Ipv4Addr> = crate::dataset::default_malicious_pool(8)
        .into_iter()
        .collect();
    let dst = benign_fixture
        .first()
        .map(|f| f.dst_host)
        .unwrap_or_else(|| Ipv4Addr::new(198, 51, 100, 1));
    let malicious: Vec<FlowRecord> = mutant_corpus
        .iter()
        .enumerate()
        .map(|(k, payload)| FlowRecord {
            src_host: pool[k % pool.len()],
            dst_host: dst,
            src_port: 40000 + (k % 1000) as u16,
            dst_port: 80,
            proto: Proto::Tcp,
            payload: payload.clone(),
            timestamp_micros: 0,
            label: Label::Malicious,
            origin: MUTANT_ORIGIN.to_string(),
        })
        .collect();

    let dataset = crate::dataset::overlay(benign_fixture, malicious, rng_seed).map_err(|e| {
        DetectorError::InvalidRule {
            id: "overlay".to_string(),
            msg: e.to_string(),
        }
    })?;

    let mut augmented = baseline.clone();
    augmented.push(synthetic_rule.clone())?;

    let baseline_report = evaluate(&dataset, &scan(&dataset, baseline));
    let augmented_report = evaluate(&dataset, &scan(&dataset, &augmented));
    Ok((
        dataset,
        ExperimentReport {
            baseline: baseline_report,
            augmented: augmented_report,
        },
    ))
}

/// General-case experiment: evaluates `baseline` against `baseline` plus
/// `synthetic` on an existing overlay dataset. Refuses to run when any
/// added rule id also appears among the dataset's malicious-flow origins
/// (those rules generated the traffic being scored).
pub fn experiment_general(
    baseline: &Ruleset,
    synthetic: &Ruleset,
    dataset: &LabeledDataset,
) -> Result<ExperimentReport, DetectorError> {
    let origins: BTreeSet<&str> = dataset
        .flows
        .iter()
        .filter(|f| f.label == Label::Malicious)
        .map(|f| f.origin.as_str())
        .collect();
    let leaked: Vec<String> = synthetic
        .rules
        .iter()
        .map(|r| r.rule.id.clone())
        .filter(|id| origins.contains(id.as_str()))
        .collect();
    if !leaked.is_empty() {
        return Err(DetectorError::Leakage { ids: leaked });
    }

    let augmented = baseline.merged(synthetic)?;
    let baseline_report = evaluate(dataset, &scan(dataset, baseline));
    let augmented_report = evaluate(dataset, &scan(dataset, &augmented));
    Ok(ExperimentReport {
        baseline: baseline_report,
        augmented: augmented_report,
    })
}
