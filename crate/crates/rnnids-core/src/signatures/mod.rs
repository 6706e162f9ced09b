//! Signature rules and the payload-regex machinery behind them: parsing
//! rule files, compiling patterns to total DFAs, matching payloads,
//! generating strings from a pattern's language, taking unions, and
//! repairing raw model-emitted pattern text.

mod ast;
mod compile;
mod generate;
mod regex_parser;
mod repair;
mod ruleset;

pub use ast::{ByteClass, ByteSet, RegexAst};
pub use compile::{compile, compile_with_cap, Dfa, DEFAULT_STATE_CAP};
pub use generate::{generate_matching, generate_with_rng};
pub use regex_parser::parse_regex;
pub use repair::repair_generated;
pub use ruleset::{
    format_ruleset, parse_ruleset, CondOp, HeaderCondition, HeaderField, SignatureRule,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SignatureError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("regex syntax error at offset {pos}: {msg}")]
    RegexSyntax { pos: usize, msg: String },
    #[error("automaton exceeds the configured cap of {cap} states")]
    DfaTooLarge { cap: usize },
    #[error("no accepted string of length <= {max_len} could be generated")]
    GenerationImpossible { max_len: usize },
    #[error("pattern is unrepairable: {source}")]
    UnrepairableOutput {
        #[source]
        source: Box<SignatureError>,
    },
}

impl SignatureError {
    pub fn name(&self) -> &'static str {
        match self {
            SignatureError::Parse { .. } => "ParseError",
            SignatureError::RegexSyntax { .. } => "RegexSyntaxError",
            SignatureError::DfaTooLarge { .. } => "DfaTooLarge",
            SignatureError::GenerationImpossible { .. } => "GenerationImpossible",
            SignatureError::UnrepairableOutput { .. } => "UnrepairableOutput",
        }
    }
}

/// Alternation of two patterns: the union's language contains both inputs'
/// languages.
pub fn union(r1: RegexAst, r2: RegexAst) -> RegexAst {
    RegexAst::union_of(vec![r1, r2])
}

/// True iff `payload` is in the automaton's language.
pub fn match_payload(dfa: &Dfa, payload: &[u8]) -> bool {
    dfa.matches(payload)
}
