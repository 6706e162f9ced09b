//! Parsing and emitting signature files in the block syntax
//!
//! ```text
//! signature dpd_ssh_client {
//!     ip-proto == tcp
//!     payload /^[sS][sS][hH]-[12]\./
//!     requires-reverse-signature dpd_ssh_server
//!     enable "ssh"
//!     tcp-state originator
//! }
//! ```
//!
//! Only the five header fields below are interpreted; every other condition
//! line is preserved verbatim in `options`, and `event`/`enable` lines are
//! collected as actions. `#` begins a comment line.

use super::ast::RegexAst;
use super::regex_parser::parse_regex;
use super::SignatureError;
use std::collections::HashSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeaderField {
    IpProto,
    SrcHost,
    DstHost,
    SrcPort,
    DstPort,
}

impl HeaderField {
    pub fn as_str(&self) -> &'static str {
        match self {
            HeaderField::IpProto => "ip-proto",
            HeaderField::SrcHost => "src-host",
            HeaderField::DstHost => "dst-host",
            HeaderField::SrcPort => "src-port",
            HeaderField::DstPort => "dst-port",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "ip-proto" => Some(HeaderField::IpProto),
            "src-host" => Some(HeaderField::SrcHost),
            "dst-host" => Some(HeaderField::DstHost),
            "src-port" => Some(HeaderField::SrcPort),
            "dst-port" => Some(HeaderField::DstPort),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CondOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CondOp {
    pub fn as_str(&self) -> &'static str {
        match self {
            CondOp::Eq => "==",
            CondOp::Ne => "!=",
            CondOp::Lt => "<",
            CondOp::Le => "<=",
            CondOp::Gt => ">",
            CondOp::Ge => ">=",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "==" => Some(CondOp::Eq),
            "!=" => Some(CondOp::Ne),
            "<" => Some(CondOp::Lt),
            "<=" => Some(CondOp::Le),
            ">" => Some(CondOp::Gt),
            ">=" => Some(CondOp::Ge),
            _ => None,
        }
    }
}

/// One interpreted header condition, e.g. `ip-proto == tcp`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeaderCondition {
    pub field: HeaderField,
    pub op: CondOp,
    pub value: String,
}

/// A parsed signature block. `payload_pattern` keeps the pattern text as
/// written between the slashes; `payload_regex` is its parsed form. Rules
/// without a payload line carry `None` and never match any content.
#[derive(Debug, Clone)]
pub struct SignatureRule {
    pub id: String,
    pub header_conditions: Vec<HeaderCondition>,
    pub payload_pattern: Option<String>,
    pub payload_regex: Option<RegexAst>,
    pub options: Vec<String>,
    pub actions: Vec<String>,
}

impl SignatureRule {
    /// Content rule with the given id and payload pattern and no header
    /// conditions.
    pub fn from_pattern(id: &str, pattern: &str) -> Result<Self, SignatureError> {
        let regex = parse_regex(pattern)?;
        Ok(SignatureRule {
            id: id.to_string(),
            header_conditions: Vec::new(),
            payload_pattern: Some(pattern.to_string()),
            payload_regex: Some(regex),
            options: Vec::new(),
            actions: Vec::new(),
        })
    }
}

impl fmt::Display for SignatureRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "signature {} {{", self.id)?;
        for c in &self.header_conditions {
            writeln!(f, "    {} {} {}", c.field.as_str(), c.op.as_str(), c.value)?;
        }
        if let Some(pat) = &self.payload_pattern {
            writeln!(f, "    payload /{pat}/")?;
        }
        for o in &self.options {
            writeln!(f, "    {o}")?;
        }
        for a in &self.actions {
            writeln!(f, "    {a}")?;
        }
        write!(f, "}}")
    }
}

/// Renders rules back to file syntax, one blank line between blocks.
pub fn format_ruleset(rules: &[SignatureRule]) -> String {
    let blocks: Vec<String> = rules.iter().map(|r| r.to_string()).collect();
    let mut out = blocks.join("\n\n");
    out.push('\n');
    out
}

/// Parses every `signature <id> { ... }` block in `text`.
pub fn parse_ruleset(text: &str) -> Result<Vec<SignatureRule>, SignatureError> {
    let mut rules: Vec<SignatureRule> = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    let mut current: Option<SignatureRule> = None;
    let mut open_line = 0usize;

    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = strip_comment(raw_line).trim().to_string();
        if line.is_empty() {
            continue;
        }

        match current.as_mut() {
            None => {
                let Some(rest) = line.strip_prefix("signature") else {
                    return Err(parse_err(lineno, "expected `signature <id> {`"));
                };
                let rest = rest.trim();
                let Some(header) = rest.strip_suffix('{') else {
                    return Err(parse_err(lineno, "expected `{` at end of signature line"));
                };
                let id = header.trim();
                if id.is_empty() {
                    return Err(parse_err(lineno, "missing signature id"));
                }
                if id.contains(char::is_whitespace) {
                    return Err(parse_err(lineno, "signature id must be a single token"));
                }
                if !seen_ids.insert(id.to_string()) {
                    return Err(parse_err(lineno, &format!("duplicate signature id `{id}`")));
                }
                current = Some(SignatureRule {
                    id: id.to_string(),
                    header_conditions: Vec::new(),
                    payload_pattern: None,
                    payload_regex: None,
                    options: Vec::new(),
                    actions: Vec::new(),
                });
                open_line = lineno;
            }
            Some(rule) => {
                if line == "}" {
                    rules.push(current.take().unwrap());
                    continue;
                }
                if line.starts_with("signature ") {
                    return Err(parse_err(
                        lineno,
                        "unbalanced braces inside signature block",
                    ));
                }
                parse_block_line(rule, &line, lineno)?;
            }
        }
    }

    if let Some(rule) = current {
        return Err(parse_err(
            open_line,
            &format!("signature `{}` is missing its closing brace", rule.id),
        ));
    }
    Ok(rules)
}

fn parse_block_line(
    rule: &mut SignatureRule,
    line: &str,
    lineno: usize,
) -> Result<(), SignatureError> {
    if let Some(rest) = line.strip_prefix("payload") {
        let rest = rest.trim();
        if rule.payload_pattern.is_some() {
            return Err(parse_err(
                lineno,
                "more than one payload line in a signature block",
            ));
        }
        let pattern = extract_slash_delimited(rest)
            .ok_or_else(|| parse_err(lineno, "malformed payload line, expected `payload /…/`"))?;
        let regex = parse_regex(&pattern)
            .map_err(|e| parse_err(lineno, &format!("payload pattern does not parse: {e}")))?;
        rule.payload_pattern = Some(pattern);
        rule.payload_regex = Some(regex);
        return Ok(());
    }

    // Braces may appear inside payload patterns (repetition bounds) but
    // nowhere else within a block.
    if line.contains('{') || line.contains('}') {
        return Err(parse_err(
            lineno,
            "unbalanced braces inside signature block",
        ));
    }

    let mut parts = line.splitn(3, char::is_whitespace);
    let first = parts.next().unwrap_or_default();
    if let Some(field) = HeaderField::parse(first) {
        let op_str = parts.next().unwrap_or_default();
        let value = parts.next().unwrap_or_default().trim();
        let op = CondOp::parse(op_str)
            .ok_or_else(|| parse_err(lineno, &format!("unknown operator `{op_str}`")))?;
        if value.is_empty() {
            return Err(parse_err(lineno, "header condition is missing a value"));
        }
        rule.header_conditions.push(HeaderCondition {
            field,
            op,
            value: value.to_string(),
        });
        return Ok(());
    }

    if first == "event" || first == "enable" {
        rule.actions.push(line.to_string());
    } else {
        rule.options.push(line.to_string());
    }
    Ok(())
}

/// Returns the pattern between a leading `/` and its matching unescaped
/// closing `/`; anything but trailing whitespace after the closer is
/// malformed.
fn extract_slash_delimited(s: &str) -> Option<String> {
    let bytes = s.as_bytes();
    if bytes.first() != Some(&b'/') {
        return None;
    }
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(1) {
        if escaped {
            escaped = false;
            continue;
        }
        match b {
            b'\\' => escaped = true,
            b'/' => {
                if !s[i + 1..].trim().is_empty() {
                    return None;
                }
                return Some(s[1..i].to_string());
            }
            _ => {}
        }
    }
    None
}

fn strip_comment(line: &str) -> &str {
    if line.trim_start().starts_with('#') {
        ""
    } else {
        line
    }
}

fn parse_err(line: usize, msg: &str) -> SignatureError {
    SignatureError::Parse {
        line,
        msg: msg.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SSH_BLOCK: &str = r#"
signature dpd_ssh_client {
    ip-proto == tcp
    payload /^[sS][sS][hH]-[12]\./
    requires-reverse-signature dpd_ssh_server
    enable "ssh"
    tcp-state originator
}
"#;

    #[test]
    fn parses_ssh_client_block() {
        let rules = parse_ruleset(SSH_BLOCK).unwrap();
        assert_eq!(rules.len(), 1);
        let r = &rules[0];
        assert_eq!(r.id, "dpd_ssh_client");
        assert_eq!(
            r.header_conditions,
            vec![HeaderCondition {
                field: HeaderField::IpProto,
                op: CondOp::Eq,
                value: "tcp".to_string(),
            }]
        );
        assert_eq!(r.payload_pattern.as_deref(), Some(r"^[sS][sS][hH]-[12]\."));
        assert!(r.payload_regex.is_some());
        assert_eq!(
            r.options,
            vec![
                "requires-reverse-signature dpd_ssh_server",
                "tcp-state originator"
            ]
        );
        assert_eq!(r.actions, vec![r#"enable "ssh""#]);
    }

    #[test]
    fn empty_input_gives_empty_ruleset() {
        assert!(parse_ruleset("").unwrap().is_empty());
        assert!(parse_ruleset("# just a comment\n").unwrap().is_empty());
    }

    #[test]
    fn two_payload_lines_rejected() {
        let text = "signature s {\n payload /a/\n payload /b/\n}\n";
        let err = parse_ruleset(text).unwrap_err();
        assert!(
            matches!(err, SignatureError::Parse { line: 3, .. }),
            "{err}"
        );
    }

    #[test]
    fn unbalanced_braces_rejected() {
        let err = parse_ruleset("signature s {\n payload /a/\n").unwrap_err();
        assert!(matches!(err, SignatureError::Parse { .. }));
    }

    #[test]
    fn missing_id_rejected() {
        let err = parse_ruleset("signature {\n}\n").unwrap_err();
        assert!(matches!(err, SignatureError::Parse { line: 1, .. }));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let text = "signature s {\n payload /a/\n}\nsignature s {\n payload /b/\n}\n";
        assert!(parse_ruleset(text).is_err());
    }

    #[test]
    fn escaped_slash_inside_payload() {
        let text = r"signature s {
 payload /a\/b/
}
";
        let rules = parse_ruleset(text).unwrap();
        assert_eq!(rules[0].payload_pattern.as_deref(), Some(r"a\/b"));
    }

    #[test]
    fn format_round_trips() {
        let rules = parse_ruleset(SSH_BLOCK).unwrap();
        let text = format_ruleset(&rules);
        let reparsed = parse_ruleset(&text).unwrap();
        assert_eq!(reparsed.len(), 1);
        assert_eq!(reparsed[0].id, rules[0].id);
        assert_eq!(reparsed[0].payload_pattern, rules[0].payload_pattern);
        assert_eq!(reparsed[0].header_conditions, rules[0].header_conditions);
        assert_eq!(reparsed[0].options, rules[0].options);
        assert_eq!(reparsed[0].actions, rules[0].actions);
    }
}
