//! Deterministic repair of raw model-emitted regex strings so they parse:
//! stray slashes are stripped, a dangling final backslash is dropped, and
//! unclosed classes/groups are closed in LIFO order. The result must parse
//! or the repair fails with the parser's error attached.

use super::regex_parser::parse_regex;
use super::SignatureError;

pub fn repair_generated(raw: &str) -> Result<String, SignatureError> {
    // R1: strip unescaped '/' anywhere in the body.
    let mut cleaned = String::with_capacity(raw.len());
    let mut escaped = false;
    for c in raw.chars() {
        if escaped {
            cleaned.push(c);
            escaped = false;
            continue;
        }
        match c {
            '\\' => {
                cleaned.push(c);
                escaped = true;
            }
            '/' => {}
            _ => cleaned.push(c),
        }
    }

    // A final dangling backslash would escape whatever closer gets
    // appended next, so it is dropped before the brackets are balanced.
    if escaped {
        cleaned.pop();
    }

    // R2: close unclosed classes/groups in LIFO order. Classes do not
    // nest and a '(' inside a class is a literal member, so the open
    // construct stack is some groups optionally topped by one class.
    let mut depth = 0usize;
    let mut in_class = false;
    let mut esc = false;
    for c in cleaned.chars() {
        if esc {
            esc = false;
            continue;
        }
        match c {
            '\\' => esc = true,
            '[' if !in_class => in_class = true,
            ']' if in_class => in_class = false,
            '(' if !in_class => depth += 1,
            ')' if !in_class && depth > 0 => depth -= 1,
            _ => {}
        }
    }
    if in_class {
        cleaned.push(']');
    }
    for _ in 0..depth {
        cleaned.push(')');
    }

    match parse_regex(&cleaned) {
        Ok(_) => Ok(cleaned),
        Err(e) => Err(SignatureError::UnrepairableOutput {
            source: Box::new(e),
        }),
    }
}
