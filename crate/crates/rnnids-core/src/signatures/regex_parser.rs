//! Recursive-descent parser for the payload-regex dialect used in signature
//! files: literals, escapes (`\xHH` plus escaped punctuation), character
//! classes with ranges and negation, `.`, `|`, `*`, `+`, `?`, `{m,n}`,
//! grouping, and `^`/`$` anchors.

use super::ast::{ByteClass, ByteSet, RegexAst};
use super::SignatureError;

pub fn parse_regex(pattern: &str) -> Result<RegexAst, SignatureError> {
    let mut p = Parser {
        input: pattern.as_bytes(),
        pos: 0,
    };
    let ast = p.alternation()?;
    if p.pos != p.input.len() {
        return Err(p.err("unexpected character"));
    }
    Ok(ast)
}

struct Parser<'a> {
    input: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> SignatureError {
        SignatureError::RegexSyntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.input.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        Some(b)
    }

    fn alternation(&mut self) -> Result<RegexAst, SignatureError> {
        let mut branches = vec![self.concat()?];
        while self.peek() == Some(b'|') {
            self.bump();
            branches.push(self.concat()?);
        }
        if branches.len() == 1 {
            Ok(branches.pop().unwrap())
        } else {
            Ok(RegexAst::union_of(branches))
        }
    }

    fn concat(&mut self) -> Result<RegexAst, SignatureError> {
        let mut items = Vec::new();
        while let Some(b) = self.peek() {
            if b == b'|' || b == b')' {
                break;
            }
            items.push(self.repeat()?);
        }
        Ok(RegexAst::concat(items))
    }

    fn repeat(&mut self) -> Result<RegexAst, SignatureError> {
        let mut node = self.atom()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.bump();
                    node = RegexAst::Star(Box::new(node));
                }
                Some(b'+') => {
                    self.bump();
                    node = RegexAst::Plus(Box::new(node));
                }
                Some(b'?') => {
                    self.bump();
                    node = RegexAst::Optional(Box::new(node));
                }
                Some(b'{') => {
                    self.bump();
                    let (min, max) = self.repeat_bounds()?;
                    node = RegexAst::Repeat {
                        node: Box::new(node),
                        min,
                        max,
                    };
                }
                _ => break,
            }
        }
        Ok(node)
    }

    fn repeat_bounds(&mut self) -> Result<(u32, Option<u32>), SignatureError> {
        let min = self.number()?;
        match self.bump() {
            Some(b'}') => Ok((min, Some(min))),
            Some(b',') => {
                if self.peek() == Some(b'}') {
                    self.bump();
                    return Ok((min, None));
                }
                let max = self.number()?;
                if self.bump() != Some(b'}') {
                    return Err(self.err("expected '}' after repetition bounds"));
                }
                if max < min {
                    return Err(self.err("repetition maximum below minimum"));
                }
                Ok((min, Some(max)))
            }
            _ => Err(self.err("malformed repetition bounds")),
        }
    }

    fn number(&mut self) -> Result<u32, SignatureError> {
        let start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.bump();
        }
        if self.pos == start {
            return Err(self.err("expected a number"));
        }
        std::str::from_utf8(&self.input[start..self.pos])
            .unwrap()
            .parse::<u32>()
            .map_err(|_| self.err("repetition bound too large"))
    }

    fn atom(&mut self) -> Result<RegexAst, SignatureError> {
        match self.bump() {
            None => Err(self.err("unexpected end of pattern")),
            Some(b'(') => {
                let inner = self.alternation()?;
                if self.bump() != Some(b')') {
                    return Err(self.err("unbalanced parenthesis"));
                }
                Ok(inner)
            }
            Some(b'[') => self.char_class(),
            Some(b'.') => Ok(RegexAst::Dot),
            Some(b'^') => Ok(RegexAst::AnchorStart),
            Some(b'$') => Ok(RegexAst::AnchorEnd),
            Some(b'\\') => Ok(RegexAst::Literal(self.escape()?)),
            Some(b'*' | b'+' | b'?') => {
                self.pos -= 1;
                Err(self.err("repetition operator with no operand"))
            }
            Some(b) => Ok(RegexAst::Literal(b)),
        }
    }

    fn escape(&mut self) -> Result<u8, SignatureError> {
        match self.bump() {
            None => Err(self.err("dangling escape at end of pattern")),
            Some(b'x') => {
                let hi = self.hex_digit()?;
                let lo = self.hex_digit()?;
                Ok(hi * 16 + lo)
            }
            Some(b'n') => Ok(b'\n'),
            Some(b'r') => Ok(b'\r'),
            Some(b't') => Ok(b'\t'),
            Some(b'0') => Ok(0x00),
            Some(b) => Ok(b),
        }
    }

    fn hex_digit(&mut self) -> Result<u8, SignatureError> {
        match self.bump() {
            Some(b) if b.is_ascii_hexdigit() => Ok((b as char).to_digit(16).unwrap() as u8),
            _ => Err(self.err("expected hex digit in \\xHH escape")),
        }
    }

    fn char_class(&mut self) -> Result<RegexAst, SignatureError> {
        let negated = if self.peek() == Some(b'^') {
            self.bump();
            true
        } else {
            false
        };
        let mut set = ByteSet::empty();
        let mut any = false;
        loop {
            match self.peek() {
                None => return Err(self.err("unbalanced character class")),
                Some(b']') => {
                    self.bump();
                    break;
                }
                _ => {}
            }
            let lo = self.class_member()?;
            if self.peek() == Some(b'-') && self.input.get(self.pos + 1) != Some(&b']') {
                self.bump();
                let hi = self.class_member()?;
                if hi < lo {
                    return Err(self.err("inverted range in character class"));
                }
                for b in lo..=hi {
                    set.insert(b);
                }
            } else {
                set.insert(lo);
            }
            any = true;
        }
        if !any {
            return Err(self.err("empty character class"));
        }
        let class = ByteClass { set, negated };
        if class.effective().is_empty() {
            return Err(self.err("character class matches no octet"));
        }
        Ok(RegexAst::CharClass(class))
    }

    fn class_member(&mut self) -> Result<u8, SignatureError> {
        match self.bump() {
            None => Err(self.err("unbalanced character class")),
            Some(b'\\') => self.escape(),
            Some(b) => Ok(b),
        }
    }
}
