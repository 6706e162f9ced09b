//! Regex syntax tree over raw octets, with a structure-preserving
//! pretty-printer and the minimum-length analysis used by the inverse
//! generator.

use std::fmt;

/// Set of octet values, one bit per value.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct ByteSet {
    bits: [u64; 4],
}

impl ByteSet {
    pub const fn empty() -> Self {
        ByteSet { bits: [0; 4] }
    }

    pub fn full() -> Self {
        ByteSet {
            bits: [u64::MAX; 4],
        }
    }

    pub fn single(b: u8) -> Self {
        let mut s = Self::empty();
        s.insert(b);
        s
    }

    pub fn range(lo: u8, hi: u8) -> Self {
        let mut s = Self::empty();
        for b in lo..=hi {
            s.insert(b);
        }
        s
    }

    pub fn insert(&mut self, b: u8) {
        self.bits[(b >> 6) as usize] |= 1u64 << (b & 63);
    }

    pub fn contains(&self, b: u8) -> bool {
        self.bits[(b >> 6) as usize] & (1u64 << (b & 63)) != 0
    }

    pub fn union(&self, other: &ByteSet) -> ByteSet {
        let mut bits = self.bits;
        for (a, b) in bits.iter_mut().zip(other.bits.iter()) {
            *a |= b;
        }
        ByteSet { bits }
    }

    pub fn complement(&self) -> ByteSet {
        let mut bits = self.bits;
        for a in bits.iter_mut() {
            *a = !*a;
        }
        ByteSet { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        (0u16..256).filter_map(move |b| {
            let b = b as u8;
            self.contains(b).then_some(b)
        })
    }

    /// n-th member in ascending order; panics if out of range.
    pub fn nth(&self, n: usize) -> u8 {
        self.iter().nth(n).expect("ByteSet::nth out of range")
    }
}

impl fmt::Debug for ByteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ByteSet{{{} bytes}}", self.len())
    }
}

/// Character class as written: member set plus negation flag. The effective
/// set (negation resolved) is never empty for parsed classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ByteClass {
    pub set: ByteSet,
    pub negated: bool,
}

impl ByteClass {
    pub fn effective(&self) -> ByteSet {
        if self.negated {
            self.set.complement()
        } else {
            self.set
        }
    }
}

/// Regex syntax tree. Concat and Union are flattened on construction, so
/// structurally equal trees print identically and reparse to themselves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegexAst {
    /// The empty language (matches nothing).
    Empty,
    /// The empty string.
    Epsilon,
    Literal(u8),
    CharClass(ByteClass),
    Dot,
    Concat(Vec<RegexAst>),
    Union(Vec<RegexAst>),
    Star(Box<RegexAst>),
    Plus(Box<RegexAst>),
    Optional(Box<RegexAst>),
    Repeat {
        node: Box<RegexAst>,
        min: u32,
        max: Option<u32>,
    },
    AnchorStart,
    AnchorEnd,
}

impl RegexAst {
    /// Concatenation with single-item and nested-concat flattening.
    pub fn concat(items: Vec<RegexAst>) -> RegexAst {
        let mut flat = Vec::with_capacity(items.len());
        for item in items {
            match item {
                RegexAst::Concat(inner) => flat.extend(inner),
                RegexAst::Epsilon => {}
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => RegexAst::Epsilon,
            1 => flat.pop().unwrap(),
            _ => RegexAst::Concat(flat),
        }
    }

    /// Alternation with nested-union flattening.
    pub fn union_of(branches: Vec<RegexAst>) -> RegexAst {
        let mut flat = Vec::with_capacity(branches.len());
        for branch in branches {
            match branch {
                RegexAst::Union(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => RegexAst::Empty,
            1 => flat.pop().unwrap(),
            _ => RegexAst::Union(flat),
        }
    }

    /// Length of the shortest member of the language, ignoring anchor
    /// positional constraints; `None` when the language is empty.
    pub fn min_len(&self) -> Option<usize> {
        match self {
            RegexAst::Empty => None,
            RegexAst::Epsilon | RegexAst::AnchorStart | RegexAst::AnchorEnd => Some(0),
            RegexAst::Literal(_) | RegexAst::Dot => Some(1),
            RegexAst::CharClass(c) => (!c.effective().is_empty()).then_some(1),
            RegexAst::Concat(items) => {
                let mut total = 0usize;
                for item in items {
                    total = total.checked_add(item.min_len()?)?;
                }
                Some(total)
            }
            RegexAst::Union(branches) => branches.iter().filter_map(|b| b.min_len()).min(),
            RegexAst::Star(_) | RegexAst::Optional(_) => Some(0),
            RegexAst::Plus(node) => node.min_len(),
            RegexAst::Repeat { node, min, .. } => {
                if *min == 0 {
                    Some(0)
                } else {
                    node.min_len().map(|l| l * *min as usize)
                }
            }
        }
    }

    /// Pattern text that reparses to a structurally identical tree.
    pub fn pretty_print(&self) -> String {
        let mut out = String::new();
        self.pp(&mut out, Prec::Union);
        out
    }

    fn pp(&self, out: &mut String, ctx: Prec) {
        let my_prec = self.prec();
        let need_parens = (my_prec as u8) < (ctx as u8);
        if need_parens {
            out.push('(');
        }
        match self {
            // No surface syntax denotes the empty language; `$^` is
            // unsatisfiable under the anchor semantics.
            RegexAst::Empty => out.push_str("($^)"),
            RegexAst::Epsilon => out.push_str("()"),
            RegexAst::Literal(b) => push_literal(out, *b, false),
            RegexAst::Dot => out.push('.'),
            RegexAst::AnchorStart => out.push('^'),
            RegexAst::AnchorEnd => out.push('$'),
            RegexAst::CharClass(c) => {
                out.push('[');
                if c.negated {
                    out.push('^');
                }
                let mut members: Vec<u8> = c.set.iter().collect();
                members.sort_unstable();
                let mut i = 0;
                while i < members.len() {
                    let start = members[i];
                    let mut end = start;
                    while i + 1 < members.len() && members[i + 1] == end.wrapping_add(1) {
                        i += 1;
                        end = members[i];
                    }
                    if end as usize - start as usize >= 2 {
                        push_literal(out, start, true);
                        out.push('-');
                        push_literal(out, end, true);
                    } else {
                        for b in start..=end {
                            push_literal(out, b, true);
                        }
                    }
                    i += 1;
                }
                out.push(']');
            }
            RegexAst::Concat(items) => {
                for item in items {
                    item.pp(out, Prec::Concat);
                }
            }
            RegexAst::Union(branches) => {
                for (i, branch) in branches.iter().enumerate() {
                    if i > 0 {
                        out.push('|');
                    }
                    branch.pp(out, Prec::Union);
                }
            }
            RegexAst::Star(node) => {
                node.pp(out, Prec::Repeat);
                out.push('*');
            }
            RegexAst::Plus(node) => {
                node.pp(out, Prec::Repeat);
                out.push('+');
            }
            RegexAst::Optional(node) => {
                node.pp(out, Prec::Repeat);
                out.push('?');
            }
            RegexAst::Repeat { node, min, max } => {
                node.pp(out, Prec::Repeat);
                match max {
                    Some(max) if *max == *min => out.push_str(&format!("{{{min}}}")),
                    Some(max) => out.push_str(&format!("{{{min},{max}}}")),
                    None => out.push_str(&format!("{{{min},}}")),
                }
            }
        }
        if need_parens {
            out.push(')');
        }
    }

    fn prec(&self) -> Prec {
        match self {
            RegexAst::Union(_) => Prec::Union,
            RegexAst::Concat(_) => Prec::Concat,
            RegexAst::Star(_)
            | RegexAst::Plus(_)
            | RegexAst::Optional(_)
            | RegexAst::Repeat { .. } => Prec::Repeat,
            _ => Prec::Atom,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Prec {
    Union = 0,
    Concat = 1,
    Repeat = 2,
    Atom = 3,
}

fn push_literal(out: &mut String, b: u8, in_class: bool) {
    let meta = if in_class {
        matches!(b, b'\\' | b']' | b'^' | b'-' | b'[')
    } else {
        matches!(
            b,
            b'\\'
                | b'.'
                | b'/'
                | b'|'
                | b'*'
                | b'+'
                | b'?'
                | b'('
                | b')'
                | b'['
                | b']'
                | b'{'
                | b'}'
                | b'^'
                | b'$'
                | b'-'
        )
    };
    if b.is_ascii_graphic() && !meta {
        out.push(b as char);
    } else if meta {
        out.push('\\');
        out.push(b as char);
    } else {
        out.push_str(&format!("\\x{b:02x}"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byteset_basics() {
        let mut s = ByteSet::empty();
        assert!(s.is_empty());
        s.insert(0x00);
        s.insert(0xff);
        assert!(s.contains(0x00) && s.contains(0xff) && !s.contains(0x41));
        assert_eq!(s.len(), 2);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0x00, 0xff]);
        assert_eq!(s.complement().len(), 254);
    }

    #[test]
    fn concat_flattens() {
        let ab = RegexAst::concat(vec![RegexAst::Literal(b'a'), RegexAst::Literal(b'b')]);
        let abc = RegexAst::concat(vec![ab.clone(), RegexAst::Literal(b'c')]);
        assert_eq!(
            abc,
            RegexAst::Concat(vec![
                RegexAst::Literal(b'a'),
                RegexAst::Literal(b'b'),
                RegexAst::Literal(b'c'),
            ])
        );
    }

    #[test]
    fn min_len_cases() {
        let lit = RegexAst::Literal(b'a');
        assert_eq!(lit.min_len(), Some(1));
        assert_eq!(RegexAst::Star(Box::new(lit.clone())).min_len(), Some(0));
        assert_eq!(RegexAst::Plus(Box::new(lit.clone())).min_len(), Some(1));
        assert_eq!(RegexAst::Empty.min_len(), None);
        let rep = RegexAst::Repeat {
            node: Box::new(lit),
            min: 3,
            max: Some(5),
        };
        assert_eq!(rep.min_len(), Some(3));
    }
}
