//! Regex-to-DFA compilation: Thompson-style NFA construction followed by
//! subset construction.
//!
//! Anchors are compiled exactly by determinizing over an extended alphabet.
//! A payload `s` is conceptually decorated as `⊢ s ⊣`; `^` and `$` become
//! transitions on the begin/end markers, the pattern is wrapped in
//! match-anything loops (so unanchored patterns are substring searches), and
//! the marker transitions are then projected away. The published automaton
//! is a total DFA over the 256 octet values: a dense state set, one
//! successor per (state, octet), a start state, and an accepting set.

use super::ast::{ByteSet, RegexAst};
use super::SignatureError;
use std::collections::HashMap;

/// Default bound on constructed states (NFA or DFA) before compilation
/// fails with `DfaTooLarge`.
pub const DEFAULT_STATE_CAP: usize = 100_000;

#[derive(Clone, Copy)]
enum Label {
    Bytes(ByteSet),
    Bol,
    Eol,
}

#[derive(Default)]
struct NfaState {
    eps: Vec<u32>,
    trans: Vec<(Label, u32)>,
}

struct Nfa {
    states: Vec<NfaState>,
    cap: usize,
}

impl Nfa {
    fn add_state(&mut self) -> Result<u32, SignatureError> {
        if self.states.len() >= self.cap {
            return Err(SignatureError::DfaTooLarge { cap: self.cap });
        }
        self.states.push(NfaState::default());
        Ok((self.states.len() - 1) as u32)
    }

    /// Builds the fragment for `node`, returning (entry, exit).
    fn fragment(&mut self, node: &RegexAst) -> Result<(u32, u32), SignatureError> {
        match node {
            RegexAst::Empty => {
                let start = self.add_state()?;
                let end = self.add_state()?;
                Ok((start, end))
            }
            RegexAst::Epsilon => {
                let start = self.add_state()?;
                let end = self.add_state()?;
                self.states[start as usize].eps.push(end);
                Ok((start, end))
            }
            RegexAst::Literal(b) => self.leaf(Label::Bytes(ByteSet::single(*b))),
            RegexAst::CharClass(c) => self.leaf(Label::Bytes(c.effective())),
            RegexAst::Dot => self.leaf(Label::Bytes(ByteSet::full())),
            RegexAst::AnchorStart => self.leaf(Label::Bol),
            RegexAst::AnchorEnd => self.leaf(Label::Eol),
            RegexAst::Concat(items) => {
                let start = self.add_state()?;
                let mut cur = start;
                for item in items {
                    let (s, e) = self.fragment(item)?;
                    self.states[cur as usize].eps.push(s);
                    cur = e;
                }
                Ok((start, cur))
            }
            RegexAst::Union(branches) => {
                let start = self.add_state()?;
                let end = self.add_state()?;
                for branch in branches {
                    let (s, e) = self.fragment(branch)?;
                    self.states[start as usize].eps.push(s);
                    self.states[e as usize].eps.push(end);
                }
                Ok((start, end))
            }
            RegexAst::Star(inner) => {
                let start = self.add_state()?;
                let end = self.add_state()?;
                let (s, e) = self.fragment(inner)?;
                self.states[start as usize].eps.push(s);
                self.states[start as usize].eps.push(end);
                self.states[e as usize].eps.push(s);
                self.states[e as usize].eps.push(end);
                Ok((start, end))
            }
            RegexAst::Plus(inner) => {
                let (s, e) = self.fragment(inner)?;
                let end = self.add_state()?;
                self.states[e as usize].eps.push(s);
                self.states[e as usize].eps.push(end);
                Ok((s, end))
            }
            RegexAst::Optional(inner) => {
                let start = self.add_state()?;
                let end = self.add_state()?;
                let (s, e) = self.fragment(inner)?;
                self.states[start as usize].eps.push(s);
                self.states[start as usize].eps.push(end);
                self.states[e as usize].eps.push(end);
                Ok((start, end))
            }
            RegexAst::Repeat { node, min, max } => {
                let start = self.add_state()?;
                let mut cur = start;
                for _ in 0..*min {
                    let (s, e) = self.fragment(node)?;
                    self.states[cur as usize].eps.push(s);
                    cur = e;
                }
                match max {
                    None => {
                        let (s, e) = self.fragment(&RegexAst::Star(node.clone()))?;
                        self.states[cur as usize].eps.push(s);
                        cur = e;
                    }
                    Some(max) => {
                        for _ in *min..*max {
                            let (s, e) = self.fragment(&RegexAst::Optional(node.clone()))?;
                            self.states[cur as usize].eps.push(s);
                            cur = e;
                        }
                    }
                }
                Ok((start, cur))
            }
        }
    }

    fn leaf(&mut self, label: Label) -> Result<(u32, u32), SignatureError> {
        let start = self.add_state()?;
        let end = self.add_state()?;
        self.states[start as usize].trans.push((label, end));
        Ok((start, end))
    }
}

/// Compiled payload matcher: a deterministic automaton with a total
/// transition function over octet values 0..=255.
#[derive(Debug, Clone)]
pub struct Dfa {
    /// Row-major transition table: `trans[state * 256 + octet]`.
    trans: Vec<u32>,
    start: u32,
    accepting: Vec<bool>,
}

impl Dfa {
    pub fn num_states(&self) -> usize {
        self.accepting.len()
    }

    pub fn start(&self) -> u32 {
        self.start
    }

    pub fn next(&self, state: u32, octet: u8) -> u32 {
        self.trans[state as usize * 256 + octet as usize]
    }

    pub fn is_accepting(&self, state: u32) -> bool {
        self.accepting[state as usize]
    }

    /// True iff the payload is in the automaton's language (anchoring
    /// semantics are baked into the construction).
    pub fn matches(&self, payload: &[u8]) -> bool {
        let mut q = self.start;
        for &b in payload {
            q = self.next(q, b);
        }
        self.is_accepting(q)
    }
}

/// Compiles with the default state cap.
pub fn compile(ast: &RegexAst) -> Result<Dfa, SignatureError> {
    compile_with_cap(ast, DEFAULT_STATE_CAP)
}

/// Thompson construction then subset construction; fails with `DfaTooLarge`
/// if either automaton would exceed `cap` states.
pub fn compile_with_cap(ast: &RegexAst, cap: usize) -> Result<Dfa, SignatureError> {
    let mut nfa = Nfa {
        states: Vec::new(),
        cap,
    };

    // anything* pattern anything*  — over octets and both markers, which
    // realizes substring search while leaving anchored positions exact.
    let start = nfa.add_state()?;
    let accept;
    {
        let (s1, e1) = any_loop(&mut nfa)?;
        let (s2, e2) = nfa.fragment(ast)?;
        let (s3, e3) = any_loop(&mut nfa)?;
        nfa.states[start as usize].eps.push(s1);
        nfa.states[e1 as usize].eps.push(s2);
        nfa.states[e2 as usize].eps.push(s3);
        accept = e3;
    }

    let full = determinize(&nfa, start, accept, cap)?;

    // Project the markers away: the public start state is the one reached
    // after the begin marker, and a state accepts iff the end marker leads
    // from it to an accepting state.
    let proj_start = full.bol[full.start as usize];
    let accepts = |q: u32| full.accepting[full.eol[q as usize] as usize];

    let mut remap: HashMap<u32, u32> = HashMap::new();
    let mut order: Vec<u32> = Vec::new();
    remap.insert(proj_start, 0);
    order.push(proj_start);
    let mut i = 0;
    while i < order.len() {
        let q = order[i];
        i += 1;
        for b in 0..256usize {
            let t = full.bytes[q as usize * 256 + b];
            if let std::collections::hash_map::Entry::Vacant(slot) = remap.entry(t) {
                slot.insert(order.len() as u32);
                order.push(t);
            }
        }
    }

    let n = order.len();
    let mut trans = vec![0u32; n * 256];
    let mut accepting = vec![false; n];
    for (new_id, &old_id) in order.iter().enumerate() {
        accepting[new_id] = accepts(old_id);
        for b in 0..256usize {
            trans[new_id * 256 + b] = remap[&full.bytes[old_id as usize * 256 + b]];
        }
    }

    Ok(Dfa {
        trans,
        start: 0,
        accepting,
    })
}

fn any_loop(nfa: &mut Nfa) -> Result<(u32, u32), SignatureError> {
    let start = nfa.add_state()?;
    let end = nfa.add_state()?;
    nfa.states[start as usize]
        .trans
        .push((Label::Bytes(ByteSet::full()), start));
    nfa.states[start as usize].trans.push((Label::Bol, start));
    nfa.states[start as usize].trans.push((Label::Eol, start));
    nfa.states[start as usize].eps.push(end);
    Ok((start, end))
}

struct FullDfa {
    bytes: Vec<u32>,
    bol: Vec<u32>,
    eol: Vec<u32>,
    accepting: Vec<bool>,
    start: u32,
}

fn determinize(nfa: &Nfa, start: u32, accept: u32, cap: usize) -> Result<FullDfa, SignatureError> {
    let closure = |seed: Vec<u32>| -> Vec<u32> {
        let mut seen = vec![false; nfa.states.len()];
        let mut stack = seed;
        let mut out = Vec::new();
        for &s in &stack {
            seen[s as usize] = true;
        }
        while let Some(s) = stack.pop() {
            out.push(s);
            for &t in &nfa.states[s as usize].eps {
                if !seen[t as usize] {
                    seen[t as usize] = true;
                    stack.push(t);
                }
            }
        }
        out.sort_unstable();
        out
    };

    let mut ids: HashMap<Vec<u32>, u32> = HashMap::new();
    let mut subsets: Vec<Vec<u32>> = Vec::new();
    let intern = |subset: Vec<u32>,
                  subsets: &mut Vec<Vec<u32>>,
                  ids: &mut HashMap<Vec<u32>, u32>|
     -> Result<u32, SignatureError> {
        if let Some(&id) = ids.get(&subset) {
            return Ok(id);
        }
        if subsets.len() >= cap {
            return Err(SignatureError::DfaTooLarge { cap });
        }
        let id = subsets.len() as u32;
        ids.insert(subset.clone(), id);
        subsets.push(subset);
        Ok(id)
    };

    let q0 = intern(closure(vec![start]), &mut subsets, &mut ids)?;
    let mut bytes: Vec<u32> = Vec::new();
    let mut bol: Vec<u32> = Vec::new();
    let mut eol: Vec<u32> = Vec::new();
    let mut accepting: Vec<bool> = Vec::new();

    let mut next_to_process = 0usize;
    while next_to_process < subsets.len() {
        let subset = subsets[next_to_process].clone();
        next_to_process += 1;

        let mut per_byte: Vec<Vec<u32>> = vec![Vec::new(); 256];
        let mut bol_targets: Vec<u32> = Vec::new();
        let mut eol_targets: Vec<u32> = Vec::new();
        for &s in &subset {
            for &(label, t) in &nfa.states[s as usize].trans {
                match label {
                    Label::Bytes(set) => {
                        for b in set.iter() {
                            per_byte[b as usize].push(t);
                        }
                    }
                    Label::Bol => bol_targets.push(t),
                    Label::Eol => eol_targets.push(t),
                }
            }
        }

        for targets in per_byte.into_iter() {
            let id = intern(closure(targets), &mut subsets, &mut ids)?;
            bytes.push(id);
        }
        bol.push(intern(closure(bol_targets), &mut subsets, &mut ids)?);
        eol.push(intern(closure(eol_targets), &mut subsets, &mut ids)?);
        accepting.push(subset.binary_search(&accept).is_ok());
    }

    Ok(FullDfa {
        bytes,
        bol,
        eol,
        accepting,
        start: q0,
    })
}
