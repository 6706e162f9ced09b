//! Shared test support: independent oracles and random inputs. Everything
//! here is deliberately written against the definitions, not against the
//! library's implementation paths.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rnnids_core::signatures::{ByteClass, ByteSet, RegexAst};
use std::collections::BTreeSet;

/// All strings over `alphabet` with length 0..=max_len.
pub fn enumerate_strings(alphabet: &[u8], max_len: usize) -> Vec<Vec<u8>> {
    let mut out: Vec<Vec<u8>> = vec![Vec::new()];
    let mut frontier: Vec<Vec<u8>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for &c in alphabet {
                let mut t = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Backtracking matcher used as the regex oracle: returns every position a
/// node can end at when starting at `pos`, with anchors evaluated against
/// the absolute string positions.
fn ends_at(node: &RegexAst, s: &[u8], pos: usize) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    match node {
        RegexAst::Empty => {}
        RegexAst::Epsilon => {
            out.insert(pos);
        }
        RegexAst::Literal(b) => {
            if pos < s.len() && s[pos] == *b {
                out.insert(pos + 1);
            }
        }
        RegexAst::CharClass(c) => {
            if pos < s.len() && c.effective().contains(s[pos]) {
                out.insert(pos + 1);
            }
        }
        RegexAst::Dot => {
            if pos < s.len() {
                out.insert(pos + 1);
            }
        }
        RegexAst::AnchorStart => {
            if pos == 0 {
                out.insert(pos);
            }
        }
        RegexAst::AnchorEnd => {
            if pos == s.len() {
                out.insert(pos);
            }
        }
        RegexAst::Concat(items) => {
            let mut cur: BTreeSet<usize> = [pos].into_iter().collect();
            for item in items {
                let mut next = BTreeSet::new();
                for &p in &cur {
                    next.extend(ends_at(item, s, p));
                }
                cur = next;
                if cur.is_empty() {
                    break;
                }
            }
            out = cur;
        }
        RegexAst::Union(branches) => {
            for b in branches {
                out.extend(ends_at(b, s, pos));
            }
        }
        RegexAst::Star(inner) => {
            out = closure(inner, s, [pos].into_iter().collect());
        }
        RegexAst::Plus(inner) => {
            let one = ends_at(inner, s, pos);
            out = closure(inner, s, one);
        }
        RegexAst::Optional(inner) => {
            out.insert(pos);
            out.extend(ends_at(inner, s, pos));
        }
        RegexAst::Repeat { node, min, max } => {
            // `cur` holds the end positions after exactly k applications.
            let mut cur: BTreeSet<usize> = [pos].into_iter().collect();
            for _ in 0..*min {
                cur = apply(node, s, &cur);
                if cur.is_empty() {
                    break;
                }
            }
            match max {
                None => out = closure(node, s, cur),
                Some(max) => {
                    out.extend(cur.iter().copied());
                    for _ in *min..*max {
                        cur = apply(node, s, &cur);
                        if cur.is_empty() {
                            break;
                        }
                        out.extend(cur.iter().copied());
                    }
                }
            }
        }
    }
    out
}

fn apply(node: &RegexAst, s: &[u8], from: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut next = BTreeSet::new();
    for &p in from {
        next.extend(ends_at(node, s, p));
    }
    next
}

fn closure(inner: &RegexAst, s: &[u8], seed: BTreeSet<usize>) -> BTreeSet<usize> {
    let mut reach = seed;
    loop {
        let mut grew = false;
        for p in reach.clone() {
            for q in ends_at(inner, s, p) {
                grew |= reach.insert(q);
            }
        }
        if !grew {
            return reach;
        }
    }
}

/// Oracle for the substring-search semantics the compiler bakes in: some
/// span of `s` is matched by the pattern, anchors judged absolutely.
pub fn backtrack_search(ast: &RegexAst, s: &[u8]) -> bool {
    (0..=s.len()).any(|start| !ends_at(ast, s, start).is_empty())
}

/// Random small regex tree over the alphabet {a, b}.
pub fn random_ast(rng: &mut ChaCha8Rng, depth: usize) -> RegexAst {
    if depth == 0 {
        return match rng.gen_range(0..8u8) {
            0 | 1 => RegexAst::Literal(b'a'),
            2 | 3 => RegexAst::Literal(b'b'),
            4 => RegexAst::Dot,
            5 => {
                let mut set = ByteSet::empty();
                set.insert(b'a');
                if rng.gen_bool(0.5) {
                    set.insert(b'b');
                }
                RegexAst::CharClass(ByteClass {
                    set,
                    negated: rng.gen_bool(0.2),
                })
            }
            6 => RegexAst::Epsilon,
            _ => {
                if rng.gen_bool(0.5) {
                    RegexAst::AnchorStart
                } else {
                    RegexAst::AnchorEnd
                }
            }
        };
    }
    match rng.gen_range(0..6u8) {
        0 => RegexAst::concat(vec![random_ast(rng, depth - 1), random_ast(rng, depth - 1)]),
        1 => RegexAst::union_of(vec![random_ast(rng, depth - 1), random_ast(rng, depth - 1)]),
        2 => RegexAst::Star(Box::new(random_ast(rng, depth - 1))),
        3 => RegexAst::Plus(Box::new(random_ast(rng, depth - 1))),
        4 => RegexAst::Optional(Box::new(random_ast(rng, depth - 1))),
        _ => {
            let min = rng.gen_range(0..3u32);
            let max = min + rng.gen_range(0..3u32);
            RegexAst::Repeat {
                node: Box::new(random_ast(rng, depth - 1)),
                min,
                max: Some(max),
            }
        }
    }
}

/// Needleman-Wunsch global alignment score (no zero floor), the building
/// block of the brute-force local-alignment oracle.
#[allow(clippy::needless_range_loop)]
pub fn nw_global_score(a: &[u8], b: &[u8], mat: f64, mis: f64, gap: f64) -> f64 {
    let (n, m) = (a.len(), b.len());
    let mut dp = vec![vec![0.0f64; m + 1]; n + 1];
    for i in 1..=n {
        dp[i][0] = i as f64 * gap;
    }
    for j in 1..=m {
        dp[0][j] = j as f64 * gap;
    }
    for i in 1..=n {
        for j in 1..=m {
            let s = if a[i - 1] == b[j - 1] { mat } else { mis };
            dp[i][j] = (dp[i - 1][j - 1] + s)
                .max(dp[i - 1][j] + gap)
                .max(dp[i][j - 1] + gap);
        }
    }
    dp[n][m]
}

/// Brute-force local alignment: the maximum global-alignment score over
/// all pairs of substrings (empty substrings score zero).
pub fn brute_force_local_max(a: &[u8], b: &[u8], mat: f64, mis: f64, gap: f64) -> f64 {
    let mut best = 0.0f64;
    for i0 in 0..=a.len() {
        for i1 in i0..=a.len() {
            for j0 in 0..=b.len() {
                for j1 in j0..=b.len() {
                    best = best.max(nw_global_score(&a[i0..i1], &b[j0..j1], mat, mis, gap));
                }
            }
        }
    }
    best
}

/// Memoized recursive edit-distance oracle.
pub fn lev_oracle(a: &[u8], b: &[u8]) -> usize {
    fn go(a: &[u8], b: &[u8], i: usize, j: usize, memo: &mut Vec<Vec<Option<usize>>>) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(v) = memo[i][j] {
            return v;
        }
        let v = if a[i] == b[j] {
            go(a, b, i + 1, j + 1, memo)
        } else {
            1 + go(a, b, i + 1, j + 1, memo)
                .min(go(a, b, i + 1, j, memo))
                .min(go(a, b, i, j + 1, memo))
        };
        memo[i][j] = Some(v);
        v
    }
    let mut memo = vec![vec![None; b.len() + 1]; a.len() + 1];
    go(a, b, 0, 0, &mut memo)
}
