//! Inverse generation: sampling concrete octet strings from the language of
//! a regex tree.

use super::ast::RegexAst;
use super::compile::compile;
use super::SignatureError;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MAX_ATTEMPTS: usize = 64;

/// Draws a string accepted by `compile(ast)`, deterministically for a given
/// seed. Alternatives are chosen uniformly; `*`/`+` repetition counts are
/// geometric with p = 0.5, capped so the output never exceeds `max_len`
/// octets. Every candidate is verified against the compiled automaton, so
/// patterns whose language is empty (or has no member within `max_len`)
/// fail with `GenerationImpossible`.
pub fn generate_matching(
    ast: &RegexAst,
    rng_seed: u64,
    max_len: usize,
) -> Result<Vec<u8>, SignatureError> {
    let dfa = compile(ast)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    generate_with_rng(ast, &dfa, &mut rng, max_len)
}

/// As [`generate_matching`] but drawing from a caller-owned rng stream, for
/// batch generation.
pub fn generate_with_rng(
    ast: &RegexAst,
    dfa: &super::compile::Dfa,
    rng: &mut ChaCha8Rng,
    max_len: usize,
) -> Result<Vec<u8>, SignatureError> {
    match ast.min_len() {
        None => return Err(SignatureError::GenerationImpossible { max_len }),
        Some(l) if l > max_len => return Err(SignatureError::GenerationImpossible { max_len }),
        Some(_) => {}
    }
    for _ in 0..MAX_ATTEMPTS {
        let mut out = Vec::new();
        if walk(ast, max_len, rng, &mut out) && dfa.matches(&out) {
            return Ok(out);
        }
    }
    Err(SignatureError::GenerationImpossible { max_len })
}

/// Appends one draw from `node` to `out`, using at most `budget` octets.
/// Returns false when the node cannot fit, leaving `out` unchanged.
fn walk(node: &RegexAst, budget: usize, rng: &mut ChaCha8Rng, out: &mut Vec<u8>) -> bool {
    let mark = out.len();
    let ok = walk_inner(node, budget, rng, out);
    if !ok {
        out.truncate(mark);
    }
    ok
}

fn walk_inner(node: &RegexAst, budget: usize, rng: &mut ChaCha8Rng, out: &mut Vec<u8>) -> bool {
    match node {
        RegexAst::Empty => false,
        RegexAst::Epsilon | RegexAst::AnchorStart | RegexAst::AnchorEnd => true,
        RegexAst::Literal(b) => {
            if budget == 0 {
                return false;
            }
            out.push(*b);
            true
        }
        RegexAst::CharClass(c) => {
            let set = c.effective();
            if budget == 0 || set.is_empty() {
                return false;
            }
            out.push(set.nth(rng.gen_range(0..set.len())));
            true
        }
        RegexAst::Dot => {
            if budget == 0 {
                return false;
            }
            out.push(rng.gen_range(0..=255u8));
            true
        }
        RegexAst::Concat(items) => {
            // Reserve the minimum footprint of the remaining items so every
            // child draws within what actually fits.
            let suffix_min: Vec<usize> = {
                let mut mins = vec![0usize; items.len() + 1];
                for (i, item) in items.iter().enumerate().rev() {
                    let m = match item.min_len() {
                        Some(m) => m,
                        None => return false,
                    };
                    mins[i] = mins[i + 1].saturating_add(m);
                }
                mins
            };
            if suffix_min[0] > budget {
                return false;
            }
            let mut remaining = budget;
            for (i, item) in items.iter().enumerate() {
                let child_budget = remaining - suffix_min[i + 1].min(remaining);
                let before = out.len();
                if !walk(item, child_budget, rng, out) {
                    return false;
                }
                remaining -= out.len() - before;
            }
            true
        }
        RegexAst::Union(branches) => {
            let viable: Vec<&RegexAst> = branches
                .iter()
                .filter(|b| b.min_len().is_some_and(|m| m <= budget))
                .collect();
            if viable.is_empty() {
                return false;
            }
            walk(viable[rng.gen_range(0..viable.len())], budget, rng, out)
        }
        RegexAst::Star(inner) => repeat_walk(inner, 0, None, budget, rng, out),
        RegexAst::Plus(inner) => repeat_walk(inner, 1, None, budget, rng, out),
        RegexAst::Optional(inner) => repeat_walk(inner, 0, Some(1), budget, rng, out),
        RegexAst::Repeat { node, min, max } => repeat_walk(
            node,
            *min as usize,
            max.map(|m| m as usize),
            budget,
            rng,
            out,
        ),
    }
}

fn repeat_walk(
    inner: &RegexAst,
    min: usize,
    max: Option<usize>,
    budget: usize,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<u8>,
) -> bool {
    let inner_min = match inner.min_len() {
        Some(m) => m,
        None => return min == 0,
    };
    if min.saturating_mul(inner_min) > budget {
        return false;
    }

    // A zero-width body could repeat forever; bound its optional part the
    // same way a geometric draw bounds byte-producing bodies.
    let affordable = match (budget - min * inner_min).checked_div(inner_min) {
        None => max.unwrap_or(min + 64),
        Some(extra) => max.unwrap_or(usize::MAX).min(min + extra),
    };

    let extra_cap = affordable - min;
    let extra = match max {
        // Bounded repetition picks uniformly among what fits.
        Some(_) => rng.gen_range(0..=extra_cap),
        // Unbounded tails are geometric: stop with probability 1/2 each.
        None => {
            let mut n = 0usize;
            while n < extra_cap && rng.gen_bool(0.5) {
                n += 1;
            }
            n
        }
    };

    let total = min + extra;
    let mut remaining = budget;
    for rep in 0..total {
        let reps_after = total - rep - 1;
        let reserve = reps_after.saturating_mul(inner_min).min(remaining);
        let before = out.len();
        if !walk(inner, remaining - reserve, rng, out) {
            // Mandatory repetitions must fit; optional ones may stop early.
            return rep >= min;
        }
        remaining -= out.len() - before;
    }
    true
}
