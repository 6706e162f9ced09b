//! Distance and similarity scoring between byte sequences: Levenshtein edit
//! distance with percentage normalization, Smith-Waterman local alignment
//! with a traceback-length-normalized similarity percentage, and pairwise
//! similarity matrices rendered as CSV or a lower-triangle text table.

use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Similarity reported when both inputs are empty. The percentage is
/// undefined in that case; by convention two empty sequences count as
/// identical.
pub const BOTH_EMPTY_SIMILARITY: f64 = 100.0;

#[derive(Debug, Error)]
pub enum SimMetricsError {
    #[error("empty input: Smith-Waterman alignment requires non-empty sequences")]
    EmptyInput,
    #[error("similarity matrix requires at least 2 sequences, got {0}")]
    NotEnoughSequences(usize),
    #[error("invalid alignment params: match must be > 0, mismatch <= 0, gap <= 0")]
    InvalidParams,
}

impl SimMetricsError {
    pub fn name(&self) -> &'static str {
        match self {
            SimMetricsError::EmptyInput => "EmptyInput",
            SimMetricsError::NotEnoughSequences(_) => "NotEnoughSequences",
            SimMetricsError::InvalidParams => "InvalidParams",
        }
    }
}

/// Scoring scheme for local alignment: reward per matched byte, penalty per
/// mismatched byte, penalty per gap position (linear gap model).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentParams {
    pub match_score: f64,
    pub mismatch: f64,
    pub gap_penalty: f64,
}

impl AlignmentParams {
    pub fn new(match_score: f64, mismatch: f64, gap_penalty: f64) -> Result<Self, SimMetricsError> {
        if match_score <= 0.0 || mismatch > 0.0 || gap_penalty > 0.0 {
            return Err(SimMetricsError::InvalidParams);
        }
        Ok(AlignmentParams {
            match_score,
            mismatch,
            gap_penalty,
        })
    }

    /// match = 1, mismatch = -1, gap = -1.
    pub fn unit() -> Self {
        AlignmentParams {
            match_score: 1.0,
            mismatch: -1.0,
            gap_penalty: -1.0,
        }
    }

    /// Same penalties as [`AlignmentParams::unit`] but with the given match
    /// reward (the reports in this crate use match values 1 and 5).
    pub fn with_match(match_score: f64) -> Self {
        AlignmentParams {
            match_score,
            mismatch: -1.0,
            gap_penalty: -1.0,
        }
    }
}

impl Default for AlignmentParams {
    fn default() -> Self {
        AlignmentParams::unit()
    }
}

/// Outcome of a local alignment: the best score, where it occurs, how many
/// DP steps the traceback from that cell covers, and the normalized
/// percentage derived from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentResult {
    pub max_score: f64,
    /// (row, col) of the maximum cell, 1-based over (|a|, |b|).
    pub max_pos: (usize, usize),
    /// Steps on the traceback path from the zero-score origin cell to
    /// `max_pos`; at least 1 whenever `max_score > 0`.
    pub align_len: usize,
    pub normalized_similarity_pct: f64,
}

/// Minimal number of single-byte substitutions, deletions, or insertions
/// transforming `a` into `b`.
pub fn levenshtein_distance(a: &[u8], b: &[u8]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Percentage similarity `100 * (1 - d(a,b) / max(|a|,|b|))`.
///
/// When both inputs are empty the ratio is undefined and
/// [`BOTH_EMPTY_SIMILARITY`] is returned.
pub fn levenshtein_similarity_pct(a: &[u8], b: &[u8]) -> f64 {
    let denom = a.len().max(b.len());
    if denom == 0 {
        return BOTH_EMPTY_SIMILARITY;
    }
    100.0 * (1.0 - levenshtein_distance(a, b) as f64 / denom as f64)
}

/// Local alignment DP with scores floored at zero. The maximum cell is the
/// first one in row-major order attaining the maximum score; the traceback
/// from it prefers diagonal, then up, then left moves, and stops at the
/// first zero-score cell.
pub fn smith_waterman(
    a: &[u8],
    b: &[u8],
    params: AlignmentParams,
) -> Result<AlignmentResult, SimMetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(SimMetricsError::EmptyInput);
    }
    let (n, m) = (a.len(), b.len());
    let cols = m + 1;
    let mut h = vec![0.0f64; (n + 1) * cols];

    let mut max_score = 0.0f64;
    let mut max_pos = (0usize, 0usize);
    for i in 1..=n {
        for j in 1..=m {
            let s = if a[i - 1] == b[j - 1] {
                params.match_score
            } else {
                params.mismatch
            };
            let diag = h[(i - 1) * cols + (j - 1)] + s;
            let up = h[(i - 1) * cols + j] + params.gap_penalty;
            let left = h[i * cols + (j - 1)] + params.gap_penalty;
            let v = diag.max(up).max(left).max(0.0);
            h[i * cols + j] = v;
            if v > max_score {
                max_score = v;
                max_pos = (i, j);
            }
        }
    }

    if max_score <= 0.0 {
        return Ok(AlignmentResult {
            max_score: 0.0,
            max_pos: (0, 0),
            align_len: 0,
            normalized_similarity_pct: 0.0,
        });
    }

    // Walk back along any provenance of each cell value; the stored cell is
    // bit-identical to the winning candidate, so equality checks are exact.
    let mut align_len = 0usize;
    let (mut i, mut j) = max_pos;
    while h[i * cols + j] > 0.0 {
        let v = h[i * cols + j];
        let s = if a[i - 1] == b[j - 1] {
            params.match_score
        } else {
            params.mismatch
        };
        if i > 0 && j > 0 && h[(i - 1) * cols + (j - 1)] + s == v {
            i -= 1;
            j -= 1;
        } else if i > 0 && h[(i - 1) * cols + j] + params.gap_penalty == v {
            i -= 1;
        } else {
            debug_assert!(j > 0 && h[i * cols + (j - 1)] + params.gap_penalty == v);
            j -= 1;
        }
        align_len += 1;
    }

    let pct = (100.0 * max_score / (params.match_score * align_len as f64)).clamp(0.0, 100.0);
    Ok(AlignmentResult {
        max_score,
        max_pos,
        align_len,
        normalized_similarity_pct: pct,
    })
}

/// Normalized local similarity: `100 * max_score / (match * align_len)`,
/// clamped to [0, 100]; 0 when no positive-scoring cell exists.
pub fn sw_normalized_similarity_pct(
    a: &[u8],
    b: &[u8],
    params: AlignmentParams,
) -> Result<f64, SimMetricsError> {
    Ok(smith_waterman(a, b, params)?.normalized_similarity_pct)
}

/// Which pairwise percentage a similarity matrix holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Levenshtein,
    SmithWaterman(AlignmentParams),
}

impl Metric {
    fn pairwise(&self, a: &[u8], b: &[u8]) -> Result<f64, SimMetricsError> {
        match self {
            Metric::Levenshtein => Ok(levenshtein_similarity_pct(a, b)),
            Metric::SmithWaterman(p) => sw_normalized_similarity_pct(a, b, *p),
        }
    }
}

/// Lower-triangular matrix of pairwise similarity percentages. The diagonal
/// is 100 by construction and only the lower triangle is stored; callers
/// order labels with originals first and generated sequences after.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    pub labels: Vec<String>,
    /// `values[i]` has `i + 1` entries: similarities of sequence `i` to
    /// sequences `0..=i`, the last always 100.
    pub values: Vec<Vec<f64>>,
    pub metric: Metric,
}

/// Computes every pairwise percentage under `metric`. Cells run on rayon
/// when the `parallel` feature is enabled.
pub fn similarity_matrix(
    sequences: &[(String, Vec<u8>)],
    metric: Metric,
) -> Result<SimilarityMatrix, SimMetricsError> {
    if sequences.len() < 2 {
        return Err(SimMetricsError::NotEnoughSequences(sequences.len()));
    }
    let pairs: Vec<(usize, usize)> = (0..sequences.len())
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .collect();

    #[cfg(feature = "parallel")]
    let cells: Result<Vec<f64>, SimMetricsError> = pairs
        .par_iter()
        .map(|&(i, j)| metric.pairwise(&sequences[i].1, &sequences[j].1))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let cells: Result<Vec<f64>, SimMetricsError> = pairs
        .iter()
        .map(|&(i, j)| metric.pairwise(&sequences[i].1, &sequences[j].1))
        .collect();

    assemble_matrix(sequences, metric, &pairs, cells?)
}

/// Sequential twin of [`similarity_matrix`], kept public so the two code
/// paths can be compared directly.
pub fn similarity_matrix_seq(
    sequences: &[(String, Vec<u8>)],
    metric: Metric,
) -> Result<SimilarityMatrix, SimMetricsError> {
    if sequences.len() < 2 {
        return Err(SimMetricsError::NotEnoughSequences(sequences.len()));
    }
    let pairs: Vec<(usize, usize)> = (0..sequences.len())
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .collect();
    let cells: Result<Vec<f64>, SimMetricsError> = pairs
        .iter()
        .map(|&(i, j)| metric.pairwise(&sequences[i].1, &sequences[j].1))
        .collect();
    assemble_matrix(sequences, metric, &pairs, cells?)
}

fn assemble_matrix(
    sequences: &[(String, Vec<u8>)],
    metric: Metric,
    pairs: &[(usize, usize)],
    cells: Vec<f64>,
) -> Result<SimilarityMatrix, SimMetricsError> {
    let mut values: Vec<Vec<f64>> = (0..sequences.len()).map(|i| vec![0.0; i + 1]).collect();
    for (idx, &(i, j)) in pairs.iter().enumerate() {
        values[i][j] = cells[idx];
    }
    for (i, row) in values.iter_mut().enumerate() {
        row[i] = 100.0;
    }
    Ok(SimilarityMatrix {
        labels: sequences.iter().map(|(l, _)| l.clone()).collect(),
        values,
        metric,
    })
}

impl SimilarityMatrix {
    /// Similarity of sequences `i` and `j` (symmetric lookup).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j <= i {
            self.values[i][j]
        } else {
            self.values[j][i]
        }
    }

    /// CSV with a label header row and a label column; lower triangle only,
    /// one decimal per percentage.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(",{}\n", self.labels.join(",")));
        for (i, row) in self.values.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.1}")).collect();
            let padding = ",".repeat(self.labels.len() - row.len());
            out.push_str(&format!(
                "{},{}{}\n",
                self.labels[i],
                cells.join(","),
                padding
            ));
        }
        out
    }

    /// Plain-text lower-triangle table: one row per sequence and a trailing
    /// row of column labels.
    pub fn to_text_table(&self) -> String {
        let width = self
            .labels
            .iter()
            .map(|l| l.len())
            .max()
            .unwrap_or(0)
            .max(5);
        let mut out = String::new();
        for (i, row) in self.values.iter().enumerate() {
            out.push_str(&format!("{:<width$}", self.labels[i]));
            for v in row {
                out.push_str(&format!(" {:>width$}", format!("{v:.1}")));
            }
            out.push('\n');
        }
        out.push_str(&format!("{:<width$}", ""));
        for l in &self.labels {
            out.push_str(&format!(" {l:>width$}"));
        }
        out.push('\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent oracle: naive memoized recursion over suffix lengths.
    fn lev_oracle(a: &[u8], b: &[u8]) -> usize {
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

    #[test]
    fn levenshtein_known_values() {
        assert_eq!(levenshtein_distance(b"kitten", b"sitting"), 3);
        assert_eq!(lev_oracle(b"kitten", b"sitting"), 3);
        assert_eq!(levenshtein_distance(b"abc", b"abc"), 0);
        assert_eq!(levenshtein_distance(b"", b"abc"), 3);
    }

    #[test]
    fn levenshtein_pct_known_values() {
        let x = b"same bytes";
        assert_eq!(levenshtein_similarity_pct(x, x), 100.0);
        let v = levenshtein_similarity_pct(b"kitten", b"sitting");
        assert!((v - 100.0 * (1.0 - 3.0 / 7.0)).abs() < 1e-12);
        assert_eq!(levenshtein_similarity_pct(b"abc", b"xyz"), 0.0);
        assert_eq!(levenshtein_similarity_pct(b"", b""), BOTH_EMPTY_SIMILARITY);
    }

    #[test]
    fn sw_local_alignment_example() {
        // "AAB" vs "AB": local segment "AB" aligns perfectly.
        let r = smith_waterman(b"AAB", b"AB", AlignmentParams::unit()).unwrap();
        assert_eq!(r.max_score, 2.0);
        assert_eq!(r.align_len, 2);
        assert_eq!(r.normalized_similarity_pct, 100.0);
    }

    #[test]
    fn sw_self_alignment_scores_match_times_len() {
        for m in [1.0, 5.0] {
            let x = b"payload bytes";
            let r = smith_waterman(x, x, AlignmentParams::with_match(m)).unwrap();
            assert_eq!(r.max_score, m * x.len() as f64);
            assert_eq!(r.align_len, x.len());
            assert_eq!(r.normalized_similarity_pct, 100.0);
        }
    }

    #[test]
    fn sw_disjoint_alphabets_score_zero() {
        let r = smith_waterman(b"aaa", b"bbb", AlignmentParams::unit()).unwrap();
        assert_eq!(r.max_score, 0.0);
        assert_eq!(r.normalized_similarity_pct, 0.0);
        assert_eq!(
            sw_normalized_similarity_pct(b"aaa", b"bbb", AlignmentParams::unit()).unwrap(),
            0.0
        );
    }

    #[test]
    fn sw_empty_input_rejected() {
        assert!(matches!(
            smith_waterman(b"", b"a", AlignmentParams::unit()),
            Err(SimMetricsError::EmptyInput)
        ));
    }

    #[test]
    fn sw_symmetric_max_score() {
        let p = AlignmentParams::with_match(2.0);
        let a = b"GATTACA rules";
        let b = b"great attack";
        let r1 = smith_waterman(a, b, p).unwrap();
        let r2 = smith_waterman(b, a, p).unwrap();
        assert_eq!(r1.max_score, r2.max_score);
    }

    #[test]
    fn matrix_two_identical_sequences() {
        let seqs = vec![
            ("1".to_string(), b"abc".to_vec()),
            ("1*".to_string(), b"abc".to_vec()),
        ];
        let m = similarity_matrix(&seqs, Metric::Levenshtein).unwrap();
        assert_eq!(m.values, vec![vec![100.0], vec![100.0, 100.0]]);
    }

    #[test]
    fn matrix_cells_match_pairwise_ops() {
        let seqs: Vec<(String, Vec<u8>)> = (0..3u8)
            .map(|k| {
                let bytes: Vec<u8> = (0..50u32)
                    .map(|i| ((i * 31 + k as u32 * 17) % 7) as u8 + b'a')
                    .collect();
                (format!("s{k}"), bytes)
            })
            .collect();
        let p = AlignmentParams::unit();
        let m = similarity_matrix(&seqs, Metric::SmithWaterman(p)).unwrap();
        for i in 0..3 {
            for j in 0..i {
                let expect = sw_normalized_similarity_pct(&seqs[i].1, &seqs[j].1, p).unwrap();
                assert_eq!(m.get(i, j), expect);
                assert_eq!(m.get(j, i), expect);
            }
            assert_eq!(m.get(i, i), 100.0);
        }
        let ms = similarity_matrix_seq(&seqs, Metric::SmithWaterman(p)).unwrap();
        for i in 0..3 {
            for j in 0..=i {
                assert_eq!(m.values[i][j], ms.values[i][j]);
            }
        }
    }

    #[test]
    fn matrix_requires_two_sequences() {
        let seqs = vec![("only".to_string(), b"x".to_vec())];
        assert!(matches!(
            similarity_matrix(&seqs, Metric::Levenshtein),
            Err(SimMetricsError::NotEnoughSequences(1))
        ));
    }

    #[test]
    fn levenshtein_symmetry_and_triangle_inequality() {
        let mk = |seed: u64, len: usize| -> Vec<u8> {
            (0..len)
                .map(|i| (((i as u64 + 1) * (seed * 2 + 1) * 2654435761) % 5) as u8)
                .collect()
        };
        for seed in 0..40u64 {
            let a = mk(seed, (seed % 9) as usize + 1);
            let b = mk(seed + 101, (seed % 7) as usize + 2);
            let c = mk(seed + 202, (seed % 11) as usize + 1);
            assert_eq!(levenshtein_distance(&a, &b), levenshtein_distance(&b, &a));
            assert!(
                levenshtein_distance(&a, &c)
                    <= levenshtein_distance(&a, &b) + levenshtein_distance(&b, &c)
            );
        }
    }

    #[test]
    fn sw_scale_relation() {
        let a = b"gattaca attack at dawn";
        let b = b"cat attack at noon ga";
        let base = smith_waterman(a, b, AlignmentParams::unit()).unwrap();
        for k in [2.0, 5.0, 10.0] {
            let scaled = smith_waterman(
                a,
                b,
                AlignmentParams {
                    match_score: k,
                    mismatch: -k,
                    gap_penalty: -k,
                },
            )
            .unwrap();
            assert!((scaled.max_score - k * base.max_score).abs() < 1e-9);
            assert!(
                (scaled.normalized_similarity_pct - base.normalized_similarity_pct).abs() < 1e-9
            );
        }
        // Changing the match reward alone moves the percentage but keeps it
        // in range, and matrices stay symmetric.
        for m in [1.0, 5.0] {
            let r = smith_waterman(a, b, AlignmentParams::with_match(m)).unwrap();
            let r_swapped = smith_waterman(b, a, AlignmentParams::with_match(m)).unwrap();
            assert!((0.0..=100.0).contains(&r.normalized_similarity_pct));
            assert_eq!(r.max_score, r_swapped.max_score);
        }
    }

    #[test]
    fn csv_shape() {
        let seqs = vec![
            ("1".to_string(), b"ab".to_vec()),
            ("2".to_string(), b"ab".to_vec()),
        ];
        let m = similarity_matrix(&seqs, Metric::Levenshtein).unwrap();
        let csv = m.to_csv();
        assert_eq!(csv, ",1,2\n1,100.0,\n2,100.0,100.0\n");
        let table = m.to_text_table();
        assert!(table.contains("100.0"));
    }
}
