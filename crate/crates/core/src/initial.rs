//! Progressive pairwise alignment used to build the starting alignment.
//!
//! Two alignments are combined column-against-column with a dynamic program
//! that scores matched columns by [`substitution_score`] and charges each
//! maximal run of gap columns by [`gap_penalty`]. The program is run end to
//! end, so every column of both inputs survives into the result.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::embeddings::{l2_distance, levenshtein, phrase_vector, EmbeddingProvider};
use crate::model::{Alignment, Cell, ModelError};

const GAP_OPEN: f64 = 1.0;
const GAP_EXTEND: f64 = 0.1;

/// Score charged for a run of `len` consecutive gap columns.
pub fn gap_penalty(len: usize) -> f64 {
    if len == 0 {
        return 0.0;
    }
    let first = len.min(1) as f64;
    let rest = len.saturating_sub(1) as f64;
    -(GAP_OPEN * first + GAP_EXTEND * rest)
}

/// How well two columns, given as their non-empty cells, align.
///
/// When both sides have at least one embeddable cell the score is
/// `10 * (6 - |mean_a - mean_b|)` over unit phrase vectors, which lies in
/// [40, 60]. Otherwise it falls back to the mean length-normalized
/// Levenshtein distance over all cell pairs, scaled into [0, 60].
/// An empty side scores 0.
pub fn substitution_score<P: EmbeddingProvider + ?Sized>(col_a: &[&Cell], col_b: &[&Cell], provider: &P) -> f64 {
    if col_a.is_empty() || col_b.is_empty() {
        return 0.0;
    }
    let mean_a = mean_unit_vector(col_a, provider);
    let mean_b = mean_unit_vector(col_b, provider);
    if let (Some(a), Some(b)) = (mean_a, mean_b) {
        return 10.0 * (6.0 - l2_distance(&a, &b));
    }

    let texts_a: Vec<String> = col_a.iter().map(|c| c.text()).collect();
    let texts_b: Vec<String> = col_b.iter().map(|c| c.text()).collect();
    let mut total = 0.0;
    for ta in &texts_a {
        for tb in &texts_b {
            let longest = ta.chars().count().max(tb.chars().count());
            if longest > 0 {
                total += levenshtein(ta, tb) as f64 / longest as f64;
            }
        }
    }
    let pairs = (texts_a.len() * texts_b.len()) as f64;
    60.0 * (1.0 - total / pairs)
}

fn mean_unit_vector<P: EmbeddingProvider + ?Sized>(cells: &[&Cell], provider: &P) -> Option<Vec<f64>> {
    let mut sum = vec![0.0; provider.dimension()];
    let mut count = 0usize;
    for cell in cells {
        if let Some(v) = phrase_vector(cell.tokens(), provider, true) {
            sum.iter_mut().zip(&v).for_each(|(s, x)| *s += x);
            count += 1;
        }
    }
    if count == 0 {
        return None;
    }
    let n = count as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    Some(sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Match,
    GapInB,
    GapInA,
}

#[derive(Debug, Clone, Copy)]
enum Step {
    Match(usize, usize),
    GapInB(usize),
    GapInA(usize),
}

/// Picks the best of three candidates, preferring earlier ones on ties.
fn best(candidates: [(f64, State); 3]) -> (f64, State) {
    let mut winner = candidates[0];
    for c in &candidates[1..] {
        if c.0 > winner.0 {
            winner = *c;
        }
    }
    winner
}

/// Aligns two alignments; the result stacks `a`'s rows above `b`'s.
pub fn pairwise_align<P: EmbeddingProvider + ?Sized>(a: &Alignment, b: &Alignment, provider: &P) -> Alignment {
    let n = a.cols();
    let m = b.cols();
    let filled = |x: &'_ Alignment, col: usize| -> Vec<Cell> { x.column(col).filter(|c| !c.is_empty()).cloned().collect() };
    let cols_a: Vec<Vec<Cell>> = (0..n).map(|c| filled(a, c)).collect();
    let cols_b: Vec<Vec<Cell>> = (0..m).map(|c| filled(b, c)).collect();

    let mut subst = vec![vec![0.0; m]; n];
    for (i, ca) in cols_a.iter().enumerate() {
        let ca: Vec<&Cell> = ca.iter().collect();
        for (j, cb) in cols_b.iter().enumerate() {
            let cb: Vec<&Cell> = cb.iter().collect();
            subst[i][j] = substitution_score(&ca, &cb, provider);
        }
    }

    let neg = f64::NEG_INFINITY;
    let open = gap_penalty(1);
    let extend = -GAP_EXTEND;
    // score[state][i][j]: best score of aligning a[..i] with b[..j] ending in state.
    let mut mat = vec![vec![neg; m + 1]; n + 1];
    let mut gb = vec![vec![neg; m + 1]; n + 1];
    let mut ga = vec![vec![neg; m + 1]; n + 1];
    mat[0][0] = 0.0;
    for i in 0..=n {
        for j in 0..=m {
            if i > 0 && j > 0 {
                let (s, _) = best([
                    (mat[i - 1][j - 1], State::Match),
                    (gb[i - 1][j - 1], State::GapInB),
                    (ga[i - 1][j - 1], State::GapInA),
                ]);
                mat[i][j] = s + subst[i - 1][j - 1];
            }
            if i > 0 {
                gb[i][j] = best([
                    (mat[i - 1][j] + open, State::Match),
                    (gb[i - 1][j] + extend, State::GapInB),
                    (ga[i - 1][j] + open, State::GapInA),
                ])
                .0;
            }
            if j > 0 {
                ga[i][j] = best([
                    (mat[i][j - 1] + open, State::Match),
                    (gb[i][j - 1] + open, State::GapInB),
                    (ga[i][j - 1] + extend, State::GapInA),
                ])
                .0;
            }
        }
    }

    let (mut i, mut j) = (n, m);
    let mut state = best([(mat[n][m], State::Match), (gb[n][m], State::GapInB), (ga[n][m], State::GapInA)]).1;
    let mut steps = Vec::with_capacity(n + m);
    while i > 0 || j > 0 {
        match state {
            State::Match => {
                steps.push(Step::Match(i - 1, j - 1));
                state = best([
                    (mat[i - 1][j - 1], State::Match),
                    (gb[i - 1][j - 1], State::GapInB),
                    (ga[i - 1][j - 1], State::GapInA),
                ])
                .1;
                i -= 1;
                j -= 1;
            }
            State::GapInB => {
                steps.push(Step::GapInB(i - 1));
                state = best([
                    (mat[i - 1][j] + open, State::Match),
                    (gb[i - 1][j] + extend, State::GapInB),
                    (ga[i - 1][j] + open, State::GapInA),
                ])
                .1;
                i -= 1;
            }
            State::GapInA => {
                steps.push(Step::GapInA(j - 1));
                state = best([
                    (mat[i][j - 1] + open, State::Match),
                    (gb[i][j - 1] + open, State::GapInB),
                    (ga[i][j - 1] + extend, State::GapInA),
                ])
                .1;
                j -= 1;
            }
        }
    }
    steps.reverse();

    let mut grid: Vec<Vec<Cell>> = vec![Vec::with_capacity(steps.len()); a.rows() + b.rows()];
    for step in steps {
        let (from_a, from_b) = match step {
            Step::Match(ia, jb) => (Some(ia), Some(jb)),
            Step::GapInB(ia) => (Some(ia), None),
            Step::GapInA(jb) => (None, Some(jb)),
        };
        let (top, bottom) = grid.split_at_mut(a.rows());
        for (r, row) in top.iter_mut().enumerate() {
            row.push(from_a.map_or_else(Cell::empty, |c| a.cell(r, c).clone()));
        }
        for (r, row) in bottom.iter_mut().enumerate() {
            row.push(from_b.map_or_else(Cell::empty, |c| b.cell(r, c).clone()));
        }
    }
    let texts = a.source_texts().iter().chain(b.source_texts()).cloned().collect();
    Alignment::from_parts(texts, grid)
}

/// Folds the texts, in order, into one alignment.
pub fn progressive_align<S: AsRef<str>, P: EmbeddingProvider + ?Sized>(texts: &[S], provider: &P) -> Result<Alignment, ModelError> {
    let mut rows = Vec::with_capacity(texts.len());
    for (index, text) in texts.iter().enumerate() {
        rows.push(Alignment::degenerate(text.as_ref()).map_err(|_| ModelError::EmptyText { index })?);
    }
    let mut rows = rows.into_iter();
    let mut acc = rows.next().ok_or(ModelError::EmptyInput)?;
    for next in rows {
        acc = pairwise_align(&acc, &next, provider);
    }
    Ok(acc)
}
