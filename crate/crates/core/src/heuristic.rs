//! Alignment quality heuristic.
//!
//! Two conciseness components (total and filled column counts, each relative
//! to the width of the longest row) and one coherence component (embedding
//! variance per column, weighted by how many rows the column covers) are
//! combined linearly:
//!
//! `total = -w_col*s_col - w_fcol*s_fcol - w_embed*s_embed^2 + w_bias`

use alloc::vec::Vec;

use crate::embeddings::{phrase_vector, EmbeddingProvider};
use crate::model::Alignment;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct Weights {
    pub w_col: f64,
    pub w_fcol: f64,
    pub w_embed: f64,
    pub w_bias: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            w_col: 0.2,
            w_fcol: 0.2,
            w_embed: 1.0,
            w_bias: 5.0,
        }
    }
}

impl Weights {
    pub fn is_finite(&self) -> bool {
        [self.w_col, self.w_fcol, self.w_embed, self.w_bias].iter().all(|w| w.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScoreBreakdown {
    pub s_col: f64,
    pub s_fcol: f64,
    pub s_embed: f64,
    pub total: f64,
}

impl ScoreBreakdown {
    pub fn combine(weights: &Weights, s_col: f64, s_fcol: f64, s_embed: f64) -> Self {
        let total = -weights.w_col * s_col - weights.w_fcol * s_fcol - weights.w_embed * (s_embed * s_embed) + weights.w_bias;
        Self {
            s_col,
            s_fcol,
            s_embed,
            total,
        }
    }
}

/// Width of the longest row, counting only non-empty cells.
pub fn min_columns(a: &Alignment) -> usize {
    (0..a.rows()).map(|r| a.filled_in_row(r)).max().unwrap_or(0)
}

pub fn score_columns(a: &Alignment) -> f64 {
    a.cols() as f64 / min_columns(a) as f64
}

pub fn score_filled(a: &Alignment) -> f64 {
    let filled = (0..a.cols()).filter(|&c| !a.is_column_empty(c)).count();
    filled as f64 / min_columns(a) as f64
}

/// Fraction of rows with text in `col`.
pub fn column_relevance(a: &Alignment, col: usize) -> f64 {
    let filled = a.column(col).filter(|c| !c.is_empty()).count();
    filled as f64 / a.rows() as f64
}

/// Trace of the population covariance of `vectors` (mean squared distance
/// from the centroid), computed from pairwise distances so that identical
/// vectors give exactly zero. Zero for fewer than two vectors.
pub fn covariance_trace(vectors: &[&[f64]]) -> f64 {
    let n = vectors.len();
    if n < 2 {
        return 0.0;
    }
    let mut pairs = 0.0;
    for (i, a) in vectors.iter().enumerate() {
        for b in &vectors[i + 1..] {
            pairs += a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        }
    }
    pairs / (n * n) as f64
}

/// Embedding variance of a column's embeddable cells, using unnormalized
/// phrase averages.
pub fn column_variance<P: EmbeddingProvider + ?Sized>(a: &Alignment, col: usize, provider: &P) -> f64 {
    let vectors: Vec<Vec<f64>> = a
        .column(col)
        .filter(|c| !c.is_empty())
        .filter_map(|c| phrase_vector(c.tokens(), provider, false))
        .collect();
    let refs: Vec<&[f64]> = vectors.iter().map(Vec::as_slice).collect();
    covariance_trace(&refs)
}

pub fn score_embed<P: EmbeddingProvider + ?Sized>(a: &Alignment, provider: &P) -> f64 {
    (0..a.cols()).map(|c| column_relevance(a, c) * column_variance(a, c, provider)).sum()
}

pub fn total_score<P: EmbeddingProvider + ?Sized>(a: &Alignment, provider: &P, weights: &Weights) -> ScoreBreakdown {
    ScoreBreakdown::combine(weights, score_columns(a), score_filled(a), score_embed(a, provider))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::VocabProvider;
    use crate::model::grid_from_notation;
    use alloc::vec;

    fn g(spec: &str) -> Alignment {
        grid_from_notation(spec).unwrap()
    }

    fn oov() -> VocabProvider {
        VocabProvider::new(2)
    }

    #[test]
    fn min_columns_examples() {
        assert_eq!(min_columns(&g("a|b|c")), 3);
        assert_eq!(min_columns(&g("a|_ / _|b")), 1);
    }

    #[test]
    fn score_examples() {
        assert_eq!(score_columns(&g("a|b|c")), 1.0);
        assert_eq!(score_filled(&g("a|_|b / c|_|d")), 1.0);
        assert_eq!(score_columns(&g("a|_|b / c|_|d")), 1.5);
    }

    #[test]
    fn variance_examples() {
        let p = VocabProvider::from_entries(2, [("x", vec![1.0, 0.0]), ("y", vec![0.0, 1.0]), ("flu", vec![0.3, 0.4])]).unwrap();
        assert_eq!(column_variance(&g("flu / flu / flu"), 0, &p), 0.0);
        assert_eq!(column_variance(&g("x|_ / _|y"), 0, &p), 0.0);
        assert_eq!(column_variance(&g("x / y"), 0, &p), 0.5);
        assert_eq!(score_embed(&g("x / y"), &p), 0.5);
        // An unembeddable cell counts toward relevance only.
        assert_eq!(column_relevance(&g("x|_ / zz|_ / _|y"), 0), 2.0 / 3.0);
        assert_eq!(column_variance(&g("x|_ / zz|_ / _|y"), 0, &p), 0.0);
    }

    #[test]
    fn total_examples() {
        let w = Weights::default();
        let one = total_score(&g("a"), &oov(), &w);
        assert_eq!((one.s_col, one.s_fcol, one.s_embed), (1.0, 1.0, 0.0));
        assert_eq!(one.total, 4.6);
        let doubled = Weights { w_bias: 10.0, ..w };
        assert_eq!(total_score(&g("a"), &oov(), &doubled).total, one.total + 5.0);
    }

    #[test]
    fn total_decreases_in_each_component() {
        let w = Weights::default();
        let base = ScoreBreakdown::combine(&w, 1.5, 1.2, 0.3).total;
        assert!(ScoreBreakdown::combine(&w, 1.6, 1.2, 0.3).total < base);
        assert!(ScoreBreakdown::combine(&w, 1.5, 1.3, 0.3).total < base);
        assert!(ScoreBreakdown::combine(&w, 1.5, 1.2, 0.4).total < base);
    }
}
