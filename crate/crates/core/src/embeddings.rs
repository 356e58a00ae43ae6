//! Word and phrase vectors, and string edit distance.

use alloc::borrow::Cow;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::model::Token;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmbeddingError {
    #[error("vector for {token:?} has {found} components, expected {expected}")]
    DimensionMismatch {
        token: String,
        found: usize,
        expected: usize,
    },
    #[error("dimension must be at least {min}, got {found}")]
    BadDimension { found: usize, min: usize },
}

/// Source of word vectors.
///
/// Implementations must be deterministic: a token always maps to the same
/// vector or always misses.
pub trait EmbeddingProvider {
    fn dimension(&self) -> usize;

    /// Exact-match lookup.
    fn vector(&self, token: &str) -> Option<Cow<'_, [f64]>>;

    /// Tries the token verbatim, then lowercased.
    fn lookup(&self, token: &str) -> Option<Cow<'_, [f64]>> {
        if let Some(v) = self.vector(token) {
            return Some(v);
        }
        let lower = token.to_lowercase();
        if lower != token {
            self.vector(&lower)
        } else {
            None
        }
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for &P {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }

    fn vector(&self, token: &str) -> Option<Cow<'_, [f64]>> {
        (**self).vector(token)
    }

    fn lookup(&self, token: &str) -> Option<Cow<'_, [f64]>> {
        (**self).lookup(token)
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for alloc::boxed::Box<P> {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }

    fn vector(&self, token: &str) -> Option<Cow<'_, [f64]>> {
        (**self).vector(token)
    }

    fn lookup(&self, token: &str) -> Option<Cow<'_, [f64]>> {
        (**self).lookup(token)
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for alloc::sync::Arc<P> {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }

    fn vector(&self, token: &str) -> Option<Cow<'_, [f64]>> {
        (**self).vector(token)
    }

    fn lookup(&self, token: &str) -> Option<Cow<'_, [f64]>> {
        (**self).lookup(token)
    }
}

/// A fixed vocabulary of vectors, e.g. read from a word-vector file.
#[derive(Debug, Clone, PartialEq)]
pub struct VocabProvider {
    dimension: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl VocabProvider {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            vectors: BTreeMap::new(),
        }
    }

    /// Adds a vector. Returns `false` (and keeps the old vector) when the
    /// token is already present.
    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<bool, EmbeddingError> {
        let token = token.into();
        if vector.len() != self.dimension {
            return Err(EmbeddingError::DimensionMismatch {
                token,
                found: vector.len(),
                expected: self.dimension,
            });
        }
        if self.vectors.contains_key(&token) {
            return Ok(false);
        }
        self.vectors.insert(token, vector);
        Ok(true)
    }

    pub fn from_entries<I, S>(dimension: usize, entries: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut p = Self::new(dimension);
        for (token, v) in entries {
            p.insert(token, v)?;
        }
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

impl EmbeddingProvider for VocabProvider {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn vector(&self, token: &str) -> Option<Cow<'_, [f64]>> {
        self.vectors.get(token).map(|v| Cow::Borrowed(v.as_slice()))
    }
}

/// Maps every token to a pseudo-random unit vector derived only from the
/// seed and the token bytes. Useful when no vector file is at hand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashedProvider {
    seed: u64,
    dimension: usize,
}

impl HashedProvider {
    pub fn new(seed: u64, dimension: usize) -> Result<Self, EmbeddingError> {
        if dimension < 2 {
            return Err(EmbeddingError::BadDimension {
                found: dimension,
                min: 2,
            });
        }
        Ok(Self { seed, dimension })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl EmbeddingProvider for HashedProvider {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn vector(&self, token: &str) -> Option<Cow<'_, [f64]>> {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(token.as_bytes());
        let mut rng = ChaCha8Rng::from_seed(hasher.finalize().into());
        loop {
            let mut v: Vec<f64> = (0..self.dimension).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = l2_norm(&v);
            if norm > 1e-6 {
                v.iter_mut().for_each(|x| *x /= norm);
                return Some(Cow::Owned(v));
            }
        }
    }
}

pub fn l2_norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

pub fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Average of the vectors of in-vocabulary tokens; out-of-vocabulary tokens
/// are skipped. With `normalize`, the average is scaled to unit length.
///
/// `None` when no token has a vector, or when a normalized result is asked
/// for and the average is the zero vector.
pub fn phrase_vector<P: EmbeddingProvider + ?Sized>(tokens: &[Token], provider: &P, normalize: bool) -> Option<Vec<f64>> {
    let mut sum = vec![0.0; provider.dimension()];
    let mut found = 0usize;
    for token in tokens {
        if let Some(v) = provider.lookup(token.as_str()) {
            sum.iter_mut().zip(v.iter()).for_each(|(s, x)| *s += x);
            found += 1;
        }
    }
    if found == 0 {
        return None;
    }
    let n = found as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    if normalize {
        let norm = l2_norm(&sum);
        if norm == 0.0 {
            return None;
        }
        sum.iter_mut().for_each(|s| *s /= norm);
    }
    Some(sum)
}

/// Unit-cost insert/delete/substitute edit distance over chars.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tokenize;
    use proptest::prelude::*;

    fn animals() -> VocabProvider {
        VocabProvider::from_entries(3, [("cat", vec![1.0, 0.0, 0.0]), ("dog", vec![0.0, 1.0, 0.0]), ("flu", vec![0.0, 3.0, 4.0])]).unwrap()
    }

    #[test]
    fn vocab_keeps_first_duplicate_and_checks_dimension() {
        let mut p = VocabProvider::new(2);
        assert_eq!(p.insert("a", vec![1.0, 0.0]), Ok(true));
        assert_eq!(p.insert("a", vec![0.0, 1.0]), Ok(false));
        assert_eq!(p.vector("a").unwrap().as_ref(), &[1.0, 0.0]);
        assert!(matches!(p.insert("b", vec![1.0]), Err(EmbeddingError::DimensionMismatch { found: 1, .. })));
    }

    #[test]
    fn lookup_falls_back_to_lowercase() {
        let p = animals();
        assert!(p.lookup("Cat").is_some());
        assert!(p.vector("Cat").is_none());
        assert!(p.lookup("Zebra").is_none());
    }

    #[test]
    fn hashed_provider_is_deterministic_and_unit_norm() {
        let p = HashedProvider::new(1, 16).unwrap();
        let a = p.vector("flu").unwrap().into_owned();
        let b = p.vector("flu").unwrap().into_owned();
        assert_eq!(a, b);
        assert!((l2_norm(&a) - 1.0).abs() < 1e-9);
        let other = HashedProvider::new(2, 16).unwrap().vector("flu").unwrap().into_owned();
        assert_ne!(a, other);
        assert_ne!(a, p.vector("flux").unwrap().into_owned());
        assert!(HashedProvider::new(1, 1).is_err());
    }

    #[test]
    fn phrase_vector_examples() {
        let p = animals();
        let flu = phrase_vector(&tokenize("flu"), &p, true).unwrap();
        assert_eq!(flu, vec![0.0, 0.6, 0.8]);
        assert_eq!(phrase_vector(&tokenize("zzqx"), &p, true), None);
        // (1,0,0) and (0,1,0) average to (1/2, 1/2, 0), norm 1/sqrt(2).
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let v = phrase_vector(&tokenize("cat dog"), &p, true).unwrap();
        assert!((v[0] - h).abs() < 1e-15 && (v[1] - h).abs() < 1e-15 && v[2] == 0.0);
        let raw = phrase_vector(&tokenize("cat zzqx dog"), &p, false).unwrap();
        assert_eq!(raw, vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn levenshtein_examples() {
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("abc", "abc"), 0);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("abcd", "abcf"), 1);
        assert_eq!(levenshtein("naïve", "naive"), 1);
    }

    proptest! {
        #[test]
        fn levenshtein_is_a_metric(a in "[abc]{0,8}", b in "[abc]{0,8}", c in "[abc]{0,8}") {
            let ab = levenshtein(&a, &b);
            prop_assert_eq!(ab, levenshtein(&b, &a));
            prop_assert_eq!(ab == 0, a == b);
            prop_assert!(levenshtein(&a, &c) <= ab + levenshtein(&b, &c));
            prop_assert_eq!(ab, strsim::levenshtein(&a, &b));
        }

        #[test]
        fn normalized_phrase_vectors_are_unit_and_order_free(words in proptest::collection::vec("[a-z]{1,6}", 1..6), seed in 0u64..50) {
            let p = HashedProvider::new(seed, 8).unwrap();
            let tokens: Vec<Token> = words.iter().map(|w| Token::new(w.as_str()).unwrap()).collect();
            let v = phrase_vector(&tokens, &p, true).unwrap();
            prop_assert!((l2_norm(&v) - 1.0).abs() < 1e-9);
            let mut reversed = tokens.clone();
            reversed.reverse();
            let w = phrase_vector(&reversed, &p, true).unwrap();
            for (x, y) in v.iter().zip(&w) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
