//! Embedding-based comparison of sentences: near-duplicate detection,
//! precondition reuse and initial-condition matching.

mod embedders;
mod http;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{EventId, Precondition, PreconditionClass};

pub use embedders::{IdentityEmbedder, LocalEmbedder, TableEmbedder};
pub use http::HttpEmbedder;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimilarityError {
    #[error("embedding dimensions differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("zero vector has no direction")]
    ZeroNorm,
    #[error("empty embedding")]
    Empty,
    #[error("embedding endpoint failed: {0}")]
    Transport(String),
    #[error("embedding endpoint returned {got} vectors for {expected} inputs")]
    CountMismatch { expected: usize, got: usize },
    #[error("{0}")]
    Capacity(String),
}

/// A non-zero real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
    norm: f64,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, SimilarityError> {
        if values.is_empty() {
            return Err(SimilarityError::Empty);
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(SimilarityError::ZeroNorm);
        }
        Ok(EmbeddingVector { values, norm })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Cosine similarity, clamped to [-1, 1] against rounding.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, SimilarityError> {
    if a.dim() != b.dim() {
        return Err(SimilarityError::DimensionMismatch(a.dim(), b.dim()));
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    Ok((dot / (a.norm * b.norm)).clamp(-1.0, 1.0))
}

/// Maps sentences to vectors. Implementations must be deterministic for a
/// given input and safe to call from several threads.
pub trait Embedder: Send + Sync {
    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, SimilarityError>;

    fn similarity(&self, a: &str, b: &str) -> Result<f64, SimilarityError> {
        let v = self.embed(&[a, b])?;
        cosine(&v[0], &v[1])
    }
}

impl<E: Embedder + ?Sized> Embedder for &E {
    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, SimilarityError> {
        (**self).embed(texts)
    }
}

impl<E: Embedder + ?Sized> Embedder for Box<E> {
    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, SimilarityError> {
        (**self).embed(texts)
    }
}

/// How preconditions are compared against the initial conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialMatch {
    #[default]
    Cosine,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimilarityConfig {
    /// Item-need and location comparisons.
    pub threshold_short: f64,
    /// Every other class, and events.
    pub threshold_default: f64,
    pub initial_match: InitialMatch,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig { threshold_short: 0.75, threshold_default: 0.8, initial_match: InitialMatch::Cosine }
    }
}

impl SimilarityConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, t) in [("threshold_short", self.threshold_short), ("threshold_default", self.threshold_default)] {
            if !(t > 0.0 && t <= 1.0) {
                return Err(format!("{name} must be in (0, 1], got {t}"));
            }
        }
        Ok(())
    }

    /// Threshold for a precondition class; `None` means an event comparison.
    pub fn threshold(&self, class: Option<PreconditionClass>) -> f64 {
        match class {
            Some(c) if c.is_short_form() => self.threshold_short,
            _ => self.threshold_default,
        }
    }
}

/// Whether two sentences are the same thing said differently. Identical
/// strings always are.
pub fn is_duplicate(
    a: &str,
    b: &str,
    class: Option<PreconditionClass>,
    embedder: &dyn Embedder,
    config: &SimilarityConfig,
) -> Result<bool, SimilarityError> {
    if crate::text::normalize_key(a) == crate::text::normalize_key(b) {
        return Ok(true);
    }
    Ok(embedder.similarity(a, b)? >= config.threshold(class))
}

/// Case-insensitive character name equality.
pub fn same_character(a: &str, b: &str) -> bool {
    a.trim().to_lowercase() == b.trim().to_lowercase()
}

/// The satisfying event of the first already-satisfied precondition that is
/// about the same character and similar enough under `precond`'s class.
pub fn match_satisfied(
    precond: &Precondition,
    satisfied: &[(&Precondition, EventId)],
    embedder: &dyn Embedder,
    config: &SimilarityConfig,
) -> Result<Option<EventId>, SimilarityError> {
    for (other, event) in satisfied {
        if other.id == precond.id || !same_character(&other.character, &precond.character) {
            continue;
        }
        if is_duplicate(&precond.text, &other.text, Some(precond.class), embedder, config)? {
            return Ok(Some(*event));
        }
    }
    Ok(None)
}

/// Whether `precond` is already given by one of the initial conditions.
pub fn match_initial(
    precond: &Precondition,
    initial: &[String],
    embedder: &dyn Embedder,
    config: &SimilarityConfig,
) -> Result<bool, SimilarityError> {
    for s in initial {
        let hit = match config.initial_match {
            InitialMatch::Exact => crate::text::normalize_key(s) == crate::text::normalize_key(&precond.text),
            InitialMatch::Cosine => is_duplicate(&precond.text, s, Some(precond.class), embedder, config)?,
        };
        if hit {
            return Ok(true);
        }
    }
    Ok(false)
}
