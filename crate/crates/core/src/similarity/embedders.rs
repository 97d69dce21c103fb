use std::collections::HashMap;
use std::sync::Mutex;

use super::{Embedder, EmbeddingVector, SimilarityError};
use crate::text::{normalize_key, tokens};

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Offline embedder: hashed bag of lowercase tokens, L2-normalized.
#[derive(Debug, Clone)]
pub struct LocalEmbedder {
    dim: usize,
}

impl LocalEmbedder {
    pub const DEFAULT_DIM: usize = 4096;

    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        LocalEmbedder { dim }
    }
}

impl Default for LocalEmbedder {
    fn default() -> Self {
        LocalEmbedder::new(Self::DEFAULT_DIM)
    }
}

impl Embedder for LocalEmbedder {
    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, SimilarityError> {
        texts
            .iter()
            .map(|t| {
                let mut v = vec![0.0; self.dim];
                for tok in tokens(t) {
                    v[(fnv1a(tok.as_bytes()) % self.dim as u64) as usize] += 1.0;
                }
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    v.iter_mut().for_each(|x| *x /= norm);
                }
                EmbeddingVector::new(v)
            })
            .collect()
    }
}

/// Test embedder: every distinct normalized string gets its own axis, so any
/// two different strings are orthogonal and duplicate detection reduces to
/// exact matching.
#[derive(Debug)]
pub struct IdentityEmbedder {
    dim: usize,
    axes: Mutex<HashMap<String, usize>>,
}

impl IdentityEmbedder {
    pub fn new(dim: usize) -> Self {
        IdentityEmbedder { dim, axes: Mutex::new(HashMap::new()) }
    }
}

impl Default for IdentityEmbedder {
    fn default() -> Self {
        IdentityEmbedder::new(1024)
    }
}

impl Embedder for IdentityEmbedder {
    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, SimilarityError> {
        let mut axes = self.axes.lock().expect("identity embedder lock");
        texts
            .iter()
            .map(|t| {
                let next = axes.len();
                let axis = *axes.entry(normalize_key(t)).or_insert(next);
                if axis >= self.dim {
                    return Err(SimilarityError::Capacity(format!(
                        "identity embedder holds at most {} distinct strings",
                        self.dim
                    )));
                }
                let mut v = vec![0.0; self.dim];
                v[axis] = 1.0;
                EmbeddingVector::new(v)
            })
            .collect()
    }
}

/// Fixture embedder with explicit vectors per string. Unknown strings fall
/// back to a wrapped embedder, padded or truncated to the table dimension.
pub struct TableEmbedder {
    dim: usize,
    table: HashMap<String, Vec<f64>>,
    fallback: Box<dyn Embedder>,
}

impl TableEmbedder {
    pub fn new(dim: usize) -> Self {
        TableEmbedder { dim, table: HashMap::new(), fallback: Box::new(IdentityEmbedder::new(dim)) }
    }

    pub fn with(mut self, text: &str, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.dim, "table vector has the wrong dimension");
        self.table.insert(normalize_key(text), values);
        self
    }

    pub fn insert(&mut self, text: &str, values: Vec<f64>) {
        assert_eq!(values.len(), self.dim, "table vector has the wrong dimension");
        self.table.insert(normalize_key(text), values);
    }
}

impl Embedder for TableEmbedder {
    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, SimilarityError> {
        texts
            .iter()
            .map(|t| match self.table.get(&normalize_key(t)) {
                Some(v) => EmbeddingVector::new(v.clone()),
                None => {
                    let mut v = self.fallback.embed(&[t])?.remove(0).values().to_vec();
                    v.resize(self.dim, 0.0);
                    EmbeddingVector::new(v)
                }
            })
            .collect()
    }
}
