use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{Embedder, EmbeddingVector, SimilarityError};
use crate::transport::{Endpoint, JsonClient};

#[derive(Debug, Serialize)]
pub(crate) struct EmbeddingRequest<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<&'a str>,
    pub input: Vec<&'a str>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub(crate) enum EmbeddingResponse {
    /// `{"data": [{"embedding": [...]}, ...]}`
    Data { data: Vec<EmbeddingDatum> },
    /// `{"embeddings": [[...], ...]}`
    Bare { embeddings: Vec<Vec<f64>> },
}

#[derive(Debug, Deserialize)]
pub(crate) struct EmbeddingDatum {
    pub embedding: Vec<f64>,
}

impl EmbeddingResponse {
    fn into_vectors(self) -> Vec<Vec<f64>> {
        match self {
            EmbeddingResponse::Data { data } => data.into_iter().map(|d| d.embedding).collect(),
            EmbeddingResponse::Bare { embeddings } => embeddings,
        }
    }
}

/// Remote embedding endpoint. The request carries the sentence list, the
/// response one vector per sentence. Results are cached per string.
#[derive(Debug)]
pub struct HttpEmbedder {
    client: JsonClient,
    cache: Mutex<HashMap<String, EmbeddingVector>>,
}

impl HttpEmbedder {
    pub fn new(endpoint: Endpoint) -> Result<Self, SimilarityError> {
        let client = JsonClient::new(endpoint).map_err(|e| SimilarityError::Transport(e.to_string()))?;
        Ok(HttpEmbedder { client, cache: Mutex::new(HashMap::new()) })
    }
}

impl Embedder for HttpEmbedder {
    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, SimilarityError> {
        let missing: Vec<&str> = {
            let cache = self.cache.lock().expect("embedding cache lock");
            let mut m: Vec<&str> = Vec::new();
            for t in texts {
                if !cache.contains_key(*t) && !m.contains(t) {
                    m.push(t);
                }
            }
            m
        };
        if !missing.is_empty() {
            let req = EmbeddingRequest { model: self.client.endpoint().model.as_deref(), input: missing.clone() };
            let resp: EmbeddingResponse = self
                .client
                .post("", &req)
                .map_err(|e| SimilarityError::Transport(e.to_string()))?;
            let vectors = resp.into_vectors();
            if vectors.len() != missing.len() {
                return Err(SimilarityError::CountMismatch { expected: missing.len(), got: vectors.len() });
            }
            let mut cache = self.cache.lock().expect("embedding cache lock");
            for (t, v) in missing.iter().zip(vectors) {
                cache.insert((*t).to_string(), EmbeddingVector::new(v)?);
            }
        }
        let cache = self.cache.lock().expect("embedding cache lock");
        Ok(texts.iter().map(|t| cache[*t].clone()).collect())
    }
}
