use serde::{Deserialize, Serialize};

use super::source::{Conditioning, KnowledgeSource, Query};
use super::KnowledgeError;
use crate::transport::{Endpoint, JsonClient};

#[derive(Debug, Serialize)]
pub(crate) struct CompletionRequest<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<&'a str>,
    pub prompt: &'a str,
    pub n: usize,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Number of top log-probabilities per token; 0 still returns the
    /// sampled token's own log-probability.
    pub logprobs: u32,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub echo: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub stop: Vec<&'a str>,
}

#[derive(Debug, Deserialize)]
pub(crate) struct CompletionResponse {
    pub choices: Vec<CompletionChoice>,
}

#[derive(Debug, Deserialize)]
pub(crate) struct CompletionChoice {
    pub text: String,
    #[serde(default)]
    pub logprobs: Option<TokenLogprobs>,
}

#[derive(Debug, Deserialize)]
pub(crate) struct TokenLogprobs {
    #[serde(default)]
    pub token_logprobs: Vec<Option<f64>>,
    #[serde(default)]
    pub text_offset: Vec<usize>,
}

/// Joins prompt and continuation the way the model would see them.
pub(crate) fn joined(prompt: &str, continuation: &str) -> (String, usize) {
    let mut s = prompt.to_string();
    if !s.is_empty() && !s.ends_with(char::is_whitespace) {
        s.push(' ');
    }
    let offset = s.chars().count();
    s.push_str(continuation.trim());
    (s, offset)
}

/// Sum of token log-probabilities at character offsets `>= offset`.
pub(crate) fn continuation_logprob(lp: &TokenLogprobs, offset: usize) -> Option<f64> {
    let mut total = 0.0;
    let mut any = false;
    for (o, p) in lp.text_offset.iter().zip(&lp.token_logprobs) {
        if *o >= offset {
            total += (*p)?;
            any = true;
        }
    }
    any.then_some(total)
}

/// Text-completion endpoint speaking the common `/completions` JSON shape,
/// including echoed token log-probabilities for scoring.
#[derive(Debug)]
pub struct HttpSource {
    client: JsonClient,
    max_tokens: u32,
}

impl HttpSource {
    pub fn new(endpoint: Endpoint, max_tokens: u32) -> Result<Self, KnowledgeError> {
        Ok(HttpSource { client: JsonClient::new(endpoint)?, max_tokens })
    }
}

impl KnowledgeSource for HttpSource {
    fn complete(&self, query: &Query, n_samples: usize, temperature: f64) -> Result<Vec<String>, KnowledgeError> {
        let req = CompletionRequest {
            model: self.client.endpoint().model.as_deref(),
            prompt: &query.prompt,
            n: n_samples.max(1),
            temperature,
            max_tokens: self.max_tokens,
            logprobs: 0,
            echo: false,
            stop: vec!["\n\n"],
        };
        let resp: CompletionResponse = self.client.post("/completions", &req)?;
        Ok(resp.choices.into_iter().map(|c| c.text).collect())
    }

    fn score(&self, query: &Query, continuation: &str, on: Conditioning) -> Result<Option<f64>, KnowledgeError> {
        let prompt = match on {
            Conditioning::Input => &query.prompt,
            Conditioning::Domain => &query.domain_prompt,
        };
        let (text, offset) = joined(prompt, continuation);
        let req = CompletionRequest {
            model: self.client.endpoint().model.as_deref(),
            prompt: &text,
            n: 1,
            temperature: 0.0,
            max_tokens: 0,
            logprobs: 0,
            echo: true,
            stop: vec![],
        };
        let resp: CompletionResponse = self.client.post("/completions", &req)?;
        Ok(resp
            .choices
            .first()
            .and_then(|c| c.logprobs.as_ref())
            .and_then(|lp| continuation_logprob(lp, offset)))
    }
}
