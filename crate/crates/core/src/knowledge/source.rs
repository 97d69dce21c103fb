use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::templates::{Bindings, QueryKind, TemplateError, TemplateSet};
use super::KnowledgeError;
use crate::text::normalize_key;

/// A rendered prompt plus the structured inputs it was rendered from.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub kind: QueryKind,
    pub bindings: Bindings,
    pub prompt: String,
    pub domain_prompt: String,
}

impl Query {
    pub fn render(templates: &TemplateSet, kind: QueryKind, bindings: Bindings) -> Result<Self, TemplateError> {
        let t = templates.get(kind)?;
        Ok(Query { kind, prompt: t.render(&bindings)?, domain_prompt: t.render_domain(&bindings)?, bindings })
    }
}

/// Which prompt a continuation is scored against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    /// The full prompt: log P(y | x, domain).
    Input,
    /// The answer prefix only: log P(y | domain).
    Domain,
}

/// A generative model the planner can consult.
pub trait KnowledgeSource: Send + Sync {
    /// Samples `n_samples` raw completions of `query.prompt`.
    fn complete(&self, query: &Query, n_samples: usize, temperature: f64) -> Result<Vec<String>, KnowledgeError>;

    /// Total log-probability of `continuation` after the chosen prompt, or
    /// `None` if this source cannot score it.
    fn score(&self, query: &Query, continuation: &str, on: Conditioning) -> Result<Option<f64>, KnowledgeError>;
}

impl<K: KnowledgeSource + ?Sized> KnowledgeSource for &K {
    fn complete(&self, query: &Query, n_samples: usize, temperature: f64) -> Result<Vec<String>, KnowledgeError> {
        (**self).complete(query, n_samples, temperature)
    }

    fn score(&self, query: &Query, continuation: &str, on: Conditioning) -> Result<Option<f64>, KnowledgeError> {
        (**self).score(query, continuation, on)
    }
}

impl<K: KnowledgeSource + ?Sized> KnowledgeSource for Box<K> {
    fn complete(&self, query: &Query, n_samples: usize, temperature: f64) -> Result<Vec<String>, KnowledgeError> {
        (**self).complete(query, n_samples, temperature)
    }

    fn score(&self, query: &Query, continuation: &str, on: Conditioning) -> Result<Option<f64>, KnowledgeError> {
        (**self).score(query, continuation, on)
    }
}

/// Bindings that vary with plan state and are ignored when matching fixtures.
const UNKEYED_BINDINGS: &[&str] = &["Context", "Optional Hint"];

/// One scripted response: a list of samples, or a single sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptedResponse {
    Samples(Vec<String>),
    Single(String),
}

impl ScriptedResponse {
    fn samples(&self) -> Vec<String> {
        match self {
            ScriptedResponse::Samples(v) => v.clone(),
            ScriptedResponse::Single(s) => vec![s.clone()],
        }
    }
}

/// Log-probabilities for one continuation under both conditionings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScriptedScore {
    pub cond: f64,
    pub domain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedEntry {
    pub kind: QueryKind,
    /// Matched against the query's bindings (case and whitespace
    /// insensitive). Keys absent here are not constrained.
    #[serde(default)]
    pub bindings: Bindings,
    /// Consumed one per call; once exhausted the source returns no samples.
    pub responses: Vec<ScriptedResponse>,
    #[serde(default)]
    pub scores: HashMap<String, ScriptedScore>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScriptedFixture {
    #[serde(default)]
    pub description: Option<String>,
    pub entries: Vec<ScriptedEntry>,
}

impl ScriptedFixture {
    pub fn from_json(json: &str) -> Result<Self, KnowledgeError> {
        serde_json::from_str(json).map_err(|e| KnowledgeError::Fixture(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, KnowledgeError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| KnowledgeError::Fixture(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Deterministic replay source driven by a [`ScriptedFixture`]. Queries with
/// no matching entry get no samples, which the planner treats as "no
/// precondition" or "no event".
#[derive(Debug)]
pub struct ScriptedSource {
    fixture: ScriptedFixture,
    cursors: Mutex<Vec<usize>>,
    log: Mutex<Vec<(QueryKind, Bindings)>>,
}

impl ScriptedSource {
    pub fn new(fixture: ScriptedFixture) -> Self {
        let n = fixture.entries.len();
        ScriptedSource { fixture, cursors: Mutex::new(vec![0; n]), log: Mutex::new(Vec::new()) }
    }

    pub fn fixture(&self) -> &ScriptedFixture {
        &self.fixture
    }

    /// Every query this source has answered, in call order.
    pub fn calls(&self) -> Vec<(QueryKind, Bindings)> {
        self.log.lock().expect("scripted log lock").clone()
    }

    fn find(&self, query: &Query) -> Option<usize> {
        self.fixture.entries.iter().position(|e| {
            e.kind == query.kind
                && e.bindings.iter().all(|(k, v)| {
                    UNKEYED_BINDINGS.contains(&k.as_str())
                        || query.bindings.get(k).is_some_and(|q| normalize_key(q) == normalize_key(v))
                })
        })
    }
}

impl KnowledgeSource for ScriptedSource {
    fn complete(&self, query: &Query, _n_samples: usize, _temperature: f64) -> Result<Vec<String>, KnowledgeError> {
        self.log.lock().expect("scripted log lock").push((query.kind, query.bindings.clone()));
        let Some(i) = self.find(query) else { return Ok(Vec::new()) };
        let mut cursors = self.cursors.lock().expect("scripted cursor lock");
        let entry = &self.fixture.entries[i];
        let out = entry.responses.get(cursors[i]).map(ScriptedResponse::samples).unwrap_or_default();
        cursors[i] += 1;
        Ok(out)
    }

    fn score(&self, query: &Query, continuation: &str, on: Conditioning) -> Result<Option<f64>, KnowledgeError> {
        let Some(i) = self.find(query) else { return Ok(None) };
        let key = normalize_key(continuation);
        Ok(self.fixture.entries[i]
            .scores
            .iter()
            .find(|(k, _)| normalize_key(k) == key)
            .map(|(_, s)| match on {
                Conditioning::Input => s.cond,
                Conditioning::Domain => s.domain,
            }))
    }
}
