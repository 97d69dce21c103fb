//! Coherence measurement by enablement questions.
//!
//! Every sentence after the first is asked "what enabled this?". A question is
//! answerable when the oracle's answer can be found among the earlier
//! sentences and is not just a restatement of the queried sentence. The
//! story score is the answerable fraction.

mod oracle;
mod validation;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use oracle::{FnOracle, MockOracle, QAOracle, SourceOracle, ORACLE_TEMPERATURE};
pub use validation::{corrupt_story, validate_measure, CorruptedStory, ValidationSummary};

use crate::text::{normalize_key, normalize_ws, tokens};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("story `{0}` has no sentences")]
    EmptyStory(String),
    #[error("story `{0}` needs at least two sentences")]
    TooShort(String),
    #[error("unparsable story file:\n{}", .0.iter().map(|(l, m)| format!("  line {l}: {m}")).collect::<Vec<_>>().join("\n"))]
    Parse(Vec<(usize, String)>),
    #[error("position {position} is not a queryable sentence of a {len}-sentence story")]
    Position { position: usize, len: usize },
    #[error("donor story must differ from the corrupted story")]
    SameDonor,
    #[error("both story sets must be non-empty")]
    EmptySet,
    #[error("oracle failed: {0}")]
    Oracle(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Story {
    pub id: String,
    pub sentences: Vec<String>,
}

impl Story {
    pub fn new(id: impl Into<String>, sentences: Vec<String>) -> Result<Self, EvalError> {
        let id = id.into();
        let sentences: Vec<String> =
            sentences.iter().map(|s| normalize_ws(s)).filter(|s| !s.is_empty()).collect();
        if sentences.is_empty() {
            return Err(EvalError::EmptyStory(id));
        }
        Ok(Story { id, sentences })
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

/// Reads stories written one sentence per line, separated by blank lines. A
/// block may start with a `# id` line; otherwise stories are numbered.
pub fn parse_stories(text: &str) -> Result<Vec<Story>, EvalError> {
    let mut stories = Vec::new();
    let mut problems = Vec::new();
    let mut id: Option<String> = None;
    let mut lines: Vec<String> = Vec::new();
    let mut block_start = 0;
    let flush = |id: &mut Option<String>,
                 lines: &mut Vec<String>,
                 stories: &mut Vec<Story>,
                 problems: &mut Vec<(usize, String)>,
                 start: usize| {
        if lines.is_empty() {
            if id.take().is_some() {
                problems.push((start, "story header without sentences".to_string()));
            }
            return;
        }
        let name = id.take().unwrap_or_else(|| format!("story-{}", stories.len() + 1));
        match Story::new(name, std::mem::take(lines)) {
            Ok(s) if s.len() < 2 => problems.push((start, EvalError::TooShort(s.id).to_string())),
            Ok(s) => stories.push(s),
            Err(e) => problems.push((start, e.to_string())),
        }
    };
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = n + 1;
        if line.is_empty() {
            flush(&mut id, &mut lines, &mut stories, &mut problems, block_start);
            continue;
        }
        if lines.is_empty() && id.is_none() {
            block_start = lineno;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if !lines.is_empty() || id.is_some() {
                problems.push((lineno, "story header must start a block".to_string()));
                continue;
            }
            let name = rest.trim();
            if name.is_empty() {
                problems.push((lineno, "empty story id".to_string()));
                continue;
            }
            id = Some(name.to_string());
            continue;
        }
        lines.push(line.to_string());
    }
    flush(&mut id, &mut lines, &mut stories, &mut problems, block_start);
    if !problems.is_empty() {
        problems.sort_by_key(|(l, _)| *l);
        return Err(EvalError::Parse(problems));
    }
    Ok(stories)
}

/// Share of `a`'s distinct tokens that also occur in `b`. Zero when `a` has
/// no tokens.
pub fn unigram_overlap(a: &str, b: &str) -> f64 {
    let ta: std::collections::BTreeSet<String> = tokens(a).into_iter().collect();
    if ta.is_empty() {
        return 0.0;
    }
    let tb: std::collections::BTreeSet<String> = tokens(b).into_iter().collect();
    ta.intersection(&tb).count() as f64 / ta.len() as f64
}

/// True for the oracle's "no answer" replies.
pub fn is_none_answer(answer: &str) -> bool {
    let k = normalize_key(answer);
    k.is_empty() || k == "none" || k == "none of the above" || k == "nothing"
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Minimum share of the answer's tokens an earlier sentence must contain.
    pub containment: f64,
    /// Answers overlapping the queried sentence more than this are rejected.
    pub max_overlap: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { containment: 0.6, max_overlap: 0.7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnablementJudgment {
    pub query_index: usize,
    /// `None` when the oracle declined to answer.
    pub answer_text: Option<String>,
    /// Earlier sentence the answer was found in.
    pub matched_index: Option<usize>,
    pub answerable: bool,
    pub overlap: f64,
    /// Set when the oracle failed; such questions do not count.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub story_id: String,
    pub judgments: Vec<EnablementJudgment>,
    pub score: f64,
}

impl CoherenceReport {
    pub fn answerable(&self) -> usize {
        self.judgments.iter().filter(|j| j.answerable).count()
    }

    /// Questions that got an answer or a refusal from the oracle.
    pub fn counted(&self) -> usize {
        self.judgments.iter().filter(|j| j.error.is_none()).count()
    }

    pub fn errored(&self) -> usize {
        self.judgments.len() - self.counted()
    }
}

/// Answerable fraction of the counted judgments; zero if none counted.
pub fn score(judgments: &[EnablementJudgment]) -> f64 {
    let counted = judgments.iter().filter(|j| j.error.is_none()).count();
    if counted == 0 {
        return 0.0;
    }
    judgments.iter().filter(|j| j.answerable).count() as f64 / counted as f64
}

/// Judges one oracle answer for the sentence at `index`.
pub fn judge(story: &Story, index: usize, answer: &str, config: &EvalConfig) -> EnablementJudgment {
    let answer = normalize_ws(answer);
    if is_none_answer(&answer) {
        return EnablementJudgment {
            query_index: index,
            answer_text: None,
            matched_index: None,
            answerable: false,
            overlap: 0.0,
            error: None,
        };
    }
    let matched_index = (0..index)
        .map(|j| (j, unigram_overlap(&answer, &story.sentences[j])))
        .filter(|(_, c)| *c >= config.containment)
        .fold(None::<(usize, f64)>, |best, (j, c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((j, c)),
        })
        .map(|(j, _)| j);
    let overlap = unigram_overlap(&story.sentences[index], &answer);
    EnablementJudgment {
        query_index: index,
        answerable: matched_index.is_some() && overlap <= config.max_overlap,
        answer_text: Some(answer),
        matched_index,
        overlap,
        error: None,
    }
}

/// Asks one enablement question per sentence after the first.
pub fn enablement_score(story: &Story, qa: &dyn QAOracle, config: &EvalConfig) -> Result<CoherenceReport, EvalError> {
    if story.len() < 2 {
        return Err(EvalError::TooShort(story.id.clone()));
    }
    let judgments: Vec<EnablementJudgment> = (1..story.len())
        .map(|i| match qa.ask(&story.sentences, i) {
            Ok(answer) => judge(story, i, &answer, config),
            Err(e) => EnablementJudgment {
                query_index: i,
                answer_text: None,
                matched_index: None,
                answerable: false,
                overlap: 0.0,
                error: Some(e.to_string()),
            },
        })
        .collect();
    Ok(CoherenceReport { story_id: story.id.clone(), score: score(&judgments), judgments })
}
