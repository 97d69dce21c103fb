//! Textual heuristics deciding which preconditions are asked for and which
//! answers are thrown away.

use super::characters::extract_characters;
use super::source::{KnowledgeSource, Query};
use super::templates::{Bindings, QueryKind, TemplateSet};
use super::KnowledgeError;
use crate::text::{normalize_key, tokens};

/// Keyword whose presence in a detection completion unlocks a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    /// Unlocks the reason class.
    Because,
    /// Unlocks the how class.
    Through,
}

impl Keyword {
    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Because => "because",
            Keyword::Through => "through",
        }
    }

    pub fn detection_kind(self) -> QueryKind {
        match self {
            Keyword::Because => QueryKind::DetectReason,
            Keyword::Through => QueryKind::DetectHow,
        }
    }
}

/// At least two distinct known characters are named in the event.
pub fn gate_interaction(event_text: &str, characters: &[String]) -> bool {
    if characters.is_empty() {
        return false;
    }
    extract_characters(event_text, Some(characters)).len() >= 2
}

/// Asks the detection prompt to expand the event and reports whether the
/// completion used `keyword`.
pub fn gate_expandable(
    event_text: &str,
    keyword: Keyword,
    source: &dyn KnowledgeSource,
    templates: &TemplateSet,
    temperature: f64,
) -> Result<bool, KnowledgeError> {
    let bindings = Bindings::from([("Event".to_string(), event_text.trim_end_matches('.').to_string())]);
    let query = Query::render(templates, keyword.detection_kind(), bindings)?;
    let completions = source.complete(&query, 1, temperature)?;
    Ok(completions
        .iter()
        .any(|c| tokens(crate::text::first_line(c).as_str()).iter().any(|t| t == keyword.as_str())))
}

const INTENTION_WORDS: &[&str] = &["want", "wants", "wanted", "need", "needs", "needed"];

/// True if a reason answer is really an intention and must be dropped.
pub fn gate_intention_reason(text: &str) -> bool {
    tokens(text).iter().any(|t| INTENTION_WORDS.contains(&t.as_str()))
}

/// True if the answer is exactly "nothing".
pub fn gate_nothing(text: &str) -> bool {
    normalize_key(text) == "nothing"
}
