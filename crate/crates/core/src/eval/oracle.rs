use super::EvalError;
use crate::knowledge::{extract_characters, item_in_event, Bindings, KnowledgeSource, Query, QueryKind, TemplateSet};
use crate::text::{first_line, tokens};

/// Sampling temperature for model-backed oracles.
pub const ORACLE_TEMPERATURE: f64 = 0.7;

/// Answers "what enabled sentence `index` of this story?".
pub trait QAOracle: Send + Sync {
    fn ask(&self, story: &[String], index: usize) -> Result<String, EvalError>;
}

impl<Q: QAOracle + ?Sized> QAOracle for &Q {
    fn ask(&self, story: &[String], index: usize) -> Result<String, EvalError> {
        (**self).ask(story, index)
    }
}

impl<Q: QAOracle + ?Sized> QAOracle for Box<Q> {
    fn ask(&self, story: &[String], index: usize) -> Result<String, EvalError> {
        (**self).ask(story, index)
    }
}

/// Wraps a closure as an oracle.
pub struct FnOracle<F>(pub F);

impl<F> QAOracle for FnOracle<F>
where
    F: Fn(&[String], usize) -> Result<String, EvalError> + Send + Sync,
{
    fn ask(&self, story: &[String], index: usize) -> Result<String, EvalError> {
        (self.0)(story, index)
    }
}

/// Rule-based oracle: the earliest earlier sentence that shares a character
/// and an object noun with the queried one, else "none".
#[derive(Debug, Clone, Default)]
pub struct MockOracle {
    pub lexicon: Vec<String>,
}

impl QAOracle for MockOracle {
    fn ask(&self, story: &[String], index: usize) -> Result<String, EvalError> {
        let query = story.get(index).ok_or(EvalError::Position { position: index, len: story.len() })?;
        let lex = Some(self.lexicon.as_slice());
        let who: Vec<String> = extract_characters(query, lex).iter().map(|c| c.to_lowercase()).collect();
        let nouns: Vec<String> = match item_in_event(query) {
            Some(item) => tokens(&item),
            None => return Ok("none".to_string()),
        };
        for earlier in &story[..index] {
            let shares_character =
                extract_characters(earlier, lex).iter().any(|c| who.contains(&c.to_lowercase()));
            let earlier_tokens = tokens(earlier);
            if shares_character && nouns.iter().any(|n| earlier_tokens.contains(n)) {
                return Ok(earlier.clone());
            }
        }
        Ok("none".to_string())
    }
}

/// Oracle backed by a knowledge source and the enablement prompt.
pub struct SourceOracle<S> {
    pub source: S,
    pub templates: TemplateSet,
}

impl<S: KnowledgeSource> QAOracle for SourceOracle<S> {
    fn ask(&self, story: &[String], index: usize) -> Result<String, EvalError> {
        let action = story.get(index).ok_or(EvalError::Position { position: index, len: story.len() })?;
        let bindings = Bindings::from([
            ("Story".to_string(), story[..=index].join("\n")),
            ("ACTION".to_string(), action.trim_end_matches(['.', '!', '?']).to_string()),
        ]);
        let query = Query::render(&self.templates, QueryKind::Enablement, bindings)
            .map_err(|e| EvalError::Oracle(e.to_string()))?;
        let out = self
            .source
            .complete(&query, 1, ORACLE_TEMPERATURE)
            .map_err(|e| EvalError::Oracle(e.to_string()))?;
        Ok(out.first().map(|c| first_line(c)).unwrap_or_default())
    }
}
