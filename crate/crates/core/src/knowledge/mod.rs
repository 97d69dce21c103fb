//! Everything that talks to a generative model: prompt templates, the
//! knowledge-source contract, candidate rescoring and the textual gates.

mod characters;
mod gates;
mod http;
mod rescoring;
mod source;
mod templates;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use characters::{
    action_phrase, bare_item, extract_characters, item_in_event, item_in_precondition, location_hint,
    location_in_precondition,
};
pub use gates::{gate_expandable, gate_intention_reason, gate_interaction, gate_nothing, Keyword};
pub use http::HttpSource;
pub use rescoring::{frequency_filter, most_frequent, pmi_dc_rank, pmi_dc_select, Candidate, CandidateSet};
pub use source::{
    Conditioning, KnowledgeSource, Query, ScriptedEntry, ScriptedFixture, ScriptedResponse, ScriptedScore,
    ScriptedSource,
};
pub use templates::{placeholders, Bindings, PromptTemplate, QueryKind, TemplateError, TemplateSet, BUILTIN_PROMPTS};

use crate::graph::{Precondition, PreconditionClass};
use crate::similarity::{is_duplicate, Embedder, SimilarityConfig, SimilarityError};
use crate::text::{first_line, last_sentence, normalize_key, tokens};
use crate::transport::TransportError;

#[derive(Debug, Error)]
pub enum KnowledgeError {
    #[error("knowledge source unavailable: {0}")]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("bad scripted fixture: {0}")]
    Fixture(String),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error("no usable event for precondition `{0}`")]
    GenerationExhausted(String),
}

impl KnowledgeError {
    /// Attempts made before a transport failure was reported.
    pub fn attempts(&self) -> Option<u32> {
        match self {
            KnowledgeError::Transport(e) => Some(e.attempts),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnowledgeConfig {
    pub n_samples: usize,
    pub temperature: f64,
    pub min_count: u32,
    /// Rescore location candidates too instead of taking the most frequent.
    pub location_rescore: bool,
    /// Keep only the best item-need answer.
    pub single_item_precondition: bool,
    pub detect_temperature: f64,
}

impl Default for KnowledgeConfig {
    fn default() -> Self {
        KnowledgeConfig {
            n_samples: 10,
            temperature: 0.9,
            min_count: 2,
            location_rescore: false,
            single_item_precondition: true,
            detect_temperature: 0.0,
        }
    }
}

impl KnowledgeConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_samples == 0 {
            return Err("n_samples must be at least 1".into());
        }
        if self.min_count == 0 {
            return Err("min_count must be at least 1".into());
        }
        if !(self.temperature >= 0.0 && self.detect_temperature >= 0.0) {
            return Err("temperatures must be non-negative".into());
        }
        Ok(())
    }
}

/// A precondition proposed for an event, not yet in any plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreconditionDraft {
    pub class: PreconditionClass,
    pub text: String,
    pub character: String,
    /// The raw answer the text was built from.
    pub answer: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassOutcome {
    Drafted,
    NoCandidates,
    /// No item to ask about for the item-state prompt.
    NoItem,
    Nothing,
    Intention,
    IdenticalToParent,
}

/// What happened for one class of one character; kept for the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRecord {
    pub class: PreconditionClass,
    pub character: String,
    pub candidates: Vec<Candidate>,
    pub outcome: ClassOutcome,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Inference {
    pub drafts: Vec<PreconditionDraft>,
    pub records: Vec<ClassRecord>,
}

/// An event sentence produced for a precondition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedEvent {
    pub text: String,
    pub perplexity: Option<f64>,
    pub candidates: Vec<Candidate>,
}

/// The model-facing half of the planner: a source plus the templates,
/// embedder and settings used to query it.
#[derive(Clone, Copy)]
pub struct Knowledge<'a> {
    pub source: &'a dyn KnowledgeSource,
    pub templates: &'a TemplateSet,
    pub embedder: &'a dyn Embedder,
    pub similarity: &'a SimilarityConfig,
    pub config: &'a KnowledgeConfig,
}

fn strip_end(s: &str) -> String {
    s.trim().trim_end_matches(['.', '!', '?']).to_string()
}

fn bind(pairs: &[(&str, &str)]) -> Bindings {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

impl Knowledge<'_> {
    fn sample(&self, query: &Query) -> Result<Vec<String>, KnowledgeError> {
        let raw = self.source.complete(query, self.config.n_samples, self.config.temperature)?;
        Ok(raw.iter().map(|c| first_line(c)).filter(|c| !c.is_empty()).collect())
    }

    /// Folds near-duplicate answers into their first occurrence.
    fn merge_duplicates(&self, set: CandidateSet, class: PreconditionClass) -> Result<CandidateSet, KnowledgeError> {
        let mut out = CandidateSet::default();
        for c in set.items {
            let mut merged = false;
            for kept in out.items.iter_mut() {
                if is_duplicate(&kept.text, &c.text, Some(class), self.embedder, self.similarity)? {
                    kept.count += c.count;
                    merged = true;
                    break;
                }
            }
            if !merged {
                out.items.push(c);
            }
        }
        Ok(out)
    }

    fn rescore(&self, query: &Query, set: &mut CandidateSet) -> Result<(), KnowledgeError> {
        for c in set.items.iter_mut() {
            c.cond_logprob = self.source.score(query, &c.text, Conditioning::Input)?.unwrap_or(0.0);
            c.domain_logprob = self.source.score(query, &c.text, Conditioning::Domain)?.unwrap_or(0.0);
        }
        Ok(())
    }

    fn bindings_for(
        &self,
        class: PreconditionClass,
        event_text: &str,
        context: &str,
        character: &str,
        item: Option<&str>,
    ) -> Option<Bindings> {
        let event = strip_end(event_text);
        Some(match class {
            PreconditionClass::ItemNeed => {
                bind(&[("Person", character), ("Action", &action_phrase(&event, character))])
            }
            PreconditionClass::Location => {
                let hint = location_hint(&event).map(|h| format!("Hint: {h}")).unwrap_or_default();
                bind(&[("Person", character), ("Event", &event), ("Context", context), ("Optional Hint", &hint)])
            }
            PreconditionClass::ItemState => bind(&[("Person", character), ("Event", &event), ("item", item?)]),
            PreconditionClass::How | PreconditionClass::InteractionWithOthers | PreconditionClass::Reason => {
                bind(&[("Event", &event), ("Context", context)])
            }
        })
    }

    /// Infers preconditions of `event_text` for one character, class by class
    /// in the order given. Answer gates are applied here; class gates are the
    /// caller's job.
    pub fn infer_preconditions(
        &self,
        event_text: &str,
        characters: &[String],
        context: &[String],
        character: &str,
        classes: &[PreconditionClass],
    ) -> Result<Inference, KnowledgeError> {
        let context = context.join("\n");
        let mut out = Inference::default();
        let mut item: Option<String> = None;
        for &class in classes {
            let item_for_state = item.clone().or_else(|| item_in_event(event_text).map(|i| bare_item(&i)));
            let record = |candidates, outcome| ClassRecord { class, character: character.to_string(), candidates, outcome };
            let Some(bindings) = self.bindings_for(class, event_text, &context, character, item_for_state.as_deref())
            else {
                out.records.push(record(Vec::new(), ClassOutcome::NoItem));
                continue;
            };
            let query = Query::render(self.templates, QueryKind::for_precondition(class), bindings.clone())?;
            let set = CandidateSet::from_samples(self.sample(&query)?);
            let mut set = frequency_filter(&self.merge_duplicates(set, class)?, self.config.min_count);
            if set.is_empty() {
                out.records.push(record(Vec::new(), ClassOutcome::NoCandidates));
                continue;
            }
            let chosen: Vec<Candidate> = if class == PreconditionClass::Location && !self.config.location_rescore {
                most_frequent(&set).into_iter().cloned().collect()
            } else {
                self.rescore(&query, &mut set)?;
                let ranked = pmi_dc_rank(&set);
                let keep = if class == PreconditionClass::ItemNeed && !self.config.single_item_precondition {
                    ranked.len()
                } else {
                    1
                };
                ranked.into_iter().take(keep).cloned().collect()
            };
            let template = self.templates.get(QueryKind::for_precondition(class))?;
            let mut outcome = ClassOutcome::Drafted;
            let mut drafted = 0;
            for cand in &chosen {
                let answer = cand.text.clone();
                if matches!(
                    class,
                    PreconditionClass::ItemNeed | PreconditionClass::Location | PreconditionClass::ItemState
                ) && gate_nothing(&answer)
                {
                    outcome = ClassOutcome::Nothing;
                    continue;
                }
                if class == PreconditionClass::Reason && gate_intention_reason(&answer) {
                    outcome = ClassOutcome::Intention;
                    continue;
                }
                let text = crate::text::normalize_ws(&template.result_text(&answer, &bindings)?);
                if normalize_key(&text) == normalize_key(event_text) {
                    outcome = ClassOutcome::IdenticalToParent;
                    continue;
                }
                if class == PreconditionClass::ItemNeed && item.is_none() {
                    item = Some(bare_item(&answer));
                }
                let owner_character = if class.is_copied() {
                    extract_characters(&text, Some(characters)).into_iter().next().unwrap_or(character.to_string())
                } else {
                    character.to_string()
                };
                out.drafts.push(PreconditionDraft { class, text, character: owner_character, answer });
                drafted += 1;
            }
            if drafted > 0 {
                outcome = ClassOutcome::Drafted;
            }
            out.records.push(record(set.items, outcome));
        }
        Ok(out)
    }

    /// Produces an event that would make `precond` true. How, interaction and
    /// reason preconditions are copied; the rest go through their event
    /// prompts. Texts in `exclude` are never returned.
    pub fn infer_event_for(
        &self,
        precond: &Precondition,
        owner_text: &str,
        context: &[String],
        exclude: &[String],
    ) -> Result<GeneratedEvent, KnowledgeError> {
        let excluded = |t: &str| exclude.iter().any(|x| normalize_key(x) == normalize_key(t));
        let Some(kind) = QueryKind::event_for(precond.class) else {
            if excluded(&precond.text) {
                return Err(KnowledgeError::GenerationExhausted(precond.text.clone()));
            }
            return Ok(GeneratedEvent { text: precond.text.clone(), perplexity: None, candidates: Vec::new() });
        };
        let sentence = strip_end(owner_text);
        let person = precond.character.as_str();
        let mut bindings = match precond.class {
            PreconditionClass::ItemNeed => {
                bind(&[("Sentence", &sentence), ("Person", person), ("item", &item_in_precondition(&precond.text))])
            }
            PreconditionClass::ItemState => {
                bind(&[("Sentence", &sentence), ("Person", person), ("item state", &strip_end(&precond.text))])
            }
            _ => bind(&[
                ("Sentence", &sentence),
                ("Person", person),
                ("location", &location_in_precondition(&precond.text)),
            ]),
        };
        bindings.insert("Context".into(), context.join("\n"));
        let query = Query::render(self.templates, kind, bindings)?;
        let samples: Vec<String> = self.sample(&query)?.into_iter().filter(|s| !excluded(s)).collect();
        let set = CandidateSet::from_samples(samples);
        // Most frequent, first seen on ties.
        let best = set
            .items
            .iter()
            .fold(None::<&Candidate>, |best, c| match best {
                Some(b) if b.count >= c.count => Some(b),
                _ => Some(c),
            })
            .cloned();
        let Some(best) = best else {
            return Err(KnowledgeError::GenerationExhausted(precond.text.clone()));
        };
        let perplexity = self
            .source
            .score(&query, &best.text, Conditioning::Input)?
            .map(|lp| (-lp / tokens(&best.text).len().max(1) as f64).exp());
        Ok(GeneratedEvent { text: best.text, perplexity, candidates: set.items })
    }

    pub fn gate_expandable(&self, event_text: &str, keyword: Keyword) -> Result<bool, KnowledgeError> {
        gate_expandable(event_text, keyword, self.source, self.templates, self.config.detect_temperature)
    }
}

/// Asks for a short story on `title` and returns its final sentence, to be
/// used as a planning goal.
pub fn seed_ending(
    title: &str,
    source: &dyn KnowledgeSource,
    templates: &TemplateSet,
    temperature: f64,
) -> Result<String, KnowledgeError> {
    let query = Query::render(templates, QueryKind::SeedEnding, bind(&[("title", title.trim())]))?;
    source
        .complete(&query, 1, temperature)?
        .iter()
        .find_map(|c| last_sentence(c))
        .ok_or_else(|| KnowledgeError::GenerationExhausted(format!("ending for `{}`", title.trim())))
}
