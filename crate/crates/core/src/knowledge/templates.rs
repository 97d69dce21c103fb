//! Few-shot prompt templates.
//!
//! Each template is a TOML file with the few-shot `shots`, a `query` line
//! holding `[Placeholder]` slots, an optional `domain` line (the answer prefix
//! used to estimate the unconditional probability of an answer) and an
//! optional `result` pattern turning the raw answer into a sentence.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::graph::PreconditionClass;

/// Every prompt the system can issue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    ItemNeed,
    Location,
    ItemState,
    How,
    InteractionWithOthers,
    Reason,
    EventItemNeed,
    EventItemState,
    EventLocation,
    DetectHow,
    DetectReason,
    Enablement,
    SeedEnding,
}

impl QueryKind {
    pub const ALL: [QueryKind; 13] = [
        QueryKind::ItemNeed,
        QueryKind::Location,
        QueryKind::ItemState,
        QueryKind::How,
        QueryKind::InteractionWithOthers,
        QueryKind::Reason,
        QueryKind::EventItemNeed,
        QueryKind::EventItemState,
        QueryKind::EventLocation,
        QueryKind::DetectHow,
        QueryKind::DetectReason,
        QueryKind::Enablement,
        QueryKind::SeedEnding,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QueryKind::ItemNeed => "item_need",
            QueryKind::Location => "location",
            QueryKind::ItemState => "item_state",
            QueryKind::How => "how",
            QueryKind::InteractionWithOthers => "interaction_with_others",
            QueryKind::Reason => "reason",
            QueryKind::EventItemNeed => "event_item_need",
            QueryKind::EventItemState => "event_item_state",
            QueryKind::EventLocation => "event_location",
            QueryKind::DetectHow => "detect_how",
            QueryKind::DetectReason => "detect_reason",
            QueryKind::Enablement => "enablement",
            QueryKind::SeedEnding => "seed_ending",
        }
    }

    /// The nine planner prompts carry exactly seven shots.
    pub fn required_shots(self) -> Option<usize> {
        match self {
            QueryKind::DetectHow | QueryKind::DetectReason | QueryKind::Enablement | QueryKind::SeedEnding => None,
            _ => Some(7),
        }
    }

    pub fn for_precondition(class: PreconditionClass) -> QueryKind {
        match class {
            PreconditionClass::ItemNeed => QueryKind::ItemNeed,
            PreconditionClass::Location => QueryKind::Location,
            PreconditionClass::ItemState => QueryKind::ItemState,
            PreconditionClass::How => QueryKind::How,
            PreconditionClass::InteractionWithOthers => QueryKind::InteractionWithOthers,
            PreconditionClass::Reason => QueryKind::Reason,
        }
    }

    /// Event-generation prompt for classes that are not copied verbatim.
    pub fn event_for(class: PreconditionClass) -> Option<QueryKind> {
        match class {
            PreconditionClass::ItemNeed => Some(QueryKind::EventItemNeed),
            PreconditionClass::ItemState => Some(QueryKind::EventItemState),
            PreconditionClass::Location => Some(QueryKind::EventLocation),
            _ => None,
        }
    }
}

impl fmt::Display for QueryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Placeholder name (without brackets) to value.
pub type Bindings = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("template `{kind}` has {found} shots, expected {expected}")]
    ShotCount { kind: QueryKind, found: usize, expected: usize },
    #[error("template `{kind}` needs a value for [{placeholder}]")]
    MissingBinding { kind: QueryKind, placeholder: String },
    #[error("no template for `{0}`")]
    Missing(QueryKind),
    #[error("cannot read template {path}: {message}")]
    Load { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub kind: QueryKind,
    pub shots: Vec<String>,
    pub query: String,
    #[serde(default)]
    pub domain: Option<String>,
    #[serde(default)]
    pub result: Option<String>,
    #[serde(default = "default_separator")]
    pub separator: String,
}

fn default_separator() -> String {
    "\n\n".to_string()
}

/// Names of all `[...]` placeholders in `text`, in order of appearance.
pub fn placeholders(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find('[') {
        let after = &rest[start + 1..];
        match after.find(']') {
            Some(end) => {
                let name = &after[..end];
                if !name.is_empty() && name.chars().all(|c| c.is_alphanumeric() || c == ' ' || c == '_')
                    && !out.iter().any(|n| n == name) {
                        out.push(name.to_string());
                    }
                rest = &after[end + 1..];
            }
            None => break,
        }
    }
    out
}

/// Replaces each `[name]` with its binding; every placeholder must be bound.
pub fn fill(kind: QueryKind, text: &str, bindings: &Bindings) -> Result<String, TemplateError> {
    let mut out = text.to_string();
    for name in placeholders(text) {
        let value = bindings
            .get(&name)
            .ok_or_else(|| TemplateError::MissingBinding { kind, placeholder: name.clone() })?;
        out = out.replace(&format!("[{name}]"), value);
    }
    Ok(out)
}

impl PromptTemplate {
    pub fn from_toml(text: &str) -> Result<Self, TemplateError> {
        let t: PromptTemplate =
            toml::from_str(text).map_err(|e| TemplateError::Load { path: "<inline>".into(), message: e.to_string() })?;
        t.check()?;
        Ok(t)
    }

    pub fn check(&self) -> Result<(), TemplateError> {
        if let Some(expected) = self.kind.required_shots() {
            if self.shots.len() != expected {
                return Err(TemplateError::ShotCount { kind: self.kind, found: self.shots.len(), expected });
            }
        }
        Ok(())
    }

    fn block(&self, last: &str) -> String {
        let mut parts: Vec<&str> = self.shots.iter().map(|s| s.trim_end()).collect();
        parts.push(last);
        parts.join(&self.separator)
    }

    /// The full few-shot prompt with the query line filled in.
    pub fn render(&self, bindings: &Bindings) -> Result<String, TemplateError> {
        Ok(self.block(&fill(self.kind, &self.query, bindings)?))
    }

    /// The few-shot block with the query replaced by the bare answer prefix.
    pub fn render_domain(&self, bindings: &Bindings) -> Result<String, TemplateError> {
        let domain = match &self.domain {
            Some(d) => d.clone(),
            None => self.query.lines().last().unwrap_or("").to_string(),
        };
        // Domain lines may mention the person; other slots are left empty.
        let mut b = bindings.clone();
        for name in placeholders(&domain) {
            b.entry(name).or_default();
        }
        Ok(self.block(&fill(self.kind, &domain, &b)?))
    }

    /// Turns a raw answer into the sentence stored in the plan.
    pub fn result_text(&self, answer: &str, bindings: &Bindings) -> Result<String, TemplateError> {
        match &self.result {
            None => Ok(answer.to_string()),
            Some(pattern) => {
                let mut b = bindings.clone();
                b.insert("Answer".into(), answer.to_string());
                fill(self.kind, pattern, &b)
            }
        }
    }
}

macro_rules! builtin {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../prompts/", $name, ".toml")))),*]
    };
}

/// Prompt files shipped with the crate, by file stem.
pub const BUILTIN_PROMPTS: &[(&str, &str)] = builtin!(
    "item_need",
    "location",
    "item_state",
    "how",
    "interaction_with_others",
    "reason",
    "event_item_need",
    "event_item_state",
    "event_location",
    "detect_how",
    "detect_reason",
    "enablement",
    "seed_ending",
);

/// Immutable set of templates, one per query kind.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateSet {
    templates: BTreeMap<QueryKind, PromptTemplate>,
}

impl TemplateSet {
    pub fn builtin() -> Self {
        let templates = BUILTIN_PROMPTS
            .iter()
            .map(|(name, text)| {
                let t = PromptTemplate::from_toml(text).unwrap_or_else(|e| panic!("builtin prompt {name}: {e}"));
                (t.kind, t)
            })
            .collect();
        TemplateSet { templates }
    }

    /// Built-in templates overridden by every `*.toml` file in `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, TemplateError> {
        let mut set = TemplateSet::builtin();
        let entries = std::fs::read_dir(dir)
            .map_err(|e| TemplateError::Load { path: dir.display().to_string(), message: e.to_string() })?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "toml"))
            .collect();
        paths.sort();
        for path in paths {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| TemplateError::Load { path: path.display().to_string(), message: e.to_string() })?;
            let t = PromptTemplate::from_toml(&text).map_err(|e| match e {
                TemplateError::Load { message, .. } => TemplateError::Load { path: path.display().to_string(), message },
                other => other,
            })?;
            set.templates.insert(t.kind, t);
        }
        Ok(set)
    }

    pub fn get(&self, kind: QueryKind) -> Result<&PromptTemplate, TemplateError> {
        self.templates.get(&kind).ok_or(TemplateError::Missing(kind))
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet::builtin()
    }
}
