use std::fmt;

use serde::{Deserialize, Serialize};

/// Identifier of an event node, unique within one plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventId(pub u32);

/// Identifier of a precondition node, unique within one plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PreconditionId(pub u32);

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl fmt::Display for PreconditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

/// The six kinds of precondition an event can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreconditionClass {
    ItemNeed,
    Location,
    ItemState,
    How,
    InteractionWithOthers,
    Reason,
}

impl PreconditionClass {
    /// Fixed generation order used by the planner.
    pub const ALL: [PreconditionClass; 6] = [
        PreconditionClass::ItemNeed,
        PreconditionClass::Location,
        PreconditionClass::ItemState,
        PreconditionClass::How,
        PreconditionClass::InteractionWithOthers,
        PreconditionClass::Reason,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PreconditionClass::ItemNeed => "item_need",
            PreconditionClass::Location => "location",
            PreconditionClass::ItemState => "item_state",
            PreconditionClass::How => "how",
            PreconditionClass::InteractionWithOthers => "interaction_with_others",
            PreconditionClass::Reason => "reason",
        }
    }

    /// Item-need and location answers are short phrases and use the lower
    /// similarity threshold.
    pub fn is_short_form(self) -> bool {
        matches!(self, PreconditionClass::ItemNeed | PreconditionClass::Location)
    }

    /// Classes whose precondition sentence is itself an event and is copied
    /// verbatim instead of prompting for a satisfying event.
    pub fn is_copied(self) -> bool {
        matches!(
            self,
            PreconditionClass::How | PreconditionClass::InteractionWithOthers | PreconditionClass::Reason
        )
    }
}

impl fmt::Display for PreconditionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PreconditionClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PreconditionClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown precondition class `{s}`"))
    }
}

/// What an event exists for: the ending (goal) or satisfying one class of
/// precondition. This is the type used when ordering the plot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventType {
    Goal,
    ItemNeed,
    Location,
    ItemState,
    How,
    InteractionWithOthers,
    Reason,
}

impl EventType {
    pub fn precondition_class(self) -> Option<PreconditionClass> {
        Some(match self {
            EventType::Goal => return None,
            EventType::ItemNeed => PreconditionClass::ItemNeed,
            EventType::Location => PreconditionClass::Location,
            EventType::ItemState => PreconditionClass::ItemState,
            EventType::How => PreconditionClass::How,
            EventType::InteractionWithOthers => PreconditionClass::InteractionWithOthers,
            EventType::Reason => PreconditionClass::Reason,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self.precondition_class() {
            Some(c) => c.as_str(),
            None => "goal",
        }
    }
}

impl From<PreconditionClass> for EventType {
    fn from(c: PreconditionClass) -> Self {
        match c {
            PreconditionClass::ItemNeed => EventType::ItemNeed,
            PreconditionClass::Location => EventType::Location,
            PreconditionClass::ItemState => EventType::ItemState,
            PreconditionClass::How => EventType::How,
            PreconditionClass::InteractionWithOthers => EventType::InteractionWithOthers,
            PreconditionClass::Reason => EventType::Reason,
        }
    }
}

/// One surface realization of an event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phrasing {
    pub text: String,
    pub count: u32,
    pub perplexity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventNode {
    pub id: EventId,
    pub phrasings: Vec<Phrasing>,
    pub characters: Vec<String>,
    pub satisfies_class: EventType,
    pub created_seq: u64,
}

impl EventNode {
    /// The phrasing presented in plots and prompts.
    pub fn text(&self) -> &str {
        crate::ordering::select_phrasing(self)
    }

    pub fn is_goal(&self) -> bool {
        self.satisfies_class == EventType::Goal
    }
}

/// Why a precondition was left without a satisfying event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreconditionStatus {
    Unsatisfied,
    SatisfiedBy(EventId),
    /// Matched one of the user-supplied initial conditions.
    DanglingInitial,
    /// Expansion was suppressed: retries exhausted, budget reached or a gate fired.
    DanglingHeuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Precondition {
    pub id: PreconditionId,
    pub class: PreconditionClass,
    pub text: String,
    pub character: String,
    pub owner: EventId,
    pub status: PreconditionStatus,
}

/// `source` establishes `condition`, which `target` requires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CausalLink {
    pub source: EventId,
    pub condition: PreconditionId,
    pub target: EventId,
}
