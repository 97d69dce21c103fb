//! Backward-chaining causal-link plot planning over text events.
//!
//! Starting from an ending sentence the planner asks a [`knowledge::KnowledgeSource`]
//! for each event's preconditions, satisfies them with reused or newly
//! generated events and returns a [`graph::PlanGraph`]. [`ordering`] flattens
//! the graph into a plot and [`eval`] scores plots by answerable enablement
//! questions.

pub mod eval;
pub mod graph;
pub mod knowledge;
pub mod ordering;
pub mod planner;
pub mod similarity;
pub mod text;
pub mod transport;

pub use graph::{
    CausalLink, EventId, EventNode, EventType, GraphError, PlanGraph, Precondition, PreconditionClass,
    PreconditionId, PreconditionStatus,
};
pub use knowledge::{KnowledgeConfig, KnowledgeError, KnowledgeSource, ScriptedSource, TemplateSet};
pub use ordering::{render_plot, select_phrasing, total_order};
pub use similarity::{Embedder, LocalEmbedder, SimilarityConfig};
