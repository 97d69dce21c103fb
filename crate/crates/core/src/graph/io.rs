//! Plan file (JSON) and Graphviz export.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{CausalLink, EventNode, GraphError, PlanGraph, Precondition, PreconditionStatus};

pub const PLAN_FORMAT_VERSION: u32 = 1;

/// On-disk form of a [`PlanGraph`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDocument {
    pub version: u32,
    pub goal: super::EventId,
    pub initial_conditions: Vec<String>,
    pub events: Vec<EventNode>,
    pub preconditions: Vec<Precondition>,
    pub links: Vec<CausalLink>,
    pub next_id: u32,
    pub next_seq: u64,
}

impl PlanGraph {
    pub fn to_document(&self) -> Result<PlanDocument, GraphError> {
        let goal = self.goal.ok_or_else(|| GraphError::Invariant("plan has no goal".into()))?;
        Ok(PlanDocument {
            version: PLAN_FORMAT_VERSION,
            goal,
            initial_conditions: self.initial_conditions.clone(),
            events: self.events.values().cloned().collect(),
            preconditions: self.preconditions.values().cloned().collect(),
            links: self.links.clone(),
            next_id: self.next_id,
            next_seq: self.next_seq,
        })
    }

    /// Rebuilds a plan from its document form and validates it.
    pub fn from_document(doc: PlanDocument) -> Result<PlanGraph, GraphError> {
        if doc.version != PLAN_FORMAT_VERSION {
            return Err(GraphError::Invariant(format!("unsupported plan version {}", doc.version)));
        }
        let events: BTreeMap<_, _> = doc.events.into_iter().map(|e| (e.id, e)).collect();
        let preconditions: BTreeMap<_, _> = doc.preconditions.into_iter().map(|p| (p.id, p)).collect();
        let max_id = events
            .keys()
            .map(|e| e.0)
            .chain(preconditions.keys().map(|p| p.0))
            .max()
            .map_or(0, |m| m + 1);
        let max_seq = events.values().map(|e| e.created_seq + 1).max().unwrap_or(0);
        let plan = PlanGraph {
            events,
            preconditions,
            links: doc.links,
            goal: Some(doc.goal),
            initial_conditions: doc.initial_conditions,
            next_id: doc.next_id.max(max_id),
            next_seq: doc.next_seq.max(max_seq),
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> Result<String, GraphError> {
        let doc = self.to_document()?;
        let mut s = serde_json::to_string_pretty(&doc).map_err(|e| GraphError::Invariant(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(json: &str) -> Result<PlanGraph, GraphError> {
        let doc: PlanDocument =
            serde_json::from_str(json).map_err(|e| GraphError::Invariant(format!("malformed plan file: {e}")))?;
        PlanGraph::from_document(doc)
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering: events are boxes (the goal filled green, others blue),
/// preconditions are ellipses (red when matched to an initial condition,
/// dashed grey when left dangling by a heuristic). Edges run from an event to
/// the precondition it satisfies and from a precondition to its owner.
pub fn to_dot(plan: &PlanGraph) -> String {
    let mut out = String::from("digraph plan {\n  rankdir=LR;\n");
    for e in plan.events() {
        let fill = if e.is_goal() { "palegreen" } else { "lightblue" };
        let _ = writeln!(
            out,
            "  {} [shape=box, style=filled, fillcolor={fill}, label=\"{}\"];",
            e.id,
            escape(e.text())
        );
    }
    for p in plan.preconditions() {
        let style = match p.status {
            PreconditionStatus::DanglingInitial => "style=filled, fillcolor=salmon",
            PreconditionStatus::DanglingHeuristic => "style=dashed, color=grey50",
            _ => "style=filled, fillcolor=white",
        };
        let _ = writeln!(
            out,
            "  {} [shape=ellipse, {style}, label=\"{}\\n[{}]\"];",
            p.id,
            escape(&p.text),
            p.class
        );
        let _ = writeln!(out, "  {} -> {};", p.id, p.owner);
    }
    for l in plan.links() {
        let _ = writeln!(out, "  {} -> {};", l.source, l.condition);
    }
    out.push_str("}\n");
    out
}
