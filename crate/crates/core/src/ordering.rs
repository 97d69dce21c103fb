//! Flattening a finished plan into a plot.
//!
//! The causal links only give a partial order. Among events whose causal
//! predecessors have all been emitted, the one with the earliest class rank is
//! emitted next:
//!
//! reason, how, item need, item state, location, interaction, current action.
//!
//! Remaining ties go to the event generated first.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use crate::graph::{EventId, EventNode, EventType, GraphError, PlanGraph};

/// Position of an event type in the plot order; lower comes earlier.
pub fn class_rank(t: EventType) -> u8 {
    match t {
        EventType::Reason => 0,
        EventType::How => 1,
        EventType::ItemNeed => 2,
        EventType::ItemState => 3,
        EventType::Location => 4,
        EventType::InteractionWithOthers => 5,
        EventType::Goal => 6,
    }
}

/// Sort key used to break ties between events that are ready at the same time.
pub fn order_key(e: &EventNode) -> (u8, u64) {
    (class_rank(e.satisfies_class), e.created_seq)
}

/// Priority-driven topological sort of the plan's events.
pub fn total_order(plan: &PlanGraph) -> Result<Vec<EventId>, GraphError> {
    let mut indegree: BTreeMap<EventId, usize> = plan.events().map(|e| (e.id, 0)).collect();
    let mut out_edges: BTreeMap<EventId, Vec<EventId>> = BTreeMap::new();
    for e in plan.events() {
        let succ = plan.successors(e.id);
        for s in &succ {
            *indegree.get_mut(s).expect("link target exists") += 1;
        }
        out_edges.insert(e.id, succ.into_iter().collect());
    }

    let key = |id: EventId| order_key(plan.event(id).expect("event exists"));
    let mut ready: BinaryHeap<Reverse<((u8, u64), EventId)>> = indegree
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(id, _)| Reverse((key(*id), *id)))
        .collect();

    let mut order = Vec::with_capacity(indegree.len());
    while let Some(Reverse((_, id))) = ready.pop() {
        order.push(id);
        for s in &out_edges[&id] {
            let d = indegree.get_mut(s).expect("link target exists");
            *d -= 1;
            if *d == 0 {
                ready.push(Reverse((key(*s), *s)));
            }
        }
    }
    if order.len() != indegree.len() {
        return Err(GraphError::Invariant("causal links contain a cycle".into()));
    }
    Ok(order)
}

/// Highest count wins, then lowest perplexity (unknown perplexity loses),
/// then the phrasing recorded first.
pub fn select_phrasing(event: &EventNode) -> &str {
    let mut best = &event.phrasings[0];
    for p in &event.phrasings[1..] {
        let better = match p.count.cmp(&best.count) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => match (p.perplexity, best.perplexity) {
                (Some(a), Some(b)) => a < b,
                (Some(_), None) => true,
                _ => false,
            },
        };
        if better {
            best = p;
        }
    }
    &best.text
}

/// One selected phrasing per line in plot order, ending line last.
pub fn render_plot(plan: &PlanGraph) -> Result<String, GraphError> {
    render(plan, false)
}

/// Same as [`render_plot`] with a `[class]` tag appended to every line.
pub fn render_plot_annotated(plan: &PlanGraph) -> Result<String, GraphError> {
    render(plan, true)
}

fn render(plan: &PlanGraph, annotate: bool) -> Result<String, GraphError> {
    let mut out = String::new();
    for id in total_order(plan)? {
        let e = plan.event(id).expect("ordered ids exist");
        out.push_str(&crate::text::as_sentence(e.text()));
        if annotate {
            out.push_str(&format!(" [{}]", e.satisfies_class.as_str()));
        }
        out.push('\n');
    }
    Ok(out)
}
