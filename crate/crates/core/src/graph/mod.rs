//! Plan data model: events, their typed preconditions and the causal links
//! between them, plus the graph queries the planner needs.

mod io;
mod types;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

pub use io::{to_dot, PlanDocument};
pub use types::{
    CausalLink, EventId, EventNode, EventType, Phrasing, Precondition, PreconditionClass, PreconditionId,
    PreconditionStatus,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("event text must not be empty")]
    EmptyText,
    #[error("plan already has a goal event")]
    GoalAlreadySet,
    #[error("unknown event {0}")]
    UnknownEvent(EventId),
    #[error("unknown precondition {0}")]
    UnknownPrecondition(PreconditionId),
    #[error("linking {from} to {condition} would create a cycle")]
    WouldCycle { from: EventId, condition: PreconditionId },
    #[error("precondition {0} is not unsatisfied")]
    NotUnsatisfied(PreconditionId),
    #[error("the goal event cannot be removed")]
    RemoveGoal,
    #[error("plan invariant violated: {0}")]
    Invariant(String),
}

/// A partially ordered plan. Ordering constraints are implied by the causal
/// links: a link's source always precedes its target.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlanGraph {
    events: BTreeMap<EventId, EventNode>,
    preconditions: BTreeMap<PreconditionId, Precondition>,
    links: Vec<CausalLink>,
    goal: Option<EventId>,
    initial_conditions: Vec<String>,
    next_id: u32,
    next_seq: u64,
}

impl PlanGraph {
    pub fn new(initial_conditions: Vec<String>) -> Self {
        PlanGraph { initial_conditions, ..Default::default() }
    }

    pub fn goal(&self) -> Option<EventId> {
        self.goal
    }

    pub fn initial_conditions(&self) -> &[String] {
        &self.initial_conditions
    }

    pub fn event(&self, id: EventId) -> Option<&EventNode> {
        self.events.get(&id)
    }

    pub fn precondition(&self, id: PreconditionId) -> Option<&Precondition> {
        self.preconditions.get(&id)
    }

    pub fn events(&self) -> impl Iterator<Item = &EventNode> {
        self.events.values()
    }

    pub fn preconditions(&self) -> impl Iterator<Item = &Precondition> {
        self.preconditions.values()
    }

    pub fn links(&self) -> &[CausalLink] {
        &self.links
    }

    pub fn event_count(&self) -> usize {
        self.events.len()
    }

    pub fn contains_event(&self, id: EventId) -> bool {
        self.events.contains_key(&id)
    }

    /// Preconditions attached to `owner`, in creation order.
    pub fn preconditions_of(&self, owner: EventId) -> impl Iterator<Item = &Precondition> {
        self.preconditions.values().filter(move |p| p.owner == owner)
    }

    fn fresh_id(&mut self) -> u32 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    pub fn add_event(
        &mut self,
        text: &str,
        satisfies_class: EventType,
        characters: Vec<String>,
    ) -> Result<EventId, GraphError> {
        self.add_event_scored(text, satisfies_class, characters, None)
    }

    /// Like [`PlanGraph::add_event`] but records the phrasing's perplexity.
    pub fn add_event_scored(
        &mut self,
        text: &str,
        satisfies_class: EventType,
        characters: Vec<String>,
        perplexity: Option<f64>,
    ) -> Result<EventId, GraphError> {
        let text = crate::text::normalize_ws(text);
        if text.is_empty() {
            return Err(GraphError::EmptyText);
        }
        if satisfies_class == EventType::Goal && self.goal.is_some() {
            return Err(GraphError::GoalAlreadySet);
        }
        let id = EventId(self.fresh_id());
        let created_seq = self.next_seq;
        self.next_seq += 1;
        self.events.insert(
            id,
            EventNode {
                id,
                phrasings: vec![Phrasing { text, count: 1, perplexity }],
                characters,
                satisfies_class,
                created_seq,
            },
        );
        if satisfies_class == EventType::Goal {
            self.goal = Some(id);
        }
        Ok(id)
    }

    /// Records another occurrence of `text` as a phrasing of `event`. An exact
    /// repeat bumps the existing count, anything else is appended with count 1.
    pub fn add_phrasing(&mut self, event: EventId, text: &str, perplexity: Option<f64>) -> Result<(), GraphError> {
        let node = self.events.get_mut(&event).ok_or(GraphError::UnknownEvent(event))?;
        let text = crate::text::normalize_ws(text);
        if text.is_empty() {
            return Err(GraphError::EmptyText);
        }
        match node.phrasings.iter_mut().find(|p| p.text == text) {
            Some(p) => {
                p.count += 1;
                if p.perplexity.is_none() {
                    p.perplexity = perplexity;
                }
            }
            None => node.phrasings.push(Phrasing { text, count: 1, perplexity }),
        }
        Ok(())
    }

    pub fn add_precondition(
        &mut self,
        owner: EventId,
        class: PreconditionClass,
        text: &str,
        character: &str,
    ) -> Result<PreconditionId, GraphError> {
        if !self.events.contains_key(&owner) {
            return Err(GraphError::UnknownEvent(owner));
        }
        let text = crate::text::normalize_ws(text);
        if text.is_empty() {
            return Err(GraphError::EmptyText);
        }
        let id = PreconditionId(self.fresh_id());
        self.preconditions.insert(
            id,
            Precondition {
                id,
                class,
                text,
                character: character.to_string(),
                owner,
                status: PreconditionStatus::Unsatisfied,
            },
        );
        Ok(id)
    }

    /// Leaves an unsatisfied precondition dangling. `status` must be one of the
    /// two dangling variants.
    pub fn mark_dangling(&mut self, id: PreconditionId, status: PreconditionStatus) -> Result<(), GraphError> {
        debug_assert!(matches!(
            status,
            PreconditionStatus::DanglingInitial | PreconditionStatus::DanglingHeuristic
        ));
        let p = self.preconditions.get_mut(&id).ok_or(GraphError::UnknownPrecondition(id))?;
        if p.status != PreconditionStatus::Unsatisfied {
            return Err(GraphError::NotUnsatisfied(id));
        }
        p.status = status;
        Ok(())
    }

    /// Events that `event` directly enables.
    pub fn successors(&self, event: EventId) -> BTreeSet<EventId> {
        self.links.iter().filter(|l| l.source == event).map(|l| l.target).collect()
    }

    /// Events that directly enable `event`.
    pub fn predecessors(&self, event: EventId) -> BTreeSet<EventId> {
        self.links.iter().filter(|l| l.target == event).map(|l| l.source).collect()
    }

    /// Everything `event` causally leads to, excluding `event` itself.
    pub fn descendants(&self, event: EventId) -> BTreeSet<EventId> {
        self.reach(event, |g, e| g.successors(e))
    }

    /// Everything that causally leads to `event`, excluding `event` itself.
    pub fn ancestors(&self, event: EventId) -> BTreeSet<EventId> {
        self.reach(event, |g, e| g.predecessors(e))
    }

    fn reach(&self, start: EventId, next: impl Fn(&Self, EventId) -> BTreeSet<EventId>) -> BTreeSet<EventId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(e) = stack.pop() {
            for n in next(self, e) {
                if seen.insert(n) {
                    stack.push(n);
                }
            }
        }
        seen.remove(&start);
        seen
    }

    /// True if a link from `source` to a precondition owned by `target` would
    /// close a cycle, i.e. `source` is `target` or one of its descendants.
    pub fn would_cycle(&self, source: EventId, target: EventId) -> bool {
        source == target || self.descendants(target).contains(&source)
    }

    pub fn add_link(&mut self, source: EventId, condition: PreconditionId) -> Result<(), GraphError> {
        if !self.events.contains_key(&source) {
            return Err(GraphError::UnknownEvent(source));
        }
        let p = self.preconditions.get(&condition).ok_or(GraphError::UnknownPrecondition(condition))?;
        if p.status != PreconditionStatus::Unsatisfied {
            return Err(GraphError::NotUnsatisfied(condition));
        }
        let target = p.owner;
        if self.would_cycle(source, target) {
            return Err(GraphError::WouldCycle { from: source, condition });
        }
        self.links.push(CausalLink { source, condition, target });
        if let Some(p) = self.preconditions.get_mut(&condition) {
            p.status = PreconditionStatus::SatisfiedBy(source);
        }
        Ok(())
    }

    /// Removes a non-goal event with its own preconditions and every link
    /// touching it. Preconditions it used to satisfy are reset to
    /// `Unsatisfied` and returned in id order.
    pub fn remove_event(&mut self, event: EventId) -> Result<Vec<PreconditionId>, GraphError> {
        if Some(event) == self.goal {
            return Err(GraphError::RemoveGoal);
        }
        if self.events.remove(&event).is_none() {
            return Err(GraphError::UnknownEvent(event));
        }
        let own: BTreeSet<PreconditionId> =
            self.preconditions.values().filter(|p| p.owner == event).map(|p| p.id).collect();
        for id in &own {
            self.preconditions.remove(id);
        }
        self.links
            .retain(|l| l.source != event && l.target != event && !own.contains(&l.condition));
        let mut reset = Vec::new();
        for p in self.preconditions.values_mut() {
            if p.status == PreconditionStatus::SatisfiedBy(event) {
                p.status = PreconditionStatus::Unsatisfied;
                reset.push(p.id);
            }
        }
        Ok(reset)
    }

    /// Repeatedly removes non-goal events that no longer enable anything,
    /// returning the preconditions reset along the way that still exist.
    pub fn prune_orphans(&mut self) -> Vec<PreconditionId> {
        let mut reset = BTreeSet::new();
        loop {
            let orphan = self
                .events
                .keys()
                .copied()
                .find(|&e| Some(e) != self.goal && !self.links.iter().any(|l| l.source == e));
            let Some(e) = orphan else { break };
            if let Ok(ids) = self.remove_event(e) {
                reset.extend(ids);
            }
        }
        reset.retain(|id| self.preconditions.contains_key(id));
        reset.into_iter().collect()
    }

    /// Selected phrasings of `event` and its causal descendants in breadth-first
    /// layer order toward the goal; same-layer ties go by creation order.
    pub fn context_of(&self, event: EventId) -> Vec<String> {
        self.forward_bfs(event).into_iter().map(|e| self.events[&e].text().to_string()).collect()
    }

    /// Checks every structural invariant of a well-formed plan.
    pub fn validate(&self) -> Result<(), GraphError> {
        let bad = |m: String| Err(GraphError::Invariant(m));
        let goals: Vec<_> = self.events.values().filter(|e| e.is_goal()).collect();
        if goals.len() != 1 || Some(goals[0].id) != self.goal {
            return bad(format!("expected exactly one goal, found {}", goals.len()));
        }
        let mut seqs = BTreeSet::new();
        for e in self.events.values() {
            if e.phrasings.is_empty() || e.phrasings.iter().any(|p| p.count == 0) {
                return bad(format!("event {} has an empty phrasing list or zero count", e.id));
            }
            if !seqs.insert(e.created_seq) {
                return bad(format!("duplicate created_seq {}", e.created_seq));
            }
        }
        let mut per_condition = BTreeMap::new();
        for l in &self.links {
            if l.source == l.target {
                return bad(format!("self link on {}", l.source));
            }
            if !self.events.contains_key(&l.source) || !self.events.contains_key(&l.target) {
                return bad(format!("link {l:?} references a missing event"));
            }
            match self.preconditions.get(&l.condition) {
                Some(p) if p.owner == l.target && p.status == PreconditionStatus::SatisfiedBy(l.source) => {}
                _ => return bad(format!("link {l:?} disagrees with its precondition")),
            }
            *per_condition.entry(l.condition).or_insert(0) += 1;
        }
        for p in self.preconditions.values() {
            if !self.events.contains_key(&p.owner) {
                return bad(format!("precondition {} has no owner", p.id));
            }
            if let PreconditionStatus::SatisfiedBy(_) = p.status {
                if per_condition.get(&p.id) != Some(&1) {
                    return bad(format!("precondition {} is satisfied without exactly one link", p.id));
                }
            }
        }
        if let Some(cycle_at) = self.find_cycle() {
            return bad(format!("cycle through {cycle_at}"));
        }
        let goal = self.goal.expect("checked above");
        let reaching_goal = self.ancestors(goal);
        for e in self.events.keys() {
            if *e != goal && !reaching_goal.contains(e) {
                return bad(format!("event {e} has no causal path to the goal"));
            }
        }
        Ok(())
    }

    /// Some event on a directed cycle, if the link graph has one.
    pub fn find_cycle(&self) -> Option<EventId> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Open,
            Done,
        }
        let mut marks: BTreeMap<EventId, Mark> = BTreeMap::new();
        for &root in self.events.keys() {
            if marks.contains_key(&root) {
                continue;
            }
            let mut stack = vec![(root, self.successors(root).into_iter().collect::<Vec<_>>())];
            marks.insert(root, Mark::Open);
            while let Some((node, pending)) = stack.last_mut() {
                match pending.pop() {
                    Some(n) => match marks.get(&n) {
                        Some(Mark::Open) => return Some(n),
                        Some(Mark::Done) => {}
                        None => {
                            marks.insert(n, Mark::Open);
                            let succ = self.successors(n).into_iter().collect();
                            stack.push((n, succ));
                        }
                    },
                    None => {
                        marks.insert(*node, Mark::Done);
                        stack.pop();
                    }
                }
            }
        }
        None
    }

    /// Unsatisfied preconditions, in id order.
    pub fn unsatisfied(&self) -> Vec<PreconditionId> {
        self.preconditions
            .values()
            .filter(|p| p.status == PreconditionStatus::Unsatisfied)
            .map(|p| p.id)
            .collect()
    }

    /// Satisfied preconditions paired with their satisfying events, in id order.
    pub fn satisfied(&self) -> Vec<(PreconditionId, EventId)> {
        self.preconditions
            .values()
            .filter_map(|p| match p.status {
                PreconditionStatus::SatisfiedBy(e) => Some((p.id, e)),
                _ => None,
            })
            .collect()
    }

    /// Event ids visited by a layered breadth-first search from `start` along
    /// causal links. Empty if `start` is unknown.
    pub fn forward_bfs(&self, start: EventId) -> Vec<EventId> {
        if !self.events.contains_key(&start) {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut seen = BTreeSet::from([start]);
        let mut layer = vec![start];
        while !layer.is_empty() {
            let mut next = Vec::new();
            for &e in &layer {
                out.push(e);
                next.extend(self.successors(e).into_iter().filter(|s| seen.insert(*s)));
            }
            next.sort_by_key(|e| self.events[e].created_seq);
            layer = next;
        }
        out
    }
}
