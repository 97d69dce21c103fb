//! The backward-chaining planning loop.

mod trace;

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use trace::{Trace, TraceRecord};

use crate::graph::{
    EventId, EventType, GraphError, PlanGraph, Precondition, PreconditionClass, PreconditionId, PreconditionStatus,
};
use crate::knowledge::{extract_characters, gate_interaction, Keyword, Knowledge, KnowledgeConfig, KnowledgeError};
use crate::similarity::{is_duplicate, match_initial, match_satisfied, same_character, SimilarityError};

/// How multi-character events are swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CharacterSweep {
    /// Every character gets the person-bound classes.
    #[default]
    Full,
    /// Only the first named character does.
    FirstOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    /// Cap on inserted events, goal included.
    pub max_events: usize,
    pub max_backtracks_per_precondition: u32,
    pub single_item_precondition: bool,
    pub enabled_classes: Vec<PreconditionClass>,
    pub character_sweep: CharacterSweep,
    /// Known character names; empty means capitalized-word detection.
    pub characters: Vec<String>,
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            max_events: 64,
            max_backtracks_per_precondition: 3,
            single_item_precondition: true,
            enabled_classes: PreconditionClass::ALL.to_vec(),
            character_sweep: CharacterSweep::Full,
            characters: Vec::new(),
            seed: 0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_events == 0 || self.max_backtracks_per_precondition == 0 {
            return Err("max_events and max_backtracks_per_precondition must be at least 1".into());
        }
        Ok(())
    }

    fn enabled(&self, class: PreconditionClass) -> bool {
        self.enabled_classes.contains(&class)
    }
}

/// A finished or partial planning run.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanReport {
    pub plan: PlanGraph,
    pub trace: Trace,
    /// Events inserted, goal included.
    pub inserted: usize,
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("ending sentence must not be empty")]
    EmptyEnding,
    #[error("invalid planner configuration: {0}")]
    Config(String),
    #[error("event budget of {max_events} exhausted")]
    BudgetExceeded { max_events: usize, partial: Box<PlanReport> },
    #[error("knowledge source failed: {error}")]
    Knowledge { error: KnowledgeError, partial: Box<PlanReport> },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl PlanError {
    pub fn partial(&self) -> Option<&PlanReport> {
        match self {
            PlanError::BudgetExceeded { partial, .. } | PlanError::Knowledge { partial, .. } => Some(partial),
            _ => None,
        }
    }
}

enum StepError {
    Knowledge(KnowledgeError),
    Graph(GraphError),
}

impl From<KnowledgeError> for StepError {
    fn from(e: KnowledgeError) -> Self {
        StepError::Knowledge(e)
    }
}

impl From<SimilarityError> for StepError {
    fn from(e: SimilarityError) -> Self {
        StepError::Knowledge(e.into())
    }
}

impl From<GraphError> for StepError {
    fn from(e: GraphError) -> Self {
        StepError::Graph(e)
    }
}

type Step<T = ()> = Result<T, StepError>;

/// Mutable state of one planning run.
pub struct PlanningSession<'k> {
    pub plan: PlanGraph,
    pub queue: VecDeque<EventId>,
    pub trace: Trace,
    config: PlannerConfig,
    knowledge_config: KnowledgeConfig,
    knowledge: Knowledge<'k>,
    backtracks: BTreeMap<PreconditionId, u32>,
    exclusions: BTreeMap<PreconditionId, Vec<String>>,
    inserted: usize,
    budget_hit: bool,
}

impl<'k> PlanningSession<'k> {
    pub fn new(initial: Vec<String>, config: PlannerConfig, knowledge: Knowledge<'k>) -> Self {
        let mut knowledge_config = knowledge.config.clone();
        knowledge_config.single_item_precondition = config.single_item_precondition;
        PlanningSession {
            plan: PlanGraph::new(initial),
            queue: VecDeque::new(),
            trace: Trace::default(),
            config,
            knowledge_config,
            knowledge,
            backtracks: BTreeMap::new(),
            exclusions: BTreeMap::new(),
            inserted: 0,
            budget_hit: false,
        }
    }

    fn kn(&self) -> Knowledge<'_> {
        Knowledge { config: &self.knowledge_config, ..self.knowledge }
    }

    fn characters_of(&self, text: &str) -> Vec<String> {
        extract_characters(text, Some(&self.config.characters))
    }

    /// The satisfied preconditions with their satisfying events.
    pub fn satisfied_log(&self) -> Vec<(&Precondition, EventId)> {
        self.plan
            .satisfied()
            .into_iter()
            .map(|(p, e)| (self.plan.precondition(p).expect("satisfied precondition exists"), e))
            .collect()
    }

    fn report(&self) -> PlanReport {
        PlanReport { plan: self.plan.clone(), trace: self.trace.clone(), inserted: self.inserted }
    }

    /// Existing event `text` duplicates: same character set and similar
    /// enough at the event threshold.
    fn find_phrasing_match(&self, text: &str, characters: &[String]) -> Step<Option<EventId>> {
        let same_cast = |other: &[String]| {
            other.len() == characters.len() && other.iter().all(|o| characters.iter().any(|c| same_character(c, o)))
        };
        for e in self.plan.events() {
            if !same_cast(&e.characters) {
                continue;
            }
            for p in &e.phrasings {
                if is_duplicate(&p.text, text, None, self.knowledge.embedder, self.knowledge.similarity)? {
                    return Ok(Some(e.id));
                }
            }
        }
        Ok(None)
    }

    /// Returns the event `text` folds into, recording it as another phrasing,
    /// or inserts a new event. The flag is true for a new event.
    pub fn register_phrasing(
        &mut self,
        text: &str,
        class: EventType,
        perplexity: Option<f64>,
    ) -> Result<(EventId, bool), PlanError> {
        self.register(text, class, perplexity).map_err(|e| self.fail(e))
    }

    fn register(&mut self, text: &str, class: EventType, perplexity: Option<f64>) -> Step<(EventId, bool)> {
        let characters = self.characters_of(text);
        if let Some(id) = self.find_phrasing_match(text, &characters)? {
            self.plan.add_phrasing(id, text, perplexity)?;
            return Ok((id, false));
        }
        let id = self.plan.add_event_scored(text, class, characters, perplexity)?;
        self.inserted += 1;
        Ok((id, true))
    }

    fn fail(&self, e: StepError) -> PlanError {
        match e {
            StepError::Graph(g) => PlanError::Graph(g),
            StepError::Knowledge(error) => PlanError::Knowledge { error, partial: Box::new(self.report()) },
        }
    }

    fn dangle(&mut self, pid: PreconditionId, initial: bool, reason: &str) -> Step {
        let status = if initial { PreconditionStatus::DanglingInitial } else { PreconditionStatus::DanglingHeuristic };
        self.plan.mark_dangling(pid, status)?;
        let text = self.plan.precondition(pid).map(|p| p.text.clone()).unwrap_or_default();
        self.trace.push(TraceRecord::Dangling { precondition: pid, text, initial, reason: reason.to_string() });
        Ok(())
    }

    fn context_excluding_self(&self, event: EventId) -> Vec<String> {
        self.plan.context_of(event).into_iter().skip(1).collect()
    }

    /// Counts a failed attempt for `pid`; true once its retries are used up.
    fn spend_backtrack(&mut self, pid: PreconditionId, rejected: &str) -> bool {
        self.exclusions.entry(pid).or_default().push(rejected.to_string());
        let n = self.backtracks.entry(pid).or_insert(0);
        *n += 1;
        *n > self.config.max_backtracks_per_precondition
    }

    fn exhaust(&mut self, pid: PreconditionId) -> Step {
        let text = self.plan.precondition(pid).map(|p| p.text.clone()).unwrap_or_default();
        self.trace.push(TraceRecord::Exhausted { precondition: pid, text });
        self.dangle(pid, false, "generation exhausted")
    }

    /// Dangles, reuses or generates for one unsatisfied precondition.
    fn satisfy(&mut self, pid: PreconditionId) -> Step {
        let p = self.plan.precondition(pid).cloned().ok_or(GraphError::UnknownPrecondition(pid))?;
        let k = self.knowledge;
        if match_initial(&p, self.plan.initial_conditions(), k.embedder, k.similarity)? {
            return self.dangle(pid, true, "initial condition");
        }
        let reuse = match_satisfied(&p, &self.satisfied_log(), k.embedder, k.similarity)?;
        if let Some(src) = reuse {
            if self.plan.would_cycle(src, p.owner) {
                self.trace.push(TraceRecord::ReuseRejected { precondition: pid, event: src });
            } else {
                self.plan.add_link(src, pid)?;
                self.trace.push(TraceRecord::Reuse { precondition: pid, event: src });
                return Ok(());
            }
        }
        self.generate(&p)
    }

    fn generate(&mut self, p: &Precondition) -> Step {
        let pid = p.id;
        loop {
            let owner_text = match self.plan.event(p.owner) {
                Some(e) => e.text().to_string(),
                None => return Ok(()),
            };
            let context = self.plan.context_of(p.owner);
            let exclude = self.exclusions.get(&pid).cloned().unwrap_or_default();
            let generated = match self.kn().infer_event_for(p, &owner_text, &context, &exclude) {
                Ok(g) => g,
                Err(KnowledgeError::GenerationExhausted(_)) => return self.exhaust(pid),
                Err(e) => return Err(e.into()),
            };
            let characters = self.characters_of(&generated.text);
            match self.find_phrasing_match(&generated.text, &characters)? {
                Some(existing) if self.plan.would_cycle(existing, p.owner) => {
                    self.trace.push(TraceRecord::Cycle {
                        precondition: Some(pid),
                        event: Some(existing),
                        text: generated.text.clone(),
                    });
                    if self.spend_backtrack(pid, &generated.text) {
                        return self.exhaust(pid);
                    }
                }
                Some(existing) => {
                    self.plan.add_phrasing(existing, &generated.text, generated.perplexity)?;
                    self.plan.add_link(existing, pid)?;
                    self.trace.push(TraceRecord::Generated {
                        precondition: pid,
                        event: existing,
                        text: generated.text,
                        merged: true,
                    });
                    return Ok(());
                }
                None => {
                    if self.inserted >= self.config.max_events {
                        self.budget_hit = true;
                        return self.dangle(pid, false, "event budget exhausted");
                    }
                    let (id, _) = self.register(&generated.text, p.class.into(), generated.perplexity)?;
                    self.plan.add_link(id, pid)?;
                    self.queue.push_back(id);
                    self.trace.push(TraceRecord::Generated {
                        precondition: pid,
                        event: id,
                        text: generated.text,
                        merged: false,
                    });
                    return Ok(());
                }
            }
        }
    }

    /// Conditions carried by causal links on the way from `event` to the goal.
    fn downstream_conditions(&self, event: EventId) -> Vec<Precondition> {
        let mut sources = self.plan.descendants(event);
        sources.insert(event);
        self.plan
            .links()
            .iter()
            .filter(|l| sources.contains(&l.source))
            .filter_map(|l| self.plan.precondition(l.condition).cloned())
            .collect()
    }

    fn class_gates(&mut self, event: EventId, text: &str, characters: &[String]) -> Step<Vec<PreconditionClass>> {
        let mut classes = Vec::new();
        for class in PreconditionClass::ALL {
            if !self.config.enabled(class) {
                continue;
            }
            let (gate, passed) = match class {
                PreconditionClass::InteractionWithOthers => ("two_names", gate_interaction(text, characters)),
                PreconditionClass::How => ("through", self.kn().gate_expandable(text, Keyword::Through)?),
                PreconditionClass::Reason => ("because", self.kn().gate_expandable(text, Keyword::Because)?),
                _ => {
                    classes.push(class);
                    continue;
                }
            };
            self.trace.push(TraceRecord::Gate { event, class, gate: gate.to_string(), passed });
            if passed {
                classes.push(class);
            }
        }
        Ok(classes)
    }

    /// Infers and satisfies the preconditions of one popped event.
    pub fn expand_event(&mut self, event: EventId) -> Result<(), PlanError> {
        self.expand(event).map_err(|e| self.fail(e))
    }

    fn expand(&mut self, event: EventId) -> Step {
        let Some(node) = self.plan.event(event) else { return Ok(()) };
        let text = node.text().to_string();
        let characters = node.characters.clone();
        self.trace.push(TraceRecord::Popped { event, text: text.clone() });
        if characters.is_empty() {
            return Ok(());
        }
        let context = self.context_excluding_self(event);
        let gated = self.class_gates(event, &text, &characters)?;
        let mut drafts = Vec::new();
        for (i, character) in characters.iter().enumerate() {
            if i > 0 && self.config.character_sweep == CharacterSweep::FirstOnly {
                break;
            }
            let classes: Vec<PreconditionClass> =
                gated.iter().copied().filter(|c| !c.is_copied() || i == 0).collect();
            let inference = self.kn().infer_preconditions(&text, &characters, &context, character, &classes)?;
            for r in inference.records {
                self.trace.push(TraceRecord::Candidates {
                    event,
                    character: r.character,
                    class: r.class,
                    candidates: r.candidates,
                    outcome: r.outcome,
                });
            }
            drafts.extend(inference.drafts);
        }

        let downstream = self.downstream_conditions(event);
        let k = self.knowledge;
        for d in &drafts {
            for c in &downstream {
                if c.class == d.class
                    && same_character(&c.character, &d.character)
                    && is_duplicate(&c.text, &d.text, Some(d.class), k.embedder, k.similarity)?
                {
                    self.trace.push(TraceRecord::Cycle { precondition: Some(c.id), event: Some(event), text: d.text.clone() });
                    return self.handle_cycle(event);
                }
            }
        }

        for d in drafts {
            let pid = self.plan.add_precondition(event, d.class, &d.text, &d.character)?;
            self.satisfy(pid)?;
        }
        Ok(())
    }

    /// Drops `event` from the plan and re-satisfies whatever it used to
    /// satisfy, never with the same text again.
    fn handle_cycle(&mut self, event: EventId) -> Step {
        let texts: Vec<String> = match self.plan.event(event) {
            Some(e) => e.phrasings.iter().map(|p| p.text.clone()).collect(),
            None => return Ok(()),
        };
        let mut reset = self.plan.remove_event(event)?;
        reset.extend(self.plan.prune_orphans());
        reset.sort();
        reset.dedup();
        for pid in reset {
            if self.plan.precondition(pid).map(|p| p.status) != Some(PreconditionStatus::Unsatisfied) {
                continue;
            }
            let mut exhausted = false;
            for t in &texts {
                exhausted |= self.spend_backtrack(pid, t);
            }
            if exhausted {
                self.exhaust(pid)?;
            } else {
                self.satisfy(pid)?;
            }
        }
        Ok(())
    }

    /// Pops and expands until the queue is empty.
    pub fn run(mut self) -> Result<PlanReport, PlanError> {
        loop {
            while let Some(e) = self.queue.pop_front() {
                self.expand_event(e)?;
            }
            let pending = self.plan.unsatisfied();
            if pending.is_empty() {
                break;
            }
            for pid in pending {
                self.satisfy(pid).map_err(|e| self.fail(e))?;
            }
        }
        if self.budget_hit {
            return Err(PlanError::BudgetExceeded { max_events: self.config.max_events, partial: Box::new(self.report()) });
        }
        Ok(self.report())
    }
}

/// Builds a plan for `ending` given the initial conditions.
pub fn plan(
    ending: &str,
    initial: &[String],
    config: &PlannerConfig,
    knowledge: Knowledge<'_>,
) -> Result<PlanReport, PlanError> {
    if ending.trim().is_empty() {
        return Err(PlanError::EmptyEnding);
    }
    config.validate().map_err(PlanError::Config)?;
    let mut session = PlanningSession::new(initial.to_vec(), config.clone(), knowledge);
    let characters = session.characters_of(ending);
    let goal = session.plan.add_event(ending, EventType::Goal, characters)?;
    session.inserted += 1;
    session.queue.push_back(goal);
    session.run()
}
