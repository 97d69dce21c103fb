use serde::{Deserialize, Serialize};

use crate::graph::{EventId, PreconditionClass, PreconditionId};
use crate::knowledge::{Candidate, ClassOutcome};

/// One planner decision. Serialized one per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum TraceRecord {
    Popped {
        event: EventId,
        text: String,
    },
    Gate {
        event: EventId,
        class: PreconditionClass,
        gate: String,
        passed: bool,
    },
    Candidates {
        event: EventId,
        character: String,
        class: PreconditionClass,
        candidates: Vec<Candidate>,
        outcome: ClassOutcome,
    },
    Dangling {
        precondition: PreconditionId,
        text: String,
        initial: bool,
        reason: String,
    },
    Reuse {
        precondition: PreconditionId,
        event: EventId,
    },
    ReuseRejected {
        precondition: PreconditionId,
        event: EventId,
    },
    Generated {
        precondition: PreconditionId,
        event: EventId,
        text: String,
        merged: bool,
    },
    Cycle {
        precondition: Option<PreconditionId>,
        event: Option<EventId>,
        text: String,
    },
    Exhausted {
        precondition: PreconditionId,
        text: String,
    },
}

impl TraceRecord {
    pub fn kind(&self) -> &'static str {
        match self {
            TraceRecord::Popped { .. } => "popped",
            TraceRecord::Gate { .. } => "gate",
            TraceRecord::Candidates { .. } => "candidates",
            TraceRecord::Dangling { .. } => "dangling",
            TraceRecord::Reuse { .. } => "reuse",
            TraceRecord::ReuseRejected { .. } => "reuse_rejected",
            TraceRecord::Generated { .. } => "generated",
            TraceRecord::Cycle { .. } => "cycle",
            TraceRecord::Exhausted { .. } => "exhausted",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn push(&mut self, r: TraceRecord) {
        tracing::debug!(record = r.kind(), "trace");
        self.records.push(r);
    }

    pub fn count(&self, kind: &str) -> usize {
        self.records.iter().filter(|r| r.kind() == kind).count()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("trace records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(Trace { records })
    }
}
