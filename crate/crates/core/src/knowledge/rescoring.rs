//! Candidate sets built from sampled completions, frequency filtering and
//! domain-conditional PMI rescoring.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::text::normalize_ws;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
    /// log P(y | x, domain)
    pub cond_logprob: f64,
    /// log P(y | domain)
    pub domain_logprob: f64,
    pub count: u32,
}

impl Candidate {
    pub fn new(text: impl Into<String>, count: u32) -> Self {
        Candidate { text: text.into(), cond_logprob: 0.0, domain_logprob: 0.0, count }
    }

    pub fn scored(text: impl Into<String>, cond_logprob: f64, domain_logprob: f64, count: u32) -> Self {
        Candidate { text: text.into(), cond_logprob, domain_logprob, count }
    }

    /// log PMI_DC = log P(y|x,domain) - log P(y|domain).
    pub fn pmi(&self) -> f64 {
        self.cond_logprob - self.domain_logprob
    }
}

/// Distinct candidates (after whitespace normalization) with their counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub items: Vec<Candidate>,
}

impl CandidateSet {
    /// Counts raw samples, keeping the first surface form of each distinct
    /// string. Empty samples are dropped.
    pub fn from_samples<I, S>(samples: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = CandidateSet::default();
        for s in samples {
            let text = normalize_ws(s.as_ref());
            if text.is_empty() {
                continue;
            }
            match set.items.iter_mut().find(|c| c.text == text) {
                Some(c) => c.count += 1,
                None => set.items.push(Candidate::new(text, 1)),
            }
        }
        set
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }
}

/// Drops candidates seen fewer than `min_count` times. If that would empty
/// a non-empty set, the most frequent candidate (lexicographically first on
/// ties) is kept instead.
pub fn frequency_filter(cands: &CandidateSet, min_count: u32) -> CandidateSet {
    let kept: Vec<Candidate> = cands.items.iter().filter(|c| c.count >= min_count).cloned().collect();
    if !kept.is_empty() || cands.is_empty() {
        return CandidateSet { items: kept };
    }
    let best = cands
        .items
        .iter()
        .min_by(|a, b| b.count.cmp(&a.count).then_with(|| a.text.cmp(&b.text)))
        .cloned()
        .expect("non-empty");
    CandidateSet { items: vec![best] }
}

/// Ranking used by rescoring: higher PMI, then higher count, then
/// lexicographically smaller text.
fn pmi_order(a: &Candidate, b: &Candidate) -> Ordering {
    b.pmi()
        .partial_cmp(&a.pmi())
        .unwrap_or(Ordering::Equal)
        .then_with(|| b.count.cmp(&a.count))
        .then_with(|| a.text.cmp(&b.text))
}

/// Candidates sorted best-first by [`pmi_dc_select`]'s rule.
pub fn pmi_dc_rank(cands: &CandidateSet) -> Vec<&Candidate> {
    let mut v: Vec<&Candidate> = cands.items.iter().collect();
    v.sort_by(|a, b| pmi_order(a, b));
    v
}

/// Argmax of log P(y|x,domain) - log P(y|domain). `None` for an empty set.
pub fn pmi_dc_select(cands: &CandidateSet) -> Option<&Candidate> {
    cands.items.iter().min_by(|a, b| pmi_order(a, b))
}

/// Highest count, lexicographically first on ties.
pub fn most_frequent(cands: &CandidateSet) -> Option<&Candidate> {
    cands
        .items
        .iter()
        .min_by(|a, b| b.count.cmp(&a.count).then_with(|| a.text.cmp(&b.text)))
}
