use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{is_none_answer, EvalError, QAOracle, Story};

/// A story with one sentence swapped for a sentence from another story.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorruptedStory {
    pub story: Story,
    pub position: usize,
}

/// Replaces sentence `position` (never the first) with a seeded-random
/// sentence of `donor` that differs from the original.
pub fn corrupt_story(story: &Story, donor: &Story, position: usize, seed: u64) -> Result<CorruptedStory, EvalError> {
    if donor == story || (donor.id == story.id && donor.sentences == story.sentences) {
        return Err(EvalError::SameDonor);
    }
    if position == 0 || position >= story.len() {
        return Err(EvalError::Position { position, len: story.len() });
    }
    let original = &story.sentences[position];
    let choices: Vec<&String> = donor.sentences.iter().filter(|s| *s != original).collect();
    if choices.is_empty() {
        return Err(EvalError::SameDonor);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = choices[rng.random_range(0..choices.len())].clone();
    let mut out = story.clone();
    out.sentences[position] = pick;
    Ok(CorruptedStory { story: out, position })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    /// Share of clean questions the oracle answered with something.
    pub clean_response_rate: f64,
    /// Share of corrupted sentences the oracle answered with "none".
    pub corrupted_none_rate: f64,
    /// The two rates weighted by their story counts.
    pub accuracy: f64,
    pub clean_stories: usize,
    pub corrupted_stories: usize,
}

impl ValidationSummary {
    pub fn from_rates(clean_rate: f64, clean_stories: usize, none_rate: f64, corrupted_stories: usize) -> Self {
        let total = (clean_stories + corrupted_stories) as f64;
        let accuracy = if total == 0.0 {
            0.0
        } else {
            (clean_rate * clean_stories as f64 + none_rate * corrupted_stories as f64) / total
        };
        ValidationSummary {
            clean_response_rate: clean_rate,
            corrupted_none_rate: none_rate,
            accuracy,
            clean_stories,
            corrupted_stories,
        }
    }
}

/// Checks that the oracle answers on intact stories and refuses on
/// corrupted sentences.
pub fn validate_measure(
    clean: &[Story],
    corrupted: &[CorruptedStory],
    qa: &dyn QAOracle,
) -> Result<ValidationSummary, EvalError> {
    if clean.is_empty() || corrupted.is_empty() {
        return Err(EvalError::EmptySet);
    }
    let (mut answered, mut asked) = (0usize, 0usize);
    for s in clean {
        for i in 1..s.len() {
            asked += 1;
            if !is_none_answer(&qa.ask(&s.sentences, i)?) {
                answered += 1;
            }
        }
    }
    let mut refused = 0usize;
    for c in corrupted {
        if is_none_answer(&qa.ask(&c.story.sentences, c.position)?) {
            refused += 1;
        }
    }
    let clean_rate = if asked == 0 { 0.0 } else { answered as f64 / asked as f64 };
    let none_rate = refused as f64 / corrupted.len() as f64;
    Ok(ValidationSummary::from_rates(clean_rate, clean.len(), none_rate, corrupted.len()))
}
