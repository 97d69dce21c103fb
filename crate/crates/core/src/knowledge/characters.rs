//! Heuristic extraction of character names, items and locations from event
//! and precondition sentences.

use crate::text::strip_article;

const STOP_WORDS: &[&str] = &[
    "The", "A", "An", "He", "She", "They", "It", "We", "I", "You", "His", "Her", "Their", "Its", "Our", "My",
    "Your", "This", "That", "These", "Those", "Then", "After", "Before", "When", "While", "One", "Once", "Finally",
    "Suddenly", "Later", "Yesterday", "Today", "Tomorrow", "There", "Everyone", "Someone", "Nobody", "Prior",
    "Answer", "Hint", "Context", "Sentence", "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday",
    "Sunday", "January", "February", "March", "April", "May", "June", "July", "August", "September", "October",
    "November", "December",
];

/// Strips surrounding punctuation and a trailing possessive from a word.
fn bare_word(word: &str) -> &str {
    let w = word.trim_matches(|c: char| !c.is_alphanumeric() && c != '\'' && c != '’');
    let w = w
        .strip_suffix("'s")
        .or_else(|| w.strip_suffix("’s"))
        .or_else(|| w.strip_suffix('\''))
        .or_else(|| w.strip_suffix('’'))
        .unwrap_or(w);
    w.trim_matches(|c: char| !c.is_alphanumeric())
}

fn looks_like_name(word: &str) -> bool {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) if c.is_uppercase() => chars.all(|c| c.is_alphabetic() || c == '-'),
        _ => false,
    }
}

/// Distinct character names in order of first appearance. With a non-empty
/// lexicon only lexicon names are reported; otherwise capitalized words that
/// are not in a small stop-list count as names. Possessives are stripped.
pub fn extract_characters(text: &str, lexicon: Option<&[String]>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut push = |name: &str| {
        if !out.iter().any(|n| n == name) {
            out.push(name.to_string());
        }
    };
    match lexicon {
        Some(names) if !names.is_empty() => {
            for word in text.split_whitespace() {
                let w = bare_word(word);
                if let Some(n) = names.iter().find(|n| n.eq_ignore_ascii_case(w)) {
                    push(n);
                }
            }
        }
        _ => {
            for word in text.split_whitespace() {
                let w = bare_word(word);
                if looks_like_name(w) && !STOP_WORDS.contains(&w) {
                    push(w);
                }
            }
        }
    }
    out
}

/// The event with its leading subject removed, used to fill `[Action]`.
pub fn action_phrase(event: &str, person: &str) -> String {
    let e = crate::text::normalize_ws(event);
    let e = e.trim_end_matches(['.', '!', '?']);
    match e.split_once(' ') {
        Some((first, rest)) if bare_word(first).eq_ignore_ascii_case(person) => rest.to_string(),
        _ => e.to_string(),
    }
}

const PHRASE_BREAKS: &[&str] = &["from", "at", "to", "in", "with", "on", "for", "of", "and", "because", "through"];

/// Location tail of an event: the phrase after the last "at", "to" or "in".
pub fn location_hint(event: &str) -> Option<String> {
    let words: Vec<&str> = event.split_whitespace().collect();
    let pos = words.iter().rposition(|w| matches!(w.to_lowercase().as_str(), "at" | "to" | "in" | "from"))?;
    let tail: Vec<&str> = words[pos + 1..].to_vec();
    let phrase = tail.join(" ");
    let phrase = phrase.trim_end_matches(['.', '!', '?', ',']).trim();
    if phrase.is_empty() || tail.first().is_some_and(|w| matches!(w.to_lowercase().as_str(), "get" | "go" | "be")) {
        None
    } else {
        Some(phrase.to_string())
    }
}

/// First object noun phrase in an event: the words following a determiner up
/// to the next preposition.
pub fn item_in_event(event: &str) -> Option<String> {
    let words: Vec<&str> = event.split_whitespace().collect();
    let start = words
        .iter()
        .position(|w| matches!(w.to_lowercase().as_str(), "the" | "a" | "an" | "his" | "her" | "their"))?;
    let phrase: Vec<&str> = words[start + 1..]
        .iter()
        .take_while(|w| !PHRASE_BREAKS.contains(&w.to_lowercase().as_str()))
        .map(|w| w.trim_end_matches(['.', '!', '?', ',']))
        .collect();
    if phrase.is_empty() {
        None
    } else {
        Some(phrase.join(" "))
    }
}

/// The item named by an item-need precondition such as "Sally has a gun".
pub fn item_in_precondition(text: &str) -> String {
    let t = text.trim().trim_end_matches(['.', '!', '?']);
    for marker in [" must have ", " needs ", " has ", " have "] {
        if let Some((_, rest)) = t.split_once(marker) {
            return rest.trim().to_string();
        }
    }
    t.to_string()
}

/// The place named by a location precondition such as "John is at John's home".
pub fn location_in_precondition(text: &str) -> String {
    let t = text.trim().trim_end_matches(['.', '!', '?']);
    for marker in [" is at ", " is in ", " at ", " in "] {
        if let Some((_, rest)) = t.split_once(marker) {
            return rest.trim().to_string();
        }
    }
    t.to_string()
}

/// Item phrase without its article, e.g. "a gun" becomes "gun".
pub fn bare_item(phrase: &str) -> String {
    strip_article(phrase).to_string()
}
