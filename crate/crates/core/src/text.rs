//! Small text helpers shared by the planner, matchers and evaluation.

/// Collapses runs of whitespace into single spaces and trims the ends.
pub fn normalize_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Whitespace-normalized, lowercased, with trailing sentence punctuation removed.
/// Used as the identity key when comparing generated strings.
pub fn normalize_key(text: &str) -> String {
    let collapsed = normalize_ws(text).to_lowercase();
    collapsed
        .trim_end_matches(['.', '!', '?', ',', ';', ':'])
        .trim_end()
        .to_string()
}

/// Lowercase alphanumeric tokens; everything else is a separator.
pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// Returns true if `word` occurs in `text` as a whole word, ignoring case.
pub fn contains_word(text: &str, word: &str) -> bool {
    let word = word.to_lowercase();
    tokens(text).contains(&word)
}

/// Appends a period unless the sentence already ends in terminal punctuation.
pub fn as_sentence(text: &str) -> String {
    let t = normalize_ws(text);
    if t.ends_with(['.', '!', '?']) {
        t
    } else {
        format!("{t}.")
    }
}

/// First line of a completion with surrounding whitespace and quotes removed.
pub fn first_line(completion: &str) -> String {
    let line = completion
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .unwrap_or("");
    normalize_ws(line.trim_matches(|c| c == '"' || c == '\''))
}

/// Last sentence of the first paragraph of a completion, with its terminal
/// punctuation kept.
pub fn last_sentence(completion: &str) -> Option<String> {
    let para: Vec<&str> = completion
        .trim_start()
        .lines()
        .map(str::trim)
        .take_while(|l| !l.is_empty())
        .collect();
    let para = normalize_ws(&para.join(" "));
    let mut sentences = Vec::new();
    let mut start = 0;
    for (i, c) in para.char_indices() {
        if matches!(c, '.' | '!' | '?') {
            let end = i + c.len_utf8();
            if para[end..].starts_with(' ') || end == para.len() {
                sentences.push(para[start..end].trim());
                start = end;
            }
        }
    }
    if start < para.len() {
        sentences.push(para[start..].trim());
    }
    sentences.into_iter().rfind(|s| !tokens(s).is_empty()).map(str::to_string)
}

/// Strips a leading article ("a", "an", "the") from a noun phrase.
pub fn strip_article(phrase: &str) -> &str {
    let p = phrase.trim();
    for art in ["a ", "an ", "the ", "A ", "An ", "The "] {
        if let Some(rest) = p.strip_prefix(art) {
            return rest.trim();
        }
    }
    p
}
