//! Shared tokenizer.
//!
//! A token is a maximal run of Unicode alphanumeric characters, lowercased.
//! Everything else (including `#` and `@`) is a separator, so hashtags match
//! as plain words.

use std::collections::BTreeSet;

/// Lowercased alphanumeric runs of `text`, in order, duplicates kept.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(|s| s.to_lowercase())
        .collect()
}

/// Distinct tokens of `text`.
pub fn token_set(text: &str) -> BTreeSet<String> {
    tokenize(text).into_iter().collect()
}

/// Normalise a user-supplied term: strip a leading `#`, lowercase, trim.
pub fn normalize_term(term: &str) -> String {
    term.trim().trim_start_matches('#').to_lowercase()
}

/// True iff every term occurs as a whole token of `text` (case-insensitive).
///
/// A term that itself tokenizes into several words requires all of them.
pub fn contains_all_terms<'a, I>(text: &str, terms: I) -> bool
where
    I: IntoIterator<Item = &'a String>,
{
    let tokens = token_set(text);
    terms
        .into_iter()
        .all(|t| tokenize(&normalize_term(t)).iter().all(|w| tokens.contains(w)))
}
