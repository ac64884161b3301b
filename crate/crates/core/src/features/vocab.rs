use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Tweet};
use crate::text;

pub const UNKNOWN: &str = "<unk>";

/// Token vocabulary. Id 0 is reserved for unknown tokens and padding; the
/// remaining ids are assigned by descending frequency, then lexicographically.
/// Usernames are stored with an `@` prefix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    tokens: Vec<String>,
    counts: Vec<u64>,
    #[serde(skip)]
    index: HashMap<String, u32>,
    pub min_freq: u64,
}

impl Vocab {
    fn from_parts(tokens: Vec<String>, counts: Vec<u64>, min_freq: u64) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocab {
            tokens,
            counts,
            index,
            min_freq,
        }
    }

    /// Restores the lookup index after deserialisation.
    pub fn reindex(&mut self) {
        self.index = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 1
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(0)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts.get(id as usize).copied().unwrap_or(0)
    }

    pub fn is_username(&self, id: u32) -> bool {
        id != 0 && self.token(id).is_some_and(|t| t.starts_with('@'))
    }

    /// Maps nonzero ids back to tokens, skipping padding and unknowns.
    pub fn decode(&self, ids: &[u32]) -> Vec<String> {
        ids.iter()
            .filter(|&&i| i != 0)
            .filter_map(|&i| self.token(i).map(String::from))
            .collect()
    }
}

pub fn username_token(name: &str) -> String {
    format!("@{name}")
}

pub fn build_vocab(corpus: &Corpus, min_freq: u64, include_usernames: bool) -> Vocab {
    let min_freq = min_freq.max(1);
    let mut freq: HashMap<String, u64> = HashMap::new();
    for t in corpus {
        for w in text::tokenize(&t.text) {
            *freq.entry(w).or_default() += 1;
        }
        if include_usernames {
            for r in &t.retweeters {
                *freq.entry(username_token(r)).or_default() += 1;
            }
        }
    }
    let mut kept: Vec<(String, u64)> = freq.into_iter().filter(|(_, c)| *c >= min_freq).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut tokens = vec![UNKNOWN.to_string()];
    let mut counts = vec![0];
    for (t, c) in kept {
        tokens.push(t);
        counts.push(c);
    }
    Vocab::from_parts(tokens, counts, min_freq)
}

fn pad(mut ids: Vec<u32>, len: usize) -> Vec<u32> {
    ids.truncate(len);
    ids.resize(len, 0);
    ids
}

/// Text ids and mixed (text then `@retweeter`) ids, each truncated or
/// zero-padded to its configured length. Out-of-vocabulary tokens map to 0.
pub fn encode(tweet: &Tweet, vocab: &Vocab, text_len: usize, mixed_len: usize) -> (Vec<u32>, Vec<u32>) {
    let words: Vec<u32> = text::tokenize(&tweet.text).iter().map(|w| vocab.id(w)).collect();
    let mut mixed = words.clone();
    mixed.extend(tweet.retweeters.iter().map(|r| vocab.id(&username_token(r))));
    (pad(words, text_len), pad(mixed, mixed_len))
}
