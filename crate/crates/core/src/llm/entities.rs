//! Recovery of `{"entity", "sentiment", "comment"}` arrays from free-form
//! model output.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::LlmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Positive,
    Negative,
    Neutral,
}

impl Sentiment {
    pub fn value(self) -> f64 {
        match self {
            Sentiment::Positive => 1.0,
            Sentiment::Neutral => 0.0,
            Sentiment::Negative => -1.0,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "positive" => Some(Sentiment::Positive),
            "negative" => Some(Sentiment::Negative),
            "neutral" => Some(Sentiment::Neutral),
            _ => None,
        }
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sentiment::Positive => "positive",
            Sentiment::Negative => "negative",
            Sentiment::Neutral => "neutral",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySentiment {
    pub entity: String,
    pub sentiment: Sentiment,
    #[serde(default)]
    pub comment: String,
}

/// Byte range of the `]` matching the `[` at `start`, skipping brackets
/// inside string literals.
fn matching_bracket(bytes: &[u8], start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            match (escaped, b) {
                (true, _) => escaped = false,
                (false, b'\\') => escaped = true,
                (false, b'"') => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'[' => depth += 1,
            b']' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

fn record_from(value: &Value, index: usize) -> Option<EntitySentiment> {
    let obj = value.as_object()?;
    let entity = obj.get("entity").and_then(Value::as_str).map(str::trim).unwrap_or("");
    if entity.is_empty() {
        log::warn!("record {index}: missing or empty entity, skipped");
        return None;
    }
    let raw = obj.get("sentiment").and_then(Value::as_str).unwrap_or("");
    let Some(sentiment) = Sentiment::parse(raw) else {
        log::warn!("record {index} ({entity}): unknown sentiment '{raw}', skipped");
        return None;
    };
    let comment = obj.get("comment").and_then(Value::as_str).unwrap_or("").to_string();
    Some(EntitySentiment {
        entity: entity.to_string(),
        sentiment,
        comment,
    })
}

enum Scan {
    Found(Vec<EntitySentiment>),
    ArraysWithoutRecords,
    NoArray,
}

fn scan(text: &str) -> Scan {
    let bytes = text.as_bytes();
    let mut saw_array = false;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'[' {
            i += 1;
            continue;
        }
        let Some(end) = matching_bracket(bytes, i) else {
            i += 1;
            continue;
        };
        match serde_json::from_str::<Vec<Value>>(&text[i..=end]) {
            Ok(items) => {
                saw_array = true;
                let records: Vec<EntitySentiment> = items
                    .iter()
                    .enumerate()
                    .filter_map(|(k, v)| record_from(v, k))
                    .collect();
                if !records.is_empty() {
                    return Scan::Found(records);
                }
                i = end + 1;
            }
            // Not JSON; an inner bracket may still hold the array.
            Err(_) => i += 1,
        }
    }
    if saw_array {
        Scan::ArraysWithoutRecords
    } else {
        Scan::NoArray
    }
}

/// Undoes typesetting artefacts: LaTeX-escaped braces and brackets, `\\`
/// line prefixes, and line-wrapping inside string literals.
fn relax(text: &str) -> String {
    let mut s = text.to_string();
    for (from, to) in [
        ("{[}", "["),
        ("{]}", "]"),
        ("{<}", "<"),
        ("{>}", ">"),
        ("\\{", "{"),
        ("\\}", "}"),
        ("\\$", "$"),
        ("\\%", "%"),
        ("\\&", "&"),
        ("\\_", "_"),
    ] {
        s = s.replace(from, to);
    }
    s.lines()
        .map(|line| {
            let t = line.trim_start();
            t.strip_prefix("\\\\").unwrap_or(t).trim()
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Finds the first bracketed array of entity records. A strict pass over the
/// raw text runs first; if it finds nothing usable, a lenient pass repeats
/// the scan after [`relax`]-ing the text. Records with a missing entity or an
/// unknown sentiment are skipped with a warning.
pub fn parse_entity_sentiments(response: &str) -> Result<Vec<EntitySentiment>, LlmError> {
    let strict = scan(response);
    if let Scan::Found(r) = strict {
        return Ok(r);
    }
    match (scan(&relax(response)), strict) {
        (Scan::Found(r), _) => Ok(r),
        (Scan::ArraysWithoutRecords, _) | (_, Scan::ArraysWithoutRecords) => Err(LlmError::NoValidRecords),
        _ => Err(LlmError::NoArray),
    }
}

/// JSON array in the response schema.
pub fn records_to_json(records: &[EntitySentiment]) -> String {
    serde_json::to_string_pretty(records).expect("records serialise")
}

/// Mean of +1/0/−1 per registered entity (case-insensitive); 0 when absent.
pub fn sentiment_features(records: &[EntitySentiment], registry: &[String]) -> Vec<f64> {
    registry
        .iter()
        .map(|name| {
            let key = name.trim().to_lowercase();
            let (sum, n) = records
                .iter()
                .filter(|r| r.entity.to_lowercase() == key)
                .fold((0.0, 0usize), |(s, n), r| (s + r.sentiment.value(), n + 1));
            if n == 0 {
                0.0
            } else {
                sum / n as f64
            }
        })
        .collect()
}
