//! Tweet corpora: loading, filtering, labeling and stratified splitting.
//!
//! A [`Corpus`] is immutable once built and guarantees unique, nonempty tweet
//! ids. Every other stage consumes it read-only.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("duplicate tweet id `{0}`")]
    DuplicateId(String),
    #[error("invalid tweet `{id}`: {reason}")]
    InvalidTweet { id: String, reason: String },
    #[error("tweet `{0}` has no label")]
    Unlabeled(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown corpus format `{0}` (expected jsonl or csv)")]
    UnknownFormat(String),
}

/// Binary class of a tweet: genuine (0) or fake/manipulative (1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Label {
    Genuine,
    Fake,
}

impl Label {
    pub fn as_f64(self) -> f64 {
        match self {
            Label::Genuine => 0.0,
            Label::Fake => 1.0,
        }
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(Label::Genuine),
            1 => Ok(Label::Fake),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        match l {
            Label::Genuine => 0,
            Label::Fake => 1,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", u8::from(*self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tweet {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub author: String,
    #[serde(default)]
    pub retweeters: Vec<String>,
    #[serde(default)]
    pub hashtags: Vec<String>,
    /// Seconds since the Unix epoch, UTC.
    #[serde(default)]
    pub timestamp: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

impl Tweet {
    fn normalize(mut self) -> Self {
        self.hashtags = self.hashtags.iter().map(|h| text::normalize_term(h)).collect();
        self
    }

    fn validate(&self) -> Result<(), CorpusError> {
        if self.id.is_empty() {
            return Err(CorpusError::InvalidTweet {
                id: self.id.clone(),
                reason: "empty id".into(),
            });
        }
        if self.retweeters.iter().any(|r| r.is_empty()) {
            return Err(CorpusError::InvalidTweet {
                id: self.id.clone(),
                reason: "empty retweeter username".into(),
            });
        }
        Ok(())
    }
}

/// An ordered collection of tweets with unique ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    tweets: Vec<Tweet>,
}

impl Corpus {
    /// Validates ids and retweeter names; hashtags are lowercased.
    pub fn new(tweets: Vec<Tweet>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(tweets.len());
        let mut out = Vec::with_capacity(tweets.len());
        for t in tweets {
            let t = t.normalize();
            t.validate()?;
            if !seen.insert(t.id.clone()) {
                return Err(CorpusError::DuplicateId(t.id));
            }
            out.push(t);
        }
        Ok(Corpus { tweets: out })
    }

    /// Subset constructor for tweets already known to be valid and unique.
    fn from_valid(tweets: Vec<Tweet>) -> Self {
        Corpus { tweets }
    }

    pub fn tweets(&self) -> &[Tweet] {
        &self.tweets
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Tweet> {
        self.tweets.iter()
    }

    pub fn into_tweets(self) -> Vec<Tweet> {
        self.tweets
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Tweet;
    type IntoIter = std::slice::Iter<'a, Tweet>;

    fn into_iter(self) -> Self::IntoIter {
        self.tweets.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl FromStr for CorpusFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(CorpusError::UnknownFormat(other.to_string())),
        }
    }
}

/// Header names used when reading CSV. Defaults to the canonical
/// `id,text,author,retweeters,hashtags,timestamp,label` layout; override to
/// adapt flat files with other column names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvColumns {
    pub id: String,
    pub text: String,
    pub author: String,
    pub retweeters: String,
    pub hashtags: String,
    pub timestamp: String,
    pub label: String,
    /// Separator inside the list-valued columns.
    pub list_separator: char,
}

impl Default for CsvColumns {
    fn default() -> Self {
        CsvColumns {
            id: "id".into(),
            text: "text".into(),
            author: "author".into(),
            retweeters: "retweeters".into(),
            hashtags: "hashtags".into(),
            timestamp: "timestamp".into(),
            label: "label".into(),
            list_separator: ';',
        }
    }
}

/// Key of the reproducibility header line that may open a JSONL corpus.
pub const META_KEY: &str = "_meta";

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    match format {
        CorpusFormat::Jsonl => read_jsonl(BufReader::new(file)),
        CorpusFormat::Csv => read_csv(file, &CsvColumns::default()),
    }
}

/// Parses one tweet per nonempty line. A line holding a single-key object
/// `{"_meta": ...}` is a provenance header and is skipped.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Corpus, CorpusError> {
    let mut tweets = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| CorpusError::Malformed {
            line: lineno,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: lineno,
            reason: e.to_string(),
        })?;
        if value.as_object().is_some_and(|o| o.contains_key(META_KEY)) {
            continue;
        }
        let tweet: Tweet = serde_json::from_value(value).map_err(|e| CorpusError::Malformed {
            line: lineno,
            reason: e.to_string(),
        })?;
        tweets.push(tweet);
    }
    Corpus::new(tweets)
}

pub fn read_csv<R: Read>(reader: R, columns: &CsvColumns) -> Result<Corpus, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CorpusError::Malformed {
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let id_col = col(&columns.id).ok_or_else(|| CorpusError::Malformed {
        line: 1,
        reason: format!("missing column `{}`", columns.id),
    })?;
    let text_col = col(&columns.text).ok_or_else(|| CorpusError::Malformed {
        line: 1,
        reason: format!("missing column `{}`", columns.text),
    })?;
    let author_col = col(&columns.author);
    let rt_col = col(&columns.retweeters);
    let tag_col = col(&columns.hashtags);
    let ts_col = col(&columns.timestamp);
    let label_col = col(&columns.label);

    let split_list = |s: &str| -> Vec<String> {
        s.split(columns.list_separator)
            .map(str::trim)
            .filter(|x| !x.is_empty())
            .map(String::from)
            .collect()
    };

    let mut tweets = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        // header is line 1
        let lineno = i + 2;
        let rec = rec.map_err(|e| CorpusError::Malformed {
            line: lineno,
            reason: e.to_string(),
        })?;
        let field = |c: Option<usize>| c.and_then(|c| rec.get(c)).unwrap_or("");
        let timestamp = match field(ts_col).trim() {
            "" => 0,
            s => s.parse::<u64>().map_err(|e| CorpusError::Malformed {
                line: lineno,
                reason: format!("timestamp `{s}`: {e}"),
            })?,
        };
        let label = match field(label_col).trim() {
            "" => None,
            "0" => Some(Label::Genuine),
            "1" => Some(Label::Fake),
            s => {
                return Err(CorpusError::Malformed {
                    line: lineno,
                    reason: format!("label `{s}` is not 0 or 1"),
                })
            }
        };
        tweets.push(Tweet {
            id: field(Some(id_col)).to_string(),
            text: field(Some(text_col)).to_string(),
            author: field(author_col).to_string(),
            retweeters: split_list(field(rt_col)),
            hashtags: split_list(field(tag_col)),
            timestamp,
            label,
        });
    }
    Corpus::new(tweets)
}

/// Writes one JSON object per line, optionally preceded by a `_meta` header.
pub fn write_jsonl<W: Write>(corpus: &Corpus, mut out: W, meta: Option<&serde_json::Value>) -> std::io::Result<()> {
    if let Some(meta) = meta {
        let header = serde_json::json!({ META_KEY: meta });
        writeln!(out, "{header}")?;
    }
    for t in corpus {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusFilter {
    pub min_retweets: usize,
    date_range: Option<(u64, u64)>,
    required_terms: BTreeSet<String>,
}

impl CorpusFilter {
    pub fn new(
        min_retweets: usize,
        date_range: Option<(u64, u64)>,
        required_terms: impl IntoIterator<Item = String>,
    ) -> Result<Self, CorpusError> {
        if let Some((start, end)) = date_range {
            if start > end {
                return Err(CorpusError::InvalidParameter(format!(
                    "date range start {start} is after end {end}"
                )));
            }
        }
        let required_terms = required_terms
            .into_iter()
            .map(|t| text::normalize_term(&t))
            .filter(|t| !t.is_empty())
            .collect();
        Ok(CorpusFilter {
            min_retweets,
            date_range,
            required_terms,
        })
    }

    pub fn date_range(&self) -> Option<(u64, u64)> {
        self.date_range
    }

    pub fn required_terms(&self) -> &BTreeSet<String> {
        &self.required_terms
    }

    pub fn accepts(&self, t: &Tweet) -> bool {
        if t.retweeters.len() < self.min_retweets {
            return false;
        }
        if let Some((start, end)) = self.date_range {
            if t.timestamp < start || t.timestamp > end {
                return false;
            }
        }
        self.required_terms.is_empty() || text::contains_all_terms(&t.text, &self.required_terms)
    }
}

/// Keeps the tweets accepted by `filter`, in their original order.
pub fn apply_filter(corpus: &Corpus, filter: &CorpusFilter) -> Corpus {
    Corpus::from_valid(corpus.iter().filter(|t| filter.accepts(t)).cloned().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    ByTweetId,
    ByAuthor,
    ByHashtag,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRule {
    pub kind: RuleKind,
    pub value: String,
    pub label: Label,
}

impl LabelRule {
    pub fn new(kind: RuleKind, value: impl Into<String>, label: Label) -> Result<Self, CorpusError> {
        let value = value.into();
        if value.trim().is_empty() {
            return Err(CorpusError::InvalidParameter("label rule value is empty".into()));
        }
        Ok(LabelRule { kind, value, label })
    }

    pub fn matches(&self, t: &Tweet) -> bool {
        match self.kind {
            RuleKind::ByTweetId => t.id == self.value,
            RuleKind::ByAuthor => t.author == self.value,
            RuleKind::ByHashtag => {
                let tag = text::normalize_term(&self.value);
                t.hashtags.contains(&tag)
            }
        }
    }
}

/// Applies rules in order; the last matching rule determines the label.
pub fn apply_labels(corpus: &Corpus, rules: &[LabelRule]) -> Corpus {
    let tweets = corpus
        .iter()
        .map(|t| {
            let mut t = t.clone();
            if let Some(rule) = rules.iter().rev().find(|r| r.matches(&t)) {
                t.label = Some(rule.label);
            }
            t
        })
        .collect();
    Corpus::from_valid(tweets)
}

/// Stratified, seeded train/validation split.
///
/// The validation set holds `round(valid_fraction * N)` tweets; per-label
/// counts are allocated by largest remainder so each stays within one tweet
/// of its proportional share. Both halves keep the corpus order.
pub fn split(corpus: &Corpus, valid_fraction: f64, seed: u64) -> Result<(Corpus, Corpus), CorpusError> {
    if !(0.0..=1.0).contains(&valid_fraction) {
        return Err(CorpusError::InvalidParameter(format!(
            "valid_fraction {valid_fraction} outside [0, 1]"
        )));
    }
    let mut by_label: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
    for (i, t) in corpus.iter().enumerate() {
        let label = t.label.ok_or_else(|| CorpusError::Unlabeled(t.id.clone()))?;
        by_label.entry(label).or_default().push(i);
    }

    let n = corpus.len();
    let n_valid = (valid_fraction * n as f64).round() as usize;
    let shares: Vec<(Label, f64)> = by_label
        .iter()
        .map(|(l, idx)| (*l, valid_fraction * idx.len() as f64))
        .collect();
    let mut alloc: BTreeMap<Label, usize> = shares.iter().map(|(l, s)| (*l, s.floor() as usize)).collect();
    let assigned: usize = alloc.values().sum();
    let mut remainder = n_valid.saturating_sub(assigned);
    let mut order: Vec<(Label, f64)> = shares.iter().map(|(l, s)| (*l, s - s.floor())).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for (label, _) in order {
        if remainder == 0 {
            break;
        }
        let cap = by_label[&label].len();
        let slot = alloc.get_mut(&label).expect("label present");
        if *slot < cap {
            *slot += 1;
            remainder -= 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_valid = vec![false; n];
    for (label, idx) in &by_label {
        let mut idx = idx.clone();
        idx.shuffle(&mut rng);
        for &i in idx.iter().take(alloc[label]) {
            in_valid[i] = true;
        }
    }
    let (mut train, mut valid) = (Vec::new(), Vec::new());
    for (t, v) in corpus.iter().zip(in_valid) {
        if v {
            valid.push(t.clone());
        } else {
            train.push(t.clone());
        }
    }
    Ok((Corpus::from_valid(train), Corpus::from_valid(valid)))
}
