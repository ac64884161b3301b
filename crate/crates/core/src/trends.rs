//! Thematic-field time series of tweet counts.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::DateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::text;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TrendError {
    #[error("thematic field needs at least one term")]
    EmptyTerms,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("unknown bin width `{0}` (expected hour or day)")]
    UnknownBinWidth(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinWidth {
    Hour,
    Day,
}

impl BinWidth {
    pub fn seconds(self) -> u64 {
        match self {
            BinWidth::Hour => 3_600,
            BinWidth::Day => 86_400,
        }
    }

    pub fn floor(self, ts: u64) -> u64 {
        ts - ts % self.seconds()
    }
}

impl FromStr for BinWidth {
    type Err = TrendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hour" | "hourly" => Ok(BinWidth::Hour),
            "day" | "daily" => Ok(BinWidth::Day),
            other => Err(TrendError::UnknownBinWidth(other.to_string())),
        }
    }
}

impl fmt::Display for BinWidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinWidth::Hour => "hour",
            BinWidth::Day => "day",
        })
    }
}

/// Contiguous, aligned bins; empty bins are present with count 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub bin_width: BinWidth,
    pub bins: Vec<(u64, u64)>,
}

impl TimeSeries {
    pub fn total(&self) -> u64 {
        self.bins.iter().map(|(_, c)| c).sum()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "bin_start_iso8601,count")?;
        for (start, count) in &self.bins {
            writeln!(out, "{},{}", iso8601(*start), count)?;
        }
        Ok(())
    }

    /// Whitespace-separated columns with a `#` header, readable by gnuplot.
    pub fn write_gnuplot<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# bin_start count")?;
        for (start, count) in &self.bins {
            writeln!(out, "{} {}", iso8601(*start), count)?;
        }
        Ok(())
    }
}

pub fn iso8601(ts: u64) -> String {
    DateTime::from_timestamp(ts as i64, 0)
        .map(|d| d.format("%Y-%m-%dT%H:%M:%SZ").to_string())
        .unwrap_or_else(|| ts.to_string())
}

/// True iff every term appears as a case-insensitive whole word in `text`.
pub fn thematic_match(text: &str, terms: &BTreeSet<String>) -> Result<bool, TrendError> {
    if terms.is_empty() {
        return Err(TrendError::EmptyTerms);
    }
    Ok(text::contains_all_terms(text, terms))
}

/// Counts matching tweets per bin over the full timestamp span of the corpus.
pub fn count_series(corpus: &Corpus, terms: &BTreeSet<String>, bin_width: BinWidth) -> Result<TimeSeries, TrendError> {
    if terms.is_empty() {
        return Err(TrendError::EmptyTerms);
    }
    let (lo, hi) = corpus
        .iter()
        .map(|t| t.timestamp)
        .fold(None, |acc: Option<(u64, u64)>, ts| match acc {
            None => Some((ts, ts)),
            Some((lo, hi)) => Some((lo.min(ts), hi.max(ts))),
        })
        .ok_or(TrendError::EmptyCorpus)?;
    let width = bin_width.seconds();
    let first = bin_width.floor(lo);
    let n_bins = ((bin_width.floor(hi) - first) / width + 1) as usize;
    let mut counts = vec![0u64; n_bins];
    for t in corpus {
        if text::contains_all_terms(&t.text, terms) {
            counts[((t.timestamp - first) / width) as usize] += 1;
        }
    }
    let bins = counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (first + i as u64 * width, c))
        .collect();
    Ok(TimeSeries { bin_width, bins })
}
