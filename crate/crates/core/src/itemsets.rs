//! Frequent keyword itemsets (FP-growth), association rules and the
//! semantic co-occurrence graph built from frequent pairs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::export::{AttrGraph, AttrValue};
use crate::text;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ItemsetError {
    #[error("min_support_count must be at least 1")]
    ZeroSupport,
    #[error("max_len must be at least 1")]
    ZeroMaxLen,
    #[error("min_confidence {0} outside [0, 1]")]
    BadConfidence(String),
    #[error("itemset {0:?} has no recorded support (input is not downward closed)")]
    MissingSubset(Vec<String>),
}

static DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// Parses a stopword list: one word per line, `#` comments and blanks ignored.
pub fn parse_stopwords(src: &str) -> BTreeSet<String> {
    src.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

pub fn default_stopwords() -> BTreeSet<String> {
    parse_stopwords(DEFAULT_STOPWORDS)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub tweet_id: String,
    /// Sorted, deduplicated, lowercase.
    pub items: Vec<String>,
}

pub fn to_transactions(corpus: &Corpus, stopwords: &BTreeSet<String>, min_token_len: usize) -> Vec<Transaction> {
    corpus
        .iter()
        .map(|t| {
            let items: BTreeSet<String> = text::tokenize(&t.text)
                .into_iter()
                .filter(|w| w.chars().count() >= min_token_len && !stopwords.contains(w))
                .collect();
            Transaction {
                tweet_id: t.id.clone(),
                items: items.into_iter().collect(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequentItemset {
    pub items: Vec<String>,
    pub support: u64,
    pub support_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationRule {
    pub antecedent: Vec<String>,
    pub consequent: Vec<String>,
    pub support_ratio: f64,
    pub confidence: f64,
    pub lift: f64,
}

struct Node {
    item: u32,
    count: u64,
    parent: Option<usize>,
    children: Vec<(u32, usize)>,
}

/// Prefix tree over weighted item paths, with per-item node lists.
struct FpTree {
    nodes: Vec<Node>,
    header: BTreeMap<u32, Vec<usize>>,
}

impl FpTree {
    fn build(paths: &[(Vec<u32>, u64)], min_support: u64) -> Self {
        let mut freq: HashMap<u32, u64> = HashMap::new();
        for (items, w) in paths {
            for &i in items {
                *freq.entry(i).or_default() += w;
            }
        }
        let mut tree = FpTree {
            nodes: vec![Node {
                item: u32::MAX,
                count: 0,
                parent: None,
                children: Vec::new(),
            }],
            header: BTreeMap::new(),
        };
        let mut ordered = Vec::new();
        for (items, w) in paths {
            ordered.clear();
            ordered.extend(items.iter().copied().filter(|i| freq[i] >= min_support));
            ordered.sort_unstable_by(|a, b| freq[b].cmp(&freq[a]).then(a.cmp(b)));
            tree.insert(&ordered, *w);
        }
        tree
    }

    fn insert(&mut self, items: &[u32], weight: u64) {
        let mut cur = 0;
        for &item in items {
            let existing = self.nodes[cur]
                .children
                .iter()
                .find(|(i, _)| *i == item)
                .map(|(_, n)| *n);
            let next = match existing {
                Some(n) => n,
                None => {
                    let n = self.nodes.len();
                    self.nodes.push(Node {
                        item,
                        count: 0,
                        parent: Some(cur),
                        children: Vec::new(),
                    });
                    self.nodes[cur].children.push((item, n));
                    self.header.entry(item).or_default().push(n);
                    n
                }
            };
            self.nodes[next].count += weight;
            cur = next;
        }
    }

    fn mine(&self, suffix: &[u32], min_support: u64, max_len: usize, out: &mut Vec<(Vec<u32>, u64)>) {
        for (&item, nodes) in &self.header {
            let support: u64 = nodes.iter().map(|&n| self.nodes[n].count).sum();
            if support < min_support {
                continue;
            }
            let mut itemset = suffix.to_vec();
            itemset.push(item);
            if itemset.len() < max_len {
                let base: Vec<(Vec<u32>, u64)> = nodes
                    .iter()
                    .filter_map(|&n| {
                        let mut path = Vec::new();
                        let mut p = self.nodes[n].parent;
                        while let Some(idx) = p {
                            if idx == 0 {
                                break;
                            }
                            path.push(self.nodes[idx].item);
                            p = self.nodes[idx].parent;
                        }
                        (!path.is_empty()).then(|| (path, self.nodes[n].count))
                    })
                    .collect();
                if !base.is_empty() {
                    FpTree::build(&base, min_support).mine(&itemset, min_support, max_len, out);
                }
            }
            out.push((itemset, support));
        }
    }
}

/// All itemsets of size `<= max_len` with support `>= min_support_count`,
/// sorted by size then lexicographically.
pub fn mine_frequent(
    transactions: &[Transaction],
    min_support_count: u64,
    max_len: usize,
) -> Result<Vec<FrequentItemset>, ItemsetError> {
    if min_support_count < 1 {
        return Err(ItemsetError::ZeroSupport);
    }
    if max_len < 1 {
        return Err(ItemsetError::ZeroMaxLen);
    }
    // Ids follow lexicographic item order so sorted ids are sorted items.
    let vocab: BTreeSet<&str> = transactions
        .iter()
        .flat_map(|t| t.items.iter().map(String::as_str))
        .collect();
    let names: Vec<&str> = vocab.into_iter().collect();
    let id_of: HashMap<&str, u32> = names.iter().enumerate().map(|(i, s)| (*s, i as u32)).collect();
    let paths: Vec<(Vec<u32>, u64)> = transactions
        .iter()
        .map(|t| {
            let mut ids: Vec<u32> = t.items.iter().map(|s| id_of[s.as_str()]).collect();
            ids.sort_unstable();
            ids.dedup();
            (ids, 1)
        })
        .collect();

    let mut raw = Vec::new();
    FpTree::build(&paths, min_support_count).mine(&[], min_support_count, max_len, &mut raw);

    let n = transactions.len() as f64;
    let mut out: Vec<(Vec<u32>, u64)> = raw
        .into_iter()
        .map(|(mut ids, s)| {
            ids.sort_unstable();
            (ids, s)
        })
        .collect();
    out.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
    Ok(out
        .into_iter()
        .map(|(ids, support)| FrequentItemset {
            items: ids.iter().map(|&i| names[i as usize].to_string()).collect(),
            support,
            support_ratio: support as f64 / n,
        })
        .collect())
}

/// Rules `A -> C` for every frequent itemset split into two nonempty parts
/// with confidence at or above `min_confidence`.
pub fn derive_rules(frequent: &[FrequentItemset], min_confidence: f64) -> Result<Vec<AssociationRule>, ItemsetError> {
    if !(0.0..=1.0).contains(&min_confidence) {
        return Err(ItemsetError::BadConfidence(min_confidence.to_string()));
    }
    let lookup: HashMap<&[String], &FrequentItemset> = frequent.iter().map(|f| (f.items.as_slice(), f)).collect();
    let find = |items: &[String]| {
        lookup
            .get(items)
            .copied()
            .ok_or_else(|| ItemsetError::MissingSubset(items.to_vec()))
    };

    let mut rules = Vec::new();
    for f in frequent.iter().filter(|f| f.items.len() >= 2) {
        let k = f.items.len();
        for mask in 1..(1u64 << k) - 1 {
            let (mut ante, mut cons) = (Vec::new(), Vec::new());
            for (i, item) in f.items.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    ante.push(item.clone());
                } else {
                    cons.push(item.clone());
                }
            }
            let a = find(&ante)?;
            let c = find(&cons)?;
            let confidence = f.support as f64 / a.support as f64;
            if confidence >= min_confidence {
                rules.push(AssociationRule {
                    antecedent: ante,
                    consequent: cons,
                    support_ratio: f.support_ratio,
                    confidence,
                    lift: confidence / c.support_ratio,
                });
            }
        }
    }
    rules.sort_by(|a, b| {
        (a.antecedent.len() + a.consequent.len())
            .cmp(&(b.antecedent.len() + b.consequent.len()))
            .then_with(|| a.antecedent.cmp(&b.antecedent))
            .then_with(|| a.consequent.cmp(&b.consequent))
    });
    Ok(rules)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticGraph {
    /// `(token, support count)`, lexicographic.
    pub nodes: Vec<(String, u64)>,
    /// `(token, token, support ratio of the pair)` with the first token smaller.
    pub edges: Vec<(String, String, f64)>,
}

pub fn semantic_graph(frequent: &[FrequentItemset], n_transactions: usize) -> SemanticGraph {
    let n = n_transactions.max(1) as f64;
    let mut nodes: Vec<(String, u64)> = frequent
        .iter()
        .filter(|f| f.items.len() == 1)
        .map(|f| (f.items[0].clone(), f.support))
        .collect();
    nodes.sort();
    let mut edges: Vec<(String, String, f64)> = frequent
        .iter()
        .filter(|f| f.items.len() == 2)
        .map(|f| (f.items[0].clone(), f.items[1].clone(), f.support as f64 / n))
        .collect();
    edges.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
    SemanticGraph { nodes, edges }
}

impl SemanticGraph {
    pub fn to_attr_graph(&self, comment: Option<String>) -> AttrGraph {
        let index: HashMap<&str, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.as_str(), i))
            .collect();
        AttrGraph {
            node_keys: vec!["support".into()],
            nodes: self
                .nodes
                .iter()
                .map(|(t, s)| (t.clone(), vec![AttrValue::Int(*s as i64)]))
                .collect(),
            edges: self
                .edges
                .iter()
                .filter_map(|(a, b, w)| Some((*index.get(a.as_str())?, *index.get(b.as_str())?, *w)))
                .collect(),
            comment,
        }
    }
}

pub fn write_itemsets_csv<W: Write>(frequent: &[FrequentItemset], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["items", "size", "support", "support_ratio"])?;
    for f in frequent {
        w.write_record([
            f.items.join(" "),
            f.items.len().to_string(),
            f.support.to_string(),
            format!("{:?}", f.support_ratio),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rules_csv<W: Write>(rules: &[AssociationRule], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["antecedent", "consequent", "support_ratio", "confidence", "lift"])?;
    for r in rules {
        w.write_record([
            r.antecedent.join(" "),
            r.consequent.join(" "),
            format!("{:?}", r.support_ratio),
            format!("{:?}", r.confidence),
            format!("{:?}", r.lift),
        ])?;
    }
    w.flush()?;
    Ok(())
}
