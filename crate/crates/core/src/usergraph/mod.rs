//! User-connection graph built from retweet relations, with community
//! detection, centralities, layout and community isolation diagnostics.

mod centrality;
mod layout;
mod walktrap;

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::export::{AttrGraph, AttrValue};

pub use centrality::{
    betweenness, centralities, hits, pagerank, CentralityReport, PageRankParams, HITS_MAX_ITER, HITS_TOL,
};
pub use layout::{layout_fr, LayoutParams};
pub use walktrap::{modularity, walktrap, Partition};

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("walk length must be at least 1")]
    ZeroWalkSteps,
    #[error("{algorithm} did not converge in {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        algorithm: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("vertex `{0}` is not covered by the partition")]
    VertexNotInPartition(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Which relations become edges.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeMode {
    /// One edge per (author, retweeter) pair per tweet.
    #[default]
    AuthorRetweeter,
    /// Author–retweeter edges plus an edge between every pair of co-retweeters.
    WithCoRetweeters,
}

/// Weighted undirected simple graph over usernames.
#[derive(Debug, Clone, PartialEq)]
pub struct UserGraph {
    names: Vec<String>,
    index: HashMap<String, usize>,
    /// Neighbor lists sorted by neighbor index; symmetric, no self-loops.
    adj: Vec<Vec<(usize, f64)>>,
}

impl UserGraph {
    /// Builds a graph from vertex names and `(u, v, weight)` edges. Repeated
    /// edges accumulate; self-loops and nonpositive weights are dropped.
    pub fn from_edges(names: Vec<String>, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let n = names.len();
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (u, v, w) in edges {
            assert!(u < n && v < n, "edge endpoint out of range");
            if u == v || w <= 0.0 {
                continue;
            }
            *acc.entry((u.min(v), u.max(v))).or_default() += w;
        }
        let mut adj = vec![Vec::new(); n];
        for (&(u, v), &w) in &acc {
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        for list in &mut adj {
            list.sort_by_key(|(v, _)| *v);
        }
        let index = names.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        UserGraph { names, index, adj }
    }

    /// Vertices named `v0..v{n-1}`.
    pub fn with_size(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        Self::from_edges((0..n).map(|i| format!("v{i}")).collect(), edges)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adj[v]
    }

    pub fn weighted_degree(&self, v: usize) -> f64 {
        self.adj[v].iter().map(|(_, w)| w).sum()
    }

    /// Edges with `u < v`, ordered.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (u, list) in self.adj.iter().enumerate() {
            for &(v, w) in list {
                if u < v {
                    out.push((u, v, w));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn total_weight(&self) -> f64 {
        self.edges().iter().map(|(_, _, w)| w).sum()
    }

    pub fn edge_weight(&self, u: usize, v: usize) -> f64 {
        self.adj[u]
            .binary_search_by_key(&v, |(x, _)| *x)
            .map(|i| self.adj[u][i].1)
            .unwrap_or(0.0)
    }
}

/// Users become vertices in first-appearance order (author before its
/// retweeters). Retweeters are deduplicated within a tweet; an author with no
/// retweeters is still a vertex.
pub fn build_user_graph(corpus: &Corpus, mode: EdgeMode) -> UserGraph {
    let mut names: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut intern = |name: &str, names: &mut Vec<String>| -> usize {
        if let Some(&i) = index.get(name) {
            return i;
        }
        let i = names.len();
        names.push(name.to_string());
        index.insert(name.to_string(), i);
        i
    };
    let mut edges = Vec::new();
    for t in corpus {
        let author = (!t.author.is_empty()).then(|| intern(&t.author, &mut names));
        let mut rts: Vec<usize> = Vec::new();
        for r in &t.retweeters {
            let r = intern(r, &mut names);
            if !rts.contains(&r) {
                rts.push(r);
            }
        }
        if let Some(a) = author {
            edges.extend(rts.iter().filter(|&&r| r != a).map(|&r| (a, r, 1.0)));
        }
        if mode == EdgeMode::WithCoRetweeters {
            for (i, &u) in rts.iter().enumerate() {
                for &v in &rts[i + 1..] {
                    edges.push((u, v, 1.0));
                }
            }
        }
    }
    UserGraph::from_edges(names, edges)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityIsolation {
    pub community: usize,
    pub size: usize,
    pub internal_edges: f64,
    pub external_edges: f64,
    pub isolation: f64,
}

/// Per-community edge weight inside vs. leaving, sorted by ascending isolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationReport {
    pub communities: Vec<CommunityIsolation>,
}

impl IsolationReport {
    pub fn get(&self, community: usize) -> Option<&CommunityIsolation> {
        self.communities.iter().find(|c| c.community == community)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["community", "size", "internal_edges", "external_edges", "isolation"])?;
        for c in &self.communities {
            w.write_record([
                c.community.to_string(),
                c.size.to_string(),
                format!("{:?}", c.internal_edges),
                format!("{:?}", c.external_edges),
                format!("{:?}", c.isolation),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn isolation_metrics(graph: &UserGraph, partition: &Partition) -> Result<IsolationReport, GraphError> {
    if partition.community_of.len() != graph.len() {
        let missing = graph
            .names()
            .get(partition.community_of.len())
            .cloned()
            .unwrap_or_default();
        return Err(GraphError::VertexNotInPartition(missing));
    }
    let k = partition.communities.len();
    let mut internal = vec![0.0; k];
    let mut external = vec![0.0; k];
    for (u, v, w) in graph.edges() {
        let (cu, cv) = (partition.community_of[u], partition.community_of[v]);
        if cu == cv {
            internal[cu] += w;
        } else {
            external[cu] += w;
            external[cv] += w;
        }
    }
    let mut communities: Vec<CommunityIsolation> = (0..k)
        .map(|c| {
            let total = internal[c] + external[c];
            CommunityIsolation {
                community: c,
                size: partition.communities[c].len(),
                internal_edges: internal[c],
                external_edges: external[c],
                isolation: if total > 0.0 { external[c] / total } else { 0.0 },
            }
        })
        .collect();
    communities.sort_by(|a, b| a.isolation.total_cmp(&b.isolation).then(a.community.cmp(&b.community)));
    Ok(IsolationReport { communities })
}

/// Mean PageRank of each community's members, indexed by community id.
pub fn mean_score_by_community(partition: &Partition, scores: &[f64]) -> Vec<f64> {
    partition
        .communities
        .iter()
        .map(|members| {
            if members.is_empty() {
                0.0
            } else {
                members.iter().map(|&v| scores[v]).sum::<f64>() / members.len() as f64
            }
        })
        .collect()
}

/// Graph with the per-vertex analysis attached, ready for GraphML/DOT export.
pub fn annotated_graph(
    graph: &UserGraph,
    partition: &Partition,
    report: &CentralityReport,
    positions: &[(f64, f64)],
    comment: Option<String>,
) -> AttrGraph {
    AttrGraph {
        node_keys: ["community", "pagerank", "hub", "authority", "betweenness", "x", "y"]
            .into_iter()
            .map(String::from)
            .collect(),
        nodes: (0..graph.len())
            .map(|v| {
                (
                    graph.names()[v].clone(),
                    vec![
                        AttrValue::Int(partition.community_of[v] as i64),
                        AttrValue::Float(report.pagerank[v]),
                        AttrValue::Float(report.hub[v]),
                        AttrValue::Float(report.authority[v]),
                        AttrValue::Float(report.betweenness[v]),
                        AttrValue::Float(positions[v].0),
                        AttrValue::Float(positions[v].1),
                    ],
                )
            })
            .collect(),
        edges: graph.edges(),
        comment,
    }
}
