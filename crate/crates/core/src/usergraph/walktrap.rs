//! Walktrap community detection (Pons & Latapy).
//!
//! Every vertex gets a self-loop weighted by its mean incident edge weight
//! (weight 1 when isolated) before computing `t`-step random-walk profiles.
//! Adjacent communities are merged greedily by the smallest Ward increase
//!
//! `Δσ(C1, C2) = (1/n) · |C1||C2| / (|C1| + |C2|) · Σ_k (P_C1k − P_C2k)² / d(k)`
//!
//! and the dendrogram is cut at the level of maximum modularity, computed on
//! the graph without the added loops.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use super::{GraphError, UserGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub community_of: Vec<usize>,
    /// Members of each community, ascending; ids ordered by smallest member.
    pub communities: Vec<Vec<usize>>,
    pub modularity: f64,
}

impl Partition {
    /// Canonicalises arbitrary community labels and computes modularity.
    pub fn from_assignment(graph: &UserGraph, labels: Vec<usize>) -> Self {
        let mut remap: HashMap<usize, usize> = HashMap::new();
        let mut community_of = Vec::with_capacity(labels.len());
        let mut communities: Vec<Vec<usize>> = Vec::new();
        for (v, l) in labels.into_iter().enumerate() {
            let id = *remap.entry(l).or_insert_with(|| {
                communities.push(Vec::new());
                communities.len() - 1
            });
            communities[id].push(v);
            community_of.push(id);
        }
        let modularity = if community_of.len() == graph.len() {
            modularity(graph, &community_of)
        } else {
            f64::NAN
        };
        Partition {
            community_of,
            communities,
            modularity,
        }
    }

    pub fn len(&self) -> usize {
        self.communities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.communities.is_empty()
    }
}

/// Newman modularity of a weighted undirected graph; 0 when there are no edges.
pub fn modularity(graph: &UserGraph, community_of: &[usize]) -> f64 {
    let m = graph.total_weight();
    if m <= 0.0 {
        return 0.0;
    }
    let k = community_of.iter().copied().max().map_or(0, |x| x + 1);
    let mut internal = vec![0.0; k];
    let mut volume = vec![0.0; k];
    for (u, v, w) in graph.edges() {
        if community_of[u] == community_of[v] {
            internal[community_of[u]] += w;
        }
    }
    for (v, &c) in community_of.iter().enumerate() {
        volume[c] += graph.weighted_degree(v);
    }
    internal
        .iter()
        .zip(&volume)
        .map(|(i, vol)| i / m - (vol / (2.0 * m)).powi(2))
        .sum()
}

struct Community {
    size: usize,
    prob: Vec<f64>,
    volume: f64,
    /// Original-graph edge weight to each adjacent community.
    neighbors: BTreeMap<usize, f64>,
}

type Key = (OrderedFloat<f64>, usize, usize);

struct Merger<'a> {
    n: usize,
    inv_degree: &'a [f64],
    comms: HashMap<usize, Community>,
    dist: HashMap<(usize, usize), f64>,
    queue: BTreeSet<Key>,
}

impl Merger<'_> {
    fn delta_sigma(&self, a: &Community, b: &Community) -> f64 {
        let r2: f64 = a
            .prob
            .iter()
            .zip(&b.prob)
            .zip(self.inv_degree)
            .map(|((x, y), inv)| (x - y) * (x - y) * inv)
            .sum();
        let (sa, sb) = (a.size as f64, b.size as f64);
        sa * sb / (sa + sb) * r2 / self.n as f64
    }

    fn push(&mut self, a: usize, b: usize) {
        let (a, b) = (a.min(b), a.max(b));
        let d = self.delta_sigma(&self.comms[&a], &self.comms[&b]);
        self.dist.insert((a, b), d);
        self.queue.insert((OrderedFloat(d), a, b));
    }

    fn forget(&mut self, a: usize, b: usize) {
        let (a, b) = (a.min(b), a.max(b));
        if let Some(d) = self.dist.remove(&(a, b)) {
            self.queue.remove(&(OrderedFloat(d), a, b));
        }
    }
}

/// Returns the modularity-maximising cut of the Walktrap dendrogram.
/// Communities never span connected components.
pub fn walktrap(graph: &UserGraph, walk_steps: usize) -> Result<Partition, GraphError> {
    let n = graph.len();
    if n == 0 {
        return Err(GraphError::EmptyGraph);
    }
    if walk_steps == 0 {
        return Err(GraphError::ZeroWalkSteps);
    }

    let loop_weight: Vec<f64> = (0..n)
        .map(|v| {
            let nb = graph.neighbors(v);
            if nb.is_empty() {
                1.0
            } else {
                graph.weighted_degree(v) / nb.len() as f64
            }
        })
        .collect();
    let degree: Vec<f64> = (0..n).map(|v| graph.weighted_degree(v) + loop_weight[v]).collect();
    let inv_degree: Vec<f64> = degree.iter().map(|d| 1.0 / d).collect();

    let step = |p: &[f64]| -> Vec<f64> {
        let mut next = vec![0.0; n];
        for (i, &pi) in p.iter().enumerate() {
            if pi == 0.0 {
                continue;
            }
            let s = pi * inv_degree[i];
            next[i] += s * loop_weight[i];
            for &(j, w) in graph.neighbors(i) {
                next[j] += s * w;
            }
        }
        next
    };

    let mut comms = HashMap::with_capacity(2 * n);
    for v in 0..n {
        let mut p = vec![0.0; n];
        p[v] = 1.0;
        for _ in 0..walk_steps {
            p = step(&p);
        }
        comms.insert(
            v,
            Community {
                size: 1,
                prob: p,
                volume: graph.weighted_degree(v),
                neighbors: graph.neighbors(v).iter().copied().collect(),
            },
        );
    }
    let mut m = Merger {
        n,
        inv_degree: &inv_degree,
        comms,
        dist: HashMap::new(),
        queue: BTreeSet::new(),
    };
    for (u, v, _) in graph.edges() {
        m.push(u, v);
    }

    let total = graph.total_weight();
    let mut q = if total > 0.0 {
        -(0..n)
            .map(|v| (graph.weighted_degree(v) / (2.0 * total)).powi(2))
            .sum::<f64>()
    } else {
        0.0
    };
    let mut best = (q, 0usize);
    let mut merges: Vec<(usize, usize, usize)> = Vec::new();
    let mut next_id = n;

    while let Some((_, a, b)) = m.queue.pop_first() {
        m.dist.remove(&(a, b));
        let ca = m.comms.remove(&a).expect("live community");
        let cb = m.comms.remove(&b).expect("live community");
        let w_ab = ca.neighbors.get(&b).copied().unwrap_or(0.0);

        let mut neighbors = ca.neighbors.clone();
        for (&c, &w) in &cb.neighbors {
            *neighbors.entry(c).or_default() += w;
        }
        neighbors.remove(&a);
        neighbors.remove(&b);
        for &c in ca.neighbors.keys().chain(cb.neighbors.keys()) {
            if c != a && c != b {
                m.forget(a, c);
                m.forget(b, c);
            }
        }

        let size = ca.size + cb.size;
        let (fa, fb) = (ca.size as f64 / size as f64, cb.size as f64 / size as f64);
        let prob = ca.prob.iter().zip(&cb.prob).map(|(x, y)| fa * x + fb * y).collect();
        if total > 0.0 {
            q += w_ab / total - ca.volume * cb.volume / (2.0 * total * total);
        }
        let id = next_id;
        next_id += 1;
        for (&c, &w) in &neighbors {
            let nb = &mut m.comms.get_mut(&c).expect("live neighbor").neighbors;
            nb.remove(&a);
            nb.remove(&b);
            nb.insert(id, w);
        }
        let adjacent: Vec<usize> = neighbors.keys().copied().collect();
        m.comms.insert(
            id,
            Community {
                size,
                prob,
                volume: ca.volume + cb.volume,
                neighbors,
            },
        );
        for c in adjacent {
            m.push(id, c);
        }
        merges.push((a, b, id));
        if q > best.0 {
            best = (q, merges.len());
        }
    }

    // Replay the first `best.1` merges with a union-find over dendrogram ids.
    let mut parent: Vec<usize> = (0..next_id).collect();
    fn root(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(a, b, id) in &merges[..best.1] {
        parent[a] = id;
        parent[b] = id;
    }
    let labels: Vec<usize> = (0..n).map(|v| root(&mut parent, v)).collect();
    let mut partition = Partition::from_assignment(graph, labels);
    partition.modularity = modularity(graph, &partition.community_of);
    Ok(partition)
}
