//! PageRank, HITS and betweenness on the user graph.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{GraphError, UserGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageRankParams {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        PageRankParams {
            damping: 0.85,
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

/// Power iteration on the weighted random-walk matrix with uniform teleport.
/// Mass sitting on isolated vertices is redistributed uniformly, so scores
/// always sum to one. Stops when the L1 change drops below `tol`.
pub fn pagerank(graph: &UserGraph, params: PageRankParams) -> Result<Vec<f64>, GraphError> {
    let n = graph.len();
    if n == 0 {
        return Err(GraphError::EmptyGraph);
    }
    let d = params.damping;
    if !(d > 0.0 && d < 1.0) {
        return Err(GraphError::InvalidParameter(format!("damping {d} outside (0, 1)")));
    }
    let degree: Vec<f64> = (0..n).map(|v| graph.weighted_degree(v)).collect();
    let nf = n as f64;
    let mut x = vec![1.0 / nf; n];
    let mut residual = f64::INFINITY;
    for _ in 0..params.max_iter {
        let dangling: f64 = (0..n).filter(|&v| degree[v] == 0.0).map(|v| x[v]).sum();
        let base = (1.0 - d) / nf + d * dangling / nf;
        let mut next = vec![base; n];
        for u in 0..n {
            if degree[u] == 0.0 {
                continue;
            }
            let share = d * x[u] / degree[u];
            for &(v, w) in graph.neighbors(u) {
                next[v] += share * w;
            }
        }
        let s: f64 = next.iter().sum();
        for v in &mut next {
            *v /= s;
        }
        residual = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if residual < params.tol {
            return Ok(x);
        }
    }
    Err(GraphError::NonConvergence {
        algorithm: "pagerank",
        iterations: params.max_iter,
        residual,
    })
}

fn normalize(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return false;
    }
    for x in v.iter_mut() {
        *x /= norm;
    }
    true
}

/// Hub and authority scores, each unit-norm in L2.
///
/// Hubs are the power iteration of `A·Aᵀ` started from out-degrees, authorities
/// of `Aᵀ·A` started from in-degrees; each step alternates the two adjacency
/// products and renormalises. On undirected graphs both runs perform the same
/// arithmetic and agree exactly. A graph without edges gets uniform scores.
pub fn hits(graph: &UserGraph, tol: f64, max_iter: usize) -> Result<(Vec<f64>, Vec<f64>), GraphError> {
    let n = graph.len();
    if n == 0 {
        return Err(GraphError::EmptyGraph);
    }
    // A is symmetric here, so A·x and Aᵀ·x coincide.
    let mul = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|u| graph.neighbors(u).iter().map(|&(v, w)| w * x[v]).sum())
            .collect()
    };
    let run = |start: Vec<f64>| -> Result<Vec<f64>, GraphError> {
        let mut x = start;
        if !normalize(&mut x) {
            return Ok(vec![1.0 / (n as f64).sqrt(); n]);
        }
        let mut residual = f64::INFINITY;
        for _ in 0..max_iter {
            let mut next = mul(&mul(&x));
            if !normalize(&mut next) {
                return Ok(vec![1.0 / (n as f64).sqrt(); n]);
            }
            residual = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            x = next;
            if residual < tol {
                return Ok(x);
            }
        }
        Err(GraphError::NonConvergence {
            algorithm: "hits",
            iterations: max_iter,
            residual,
        })
    };
    let out_degree: Vec<f64> = (0..n).map(|v| graph.weighted_degree(v)).collect();
    let in_degree = out_degree.clone();
    let hub = run(out_degree)?;
    let authority = run(in_degree)?;
    Ok((hub, authority))
}

/// Brandes betweenness on the unweighted skeleton; each unordered pair counts once.
pub fn betweenness(graph: &UserGraph) -> Vec<f64> {
    let n = graph.len();
    let mut bc = vec![0.0; n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![usize::MAX; n];
    let mut delta = vec![0.0; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut stack = Vec::with_capacity(n);
    let mut queue = VecDeque::with_capacity(n);
    for s in 0..n {
        for v in 0..n {
            sigma[v] = 0.0;
            dist[v] = usize::MAX;
            delta[v] = 0.0;
            preds[v].clear();
        }
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &(w, _) in graph.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                bc[w] += delta[w];
            }
        }
    }
    bc.iter_mut().for_each(|b| *b /= 2.0);
    bc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityReport {
    pub hub: Vec<f64>,
    pub authority: Vec<f64>,
    pub pagerank: Vec<f64>,
    pub betweenness: Vec<f64>,
}

pub const HITS_TOL: f64 = 1e-12;
pub const HITS_MAX_ITER: usize = 100_000;

pub fn centralities(graph: &UserGraph, pr: PageRankParams) -> Result<CentralityReport, GraphError> {
    let pagerank = pagerank(graph, pr)?;
    let (hub, authority) = hits(graph, HITS_TOL, HITS_MAX_ITER)?;
    Ok(CentralityReport {
        hub,
        authority,
        pagerank,
        betweenness: betweenness(graph),
    })
}
