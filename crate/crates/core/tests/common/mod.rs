//! Independent reference implementations shared by the integration and
//! acceptance tests. Nothing here calls the algorithm under test.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet};

use disinfo_core::classifier::{init_params, loss, ModelConfig, ModelParams};
use disinfo_core::features::FeatureBundle;
use disinfo_core::itemsets::Transaction;
use disinfo_core::usergraph::{Partition, UserGraph};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- itemsets

pub const ITEM_NAMES: [&str; 6] = ["alpha", "bravo", "charlie", "delta", "echo", "foxtrot"];

/// Random database of `n` transactions over the first `n_items` names.
pub fn random_transactions(r: &mut ChaCha8Rng, n: usize, n_items: usize, density: f64) -> Vec<Transaction> {
    (0..n)
        .map(|i| Transaction {
            tweet_id: format!("t{i}"),
            items: ITEM_NAMES[..n_items]
                .iter()
                .filter(|_| r.gen_bool(density))
                .map(|s| s.to_string())
                .collect(),
        })
        .collect()
}

/// Support count of every non-empty subset of the item universe, by
/// enumerating all 2^k masks against every transaction.
pub fn brute_supports(db: &[Transaction], n_items: usize) -> BTreeMap<Vec<String>, u64> {
    let mut out = BTreeMap::new();
    for mask in 1u32..(1 << n_items) {
        let set: Vec<String> = (0..n_items)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| ITEM_NAMES[i].to_string())
            .collect();
        let count = db.iter().filter(|t| set.iter().all(|s| t.items.contains(s))).count() as u64;
        out.insert(set, count);
    }
    out
}

pub fn brute_frequent(db: &[Transaction], n_items: usize, min_support: u64) -> BTreeMap<Vec<String>, u64> {
    brute_supports(db, n_items)
        .into_iter()
        .filter(|(_, c)| *c >= min_support)
        .collect()
}

/// `(antecedent, consequent) -> confidence` for every split of every
/// frequent itemset reaching `min_confidence`.
pub fn brute_rules(
    frequent: &BTreeMap<Vec<String>, u64>,
    min_confidence: f64,
) -> BTreeMap<(Vec<String>, Vec<String>), f64> {
    let mut out = BTreeMap::new();
    for (set, &sup) in frequent.iter().filter(|(s, _)| s.len() >= 2) {
        let k = set.len();
        for mask in 1u32..(1 << k) - 1 {
            let a: Vec<String> = (0..k)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| set[i].clone())
                .collect();
            let c: Vec<String> = (0..k)
                .filter(|i| mask & (1 << i) == 0)
                .map(|i| set[i].clone())
                .collect();
            let conf = sup as f64 / frequent[&a] as f64;
            if conf >= min_confidence {
                out.insert((a, c), conf);
            }
        }
    }
    out
}

// ---------------------------------------------------------------- graphs

/// Random weighted graph; some vertices may end up isolated.
pub fn random_graph(r: &mut ChaCha8Rng, max_n: usize, p: f64) -> UserGraph {
    let n = r.gen_range(1..=max_n);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.gen_bool(p) {
                edges.push((u, v, r.gen_range(0.5..3.0)));
            }
        }
    }
    UserGraph::with_size(n, edges)
}

/// PageRank as the solution of the linear system
/// `(I - d·M - (d/n)·1·zᵀ) p = (1 - d)/n · 1`, where `M` is the column-
/// stochastic weighted walk matrix and `z` marks isolated vertices.
pub fn dense_pagerank(g: &UserGraph, d: f64) -> Vec<f64> {
    let n = g.len();
    let nf = n as f64;
    let mut a = DMatrix::<f64>::identity(n, n);
    for u in 0..n {
        let deg = g.weighted_degree(u);
        if deg == 0.0 {
            for v in 0..n {
                a[(v, u)] -= d / nf;
            }
        } else {
            for v in 0..n {
                a[(v, u)] -= d * g.edge_weight(u, v) / deg;
            }
        }
    }
    let b = DVector::from_element(n, (1.0 - d) / nf);
    let x = a.lu().solve(&b).expect("pagerank system is nonsingular");
    x.iter().copied().collect()
}

fn all_shortest_paths(g: &UserGraph, s: usize, t: usize) -> Vec<Vec<usize>> {
    // Depth-first enumeration of simple paths, keeping the shortest ones.
    let mut best: Vec<Vec<usize>> = Vec::new();
    let mut path = vec![s];
    let mut on_path = vec![false; g.len()];
    on_path[s] = true;
    fn go(g: &UserGraph, t: usize, path: &mut Vec<usize>, on_path: &mut [bool], best: &mut Vec<Vec<usize>>) {
        let v = *path.last().unwrap();
        if v == t {
            match best.first().map(|b| b.len()) {
                Some(len) if path.len() > len => {}
                Some(len) if path.len() == len => best.push(path.clone()),
                _ => *best = vec![path.clone()],
            }
            return;
        }
        if best.first().is_some_and(|b| path.len() >= b.len()) {
            return;
        }
        for w in 0..g.len() {
            if !on_path[w] && g.edge_weight(v, w) > 0.0 {
                on_path[w] = true;
                path.push(w);
                go(g, t, path, on_path, best);
                path.pop();
                on_path[w] = false;
            }
        }
    }
    go(g, t, &mut path, &mut on_path, &mut best);
    best
}

/// Betweenness from explicit enumeration of every shortest path between
/// every unordered pair.
pub fn enumerated_betweenness(g: &UserGraph) -> Vec<f64> {
    let n = g.len();
    let mut bc = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            let paths = all_shortest_paths(g, s, t);
            if paths.is_empty() {
                continue;
            }
            let total = paths.len() as f64;
            for v in 0..n {
                if v == s || v == t {
                    continue;
                }
                let through = paths.iter().filter(|p| p.contains(&v)).count() as f64;
                bc[v] += through / total;
            }
        }
    }
    bc
}

pub fn clique_edges(offset: usize, k: usize) -> Vec<(usize, usize, f64)> {
    let mut e = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            e.push((offset + i, offset + j, 1.0));
        }
    }
    e
}

/// Two `k`-cliques joined by a single bridge between vertex 0 and vertex `k`.
pub fn bridged_cliques(k: usize) -> UserGraph {
    let mut e = clique_edges(0, k);
    e.extend(clique_edges(k, k));
    e.push((0, k, 1.0));
    UserGraph::with_size(2 * k, e)
}

/// Stochastic block model with two blocks `0..n1` and `n1..n1+n2`.
pub fn planted_two_block(r: &mut ChaCha8Rng, n1: usize, n2: usize, p_in: f64, p_out: f64) -> UserGraph {
    let n = n1 + n2;
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let same = (u < n1) == (v < n1);
            if r.gen_bool(if same { p_in } else { p_out }) {
                edges.push((u, v, 1.0));
            }
        }
    }
    UserGraph::with_size(n, edges)
}

/// Fraction of vertices correctly placed under the best one-to-one matching
/// of the two planted blocks to two distinct recovered communities; vertices
/// in any other recovered community count as misplaced.
pub fn two_block_agreement(p: &Partition, n1: usize) -> f64 {
    let n = p.community_of.len();
    let k = p.communities.len();
    let overlap = |c: usize, block0: bool| p.communities[c].iter().filter(|&&v| (v < n1) == block0).count();
    let mut best = 0;
    for a in 0..k {
        for b in 0..k {
            if a != b {
                best = best.max(overlap(a, true) + overlap(b, false));
            }
        }
        if k == 1 {
            best = best.max(overlap(a, true)).max(overlap(a, false));
        }
    }
    best as f64 / n as f64
}

// ---------------------------------------------------------------- linear algebra

/// Singular values by one-sided Jacobi rotations, descending.
pub fn jacobi_singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let (m, n) = a.shape();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| a[(i, j)]).collect()).collect();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|x| x * x).sum();
                let beta: f64 = cols[q].iter().map(|x| x * x).sum();
                let gamma: f64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (cols[p][i], cols[q][i]);
                    cols[p][i] = c * x - s * y;
                    cols[q][i] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn random_matrix(r: &mut ChaCha8Rng, m: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |_, _| StandardNormal.sample(r))
}

// ---------------------------------------------------------------- classifier

/// The small model used for gradient checks: vocab 20, d = 4, k = 3.
pub fn tiny_config(seed: u64) -> ModelConfig {
    ModelConfig {
        text_vocab: 20,
        mixed_vocab: 20,
        text_dim: 4,
        mixed_dim: 4,
        dense_dim: 3,
        external_dim: 0,
        text_hidden: 3,
        mixed_hidden: 3,
        dense_hidden: 3,
        external_hidden: 0,
        head_hidden: 4,
        seed,
    }
}

pub fn random_bundle(r: &mut ChaCha8Rng, vocab: u32, text_len: usize, mixed_len: usize, dense: usize) -> FeatureBundle {
    let ids = |r: &mut ChaCha8Rng, len: usize| -> Vec<u32> {
        (0..len)
            .map(|_| if r.gen_bool(0.25) { 0 } else { r.gen_range(1..vocab) })
            .collect()
    };
    FeatureBundle {
        text_ids: ids(r, text_len),
        mixed_ids: ids(r, mixed_len),
        svd_vec: (0..dense).map(|_| StandardNormal.sample(r)).collect(),
        sentiment_vec: None,
        external_vec: None,
    }
}

/// Tiny model with randomised biases (keeps ReLU units away from their kink)
/// and a random labelled batch.
pub fn gradient_fixture(seed: u64) -> (ModelParams, Vec<(FeatureBundle, f64)>) {
    let mut r = rng(1000 + seed);
    let mut p = init_params(&tiny_config(seed)).unwrap();
    for d in [
        &mut p.text_proj,
        &mut p.mixed_proj,
        &mut p.dense_proj,
        &mut p.head,
        &mut p.out,
    ] {
        for b in d.b.iter_mut() {
            *b = r.gen_range(-0.5..0.5);
        }
    }
    let batch = (0..6)
        .map(|_| {
            (
                random_bundle(&mut r, 20, 5, 7, 3),
                if r.gen_bool(0.5) { 1.0 } else { 0.0 },
            )
        })
        .collect();
    (p, batch)
}

/// Central differences with step `h` for every parameter.
pub fn numeric_gradient(params: &ModelParams, batch: &[(&FeatureBundle, f64)], h: f64) -> Vec<Vec<f64>> {
    let shapes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
    let mut out = Vec::with_capacity(shapes.len());
    let mut work = params.clone();
    for (k, len) in shapes.into_iter().enumerate() {
        let mut g = vec![0.0; len];
        for (i, gi) in g.iter_mut().enumerate() {
            let orig = work.tensors()[k][i];
            work.tensors_mut()[k][i] = orig + h;
            let up = loss(&work, batch).unwrap();
            work.tensors_mut()[k][i] = orig - h;
            let down = loss(&work, batch).unwrap();
            work.tensors_mut()[k][i] = orig;
            *gi = (up - down) / (2.0 * h);
        }
        out.push(g);
    }
    out
}

/// Denominator floor for relative errors of gradients that are ~0.
pub const REL_FLOOR: f64 = 1e-6;

pub fn max_relative_error(analytic: &[&[f64]], numeric: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, n) in analytic.iter().zip(numeric) {
        for (x, y) in a.iter().zip(n) {
            let den = x.abs().max(y.abs()).max(REL_FLOOR);
            worst = worst.max((x - y).abs() / den);
        }
    }
    worst
}

pub fn set_of(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}
