//! Independent recounts and reference computations for individual modules.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use common::*;
use disinfo_core::classifier::{init_params, loss, train, ModelConfig, Optimizer, TrainConfig};
use disinfo_core::corpus::{read_jsonl, split, write_jsonl, Corpus, Label, Tweet};
use disinfo_core::features::{build_vocab, encode, fit_transform, tfidf, FeatureBundle, SvdParams};
use disinfo_core::itemsets::{mine_frequent, semantic_graph, to_transactions};
use disinfo_core::synth::{generate_synthetic, SyntheticSpec};
use disinfo_core::trends::{count_series, BinWidth};
use disinfo_core::usergraph::{
    build_user_graph, hits, isolation_metrics, layout_fr, modularity, walktrap, EdgeMode, LayoutParams, Partition,
    UserGraph, HITS_MAX_ITER, HITS_TOL,
};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

fn small_synthetic(seed: u64) -> disinfo_core::synth::SyntheticCorpus {
    generate_synthetic(&SyntheticSpec {
        n_genuine: 150,
        n_fake: 50,
        seed,
        ..SyntheticSpec::default()
    })
    .unwrap()
}

// ------------------------------------------------------------------ corpus

#[test]
fn thousand_record_round_trip() {
    let generated = generate_synthetic(&SyntheticSpec {
        n_genuine: 750,
        n_fake: 250,
        seed: 5,
        ..SyntheticSpec::default()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    write_jsonl(&generated.corpus, std::fs::File::create(&path).unwrap(), None).unwrap();
    let back = read_jsonl(std::io::BufReader::new(std::fs::File::open(&path).unwrap())).unwrap();
    assert_eq!(back.len(), 1000);
    for (a, b) in generated.corpus.iter().zip(back.iter()) {
        assert_eq!(a, b);
    }
}

#[test]
fn split_seeds_change_membership() {
    let corpus = generate_synthetic(&SyntheticSpec {
        n_genuine: 750,
        n_fake: 250,
        ..SyntheticSpec::default()
    })
    .unwrap()
    .corpus;
    let ids = |c: &Corpus| c.iter().map(|t| t.id.clone()).collect::<BTreeSet<_>>();
    let (_, v1) = split(&corpus, 0.25, 1).unwrap();
    let (_, v1b) = split(&corpus, 0.25, 1).unwrap();
    let (_, v2) = split(&corpus, 0.25, 2).unwrap();
    assert_eq!(ids(&v1), ids(&v1b));
    assert_ne!(ids(&v1), ids(&v2));
    assert_eq!(v1.len(), 250);
}

// ------------------------------------------------------------------ trends

#[test]
fn injected_step_appears_in_series() {
    let day = 86_400;
    let start = 1_646_092_800;
    let step_day = 6;
    let mut r = rng(9);
    let mut per_day = vec![0u64; 12];
    let mut tweets = Vec::new();
    for d in 0..12u64 {
        let rate = if d >= step_day { 0.8 } else { 0.1 };
        for j in 0..40 {
            let hit = r.gen_bool(rate);
            per_day[d as usize] += hit as u64;
            tweets.push(Tweet {
                id: format!("d{d}j{j}"),
                text: if hit {
                    "Claims of a BIOLAB in Ukraine"
                } else {
                    "weather report"
                }
                .into(),
                author: "a".into(),
                retweeters: vec![],
                hashtags: vec![],
                timestamp: start + d * day + r.gen_range(0..day),
                label: None,
            });
        }
    }
    let corpus = Corpus::new(tweets).unwrap();
    let terms: BTreeSet<String> = ["biolab".to_string()].into();
    let series = count_series(&corpus, &terms, BinWidth::Day).unwrap();
    let counts: Vec<u64> = series.bins.iter().map(|b| b.1).collect();
    assert_eq!(counts, per_day);
    assert_eq!(series.total(), per_day.iter().sum::<u64>());
    let before = counts[..step_day as usize].iter().max().unwrap();
    let after = counts[step_day as usize..].iter().min().unwrap();
    assert!(after > before, "{counts:?}");
}

// ---------------------------------------------------------------- itemsets

/// Lowercase runs of alphanumerics, written without the library tokenizer.
fn reference_items(text: &str, stop: &BTreeSet<String>, min_len: usize) -> Vec<String> {
    let mut out = BTreeSet::new();
    let mut cur = String::new();
    for ch in text.chars().chain(std::iter::once(' ')) {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            if cur.chars().count() >= min_len && !stop.contains(&cur) {
                out.insert(cur.clone());
            }
            cur.clear();
        }
    }
    out.into_iter().collect()
}

#[test]
fn transactions_match_reference_tokenizer() {
    let corpus = small_synthetic(3);
    let mut tweets: Vec<Tweet> = corpus.corpus.iter().take(48).cloned().collect();
    tweets.push(Tweet {
        text: "#Ukraine, ukraine NAZI! Ärger über Öl; x2-y3".into(),
        ..tweets[0].clone()
    });
    tweets.last_mut().unwrap().id = "extra1".into();
    tweets.push(Tweet {
        id: "extra2".into(),
        text: "the and of".into(),
        ..tweets[0].clone()
    });
    let fixture = Corpus::new(tweets).unwrap();
    let stop: BTreeSet<String> = ["the", "and", "of"].iter().map(|s| s.to_string()).collect();
    let txs = to_transactions(&fixture, &stop, 2);
    assert_eq!(txs.len(), 50);
    for (t, tx) in fixture.iter().zip(&txs) {
        assert_eq!(tx.items, reference_items(&t.text, &stop, 2), "{}", t.text);
    }
    assert!(txs[49].items.is_empty());
}

#[test]
fn semantic_edges_are_frequent_pairs() {
    let mut r = rng(21);
    for _ in 0..20 {
        let db = random_transactions(&mut r, 40, 6, 0.45);
        let min_support = r.gen_range(2..6);
        let frequent = mine_frequent(&db, min_support, 3).unwrap();
        let g = semantic_graph(&frequent, db.len());
        let got: BTreeSet<(String, String)> = g.edges.iter().map(|e| (e.0.clone(), e.1.clone())).collect();
        let expected: BTreeSet<(String, String)> = brute_frequent(&db, 6, min_support)
            .into_keys()
            .filter(|k| k.len() == 2)
            .map(|k| (k[0].clone(), k[1].clone()))
            .collect();
        assert_eq!(got, expected);
    }
}

// --------------------------------------------------------------- usergraph

#[test]
fn degree_sequence_matches_tally() {
    let s = small_synthetic(4);
    let g = build_user_graph(&s.corpus, EdgeMode::AuthorRetweeter);
    let mut tally: BTreeMap<String, f64> = BTreeMap::new();
    for t in s.corpus.iter() {
        tally.entry(t.author.clone()).or_default();
        for r in &t.retweeters {
            if *r != t.author {
                *tally.entry(t.author.clone()).or_default() += 1.0;
                *tally.entry(r.clone()).or_default() += 1.0;
            } else {
                tally.entry(r.clone()).or_default();
            }
        }
    }
    assert_eq!(g.len(), tally.len());
    for (name, deg) in &tally {
        let v = g.index_of(name).unwrap();
        assert_eq!(g.weighted_degree(v), *deg, "{name}");
    }
}

#[test]
fn bridged_cliques_split_is_modularity_optimal() {
    let g = bridged_cliques(8);
    let p = walktrap(&g, 4).unwrap();
    let found = modularity(&g, &p.community_of);
    let mut best = f64::NEG_INFINITY;
    // Vertex 0 fixed in block 0; every other 2-block assignment.
    for mask in 0u32..(1 << 15) {
        let labels: Vec<usize> = (0..16)
            .map(|v| if v == 0 { 0 } else { ((mask >> (v - 1)) & 1) as usize })
            .collect();
        best = best.max(modularity(&g, &labels));
    }
    assert!(found >= best - 1e-12, "found {found}, best {best}");
    assert_eq!(p.len(), 2);
}

#[test]
fn hits_matches_dense_eigenvector() {
    let mut r = rng(31);
    let mut checked = 0;
    while checked < 20 {
        let g = random_graph(&mut r, 8, 0.6);
        let n = g.len();
        if n < 2 {
            continue;
        }
        let a = DMatrix::from_fn(n, n, |i, j| g.edge_weight(i, j));
        let eig = SymmetricEigen::new(&a * a.transpose());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let (l1, l2) = (eig.eigenvalues[order[0]], eig.eigenvalues[order[1]]);
        // The dominant eigenvector is only well defined with a spectral gap.
        if l1 <= 0.0 || l2 > 0.5 * l1 {
            continue;
        }
        let mut v: Vec<f64> = eig.eigenvectors.column(order[0]).iter().copied().collect();
        if v.iter().sum::<f64>() < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let (hub, _) = hits(&g, HITS_TOL, HITS_MAX_ITER).unwrap();
        let scale = hub.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (h, e) in hub.iter().zip(&v) {
            assert!((h / scale - e).abs() <= 1e-8, "{hub:?} vs {v:?}");
        }
        checked += 1;
    }
}

/// Two linked vertices settle where attraction and repulsion balance.
#[test]
fn two_vertex_layout_reaches_ideal_spacing() {
    let g = UserGraph::with_size(2, [(0, 1, 1.0)]);
    let params = LayoutParams {
        iterations: 200,
        area: 1.0e4,
        seed: 3,
    };
    let pos = layout_fr(&g, params);
    let k = params.ideal_distance(2);
    let d = ((pos[0].0 - pos[1].0).powi(2) + (pos[0].1 - pos[1].1).powi(2)).sqrt();
    // At equilibrium d²/k = k²/d, so d = k.
    assert!(d >= 0.5 * k && d <= 2.0 * k, "distance {d}, ideal {k}");
    assert_eq!(pos, layout_fr(&g, params));
}

#[test]
fn isolation_recount_on_random_partitions() {
    let mut r = rng(41);
    for _ in 0..30 {
        let g = random_graph(&mut r, 12, 0.35);
        let k = r.gen_range(1..=4);
        let labels: Vec<usize> = (0..g.len()).map(|_| r.gen_range(0..k)).collect();
        let p = Partition::from_assignment(&g, labels);
        let report = isolation_metrics(&g, &p).unwrap();
        for c in &report.communities {
            let degree: f64 = p.communities[c.community].iter().map(|&v| g.weighted_degree(v)).sum();
            assert!((2.0 * c.internal_edges + c.external_edges - degree).abs() <= 1e-12);
        }
    }
}

#[test]
fn synthetic_bot_communities_are_isolated() {
    let s = generate_synthetic(&SyntheticSpec::default()).unwrap();
    let g = build_user_graph(&s.corpus, EdgeMode::AuthorRetweeter);
    let p = walktrap(&g, 4).unwrap();
    let iso = isolation_metrics(&g, &p).unwrap();
    let isolated = iso
        .communities
        .iter()
        .filter(|c| c.size >= 2 && c.isolation < 0.1)
        .count();
    assert!(isolated >= 2, "{:?}", iso.communities);
}

// ---------------------------------------------------------------- features

#[test]
fn vocab_counts_and_decode() {
    let s = small_synthetic(6);
    let vocab = build_vocab(&s.corpus, 2, true);
    let mut freq: HashMap<String, u64> = HashMap::new();
    for t in s.corpus.iter() {
        for w in reference_items_seq(&t.text) {
            *freq.entry(w).or_default() += 1;
        }
        for u in &t.retweeters {
            *freq.entry(format!("@{u}")).or_default() += 1;
        }
    }
    let kept = freq.values().filter(|&&c| c >= 2).count();
    assert_eq!(vocab.len(), kept + 1);
    for (tok, c) in &freq {
        let id = vocab.id(tok);
        if *c >= 2 {
            assert_eq!(vocab.count(id), *c, "{tok}");
        } else {
            assert_eq!(id, 0, "{tok}");
        }
    }
    for t in s.corpus.iter().take(30) {
        let (text_ids, _) = encode(t, &vocab, 64, 64);
        let expected: Vec<String> = reference_items_seq(&t.text)
            .into_iter()
            .filter(|w| freq[w] >= 2)
            .collect();
        let decoded = vocab.decode(&text_ids);
        assert_eq!(decoded, expected);
    }
}

fn reference_items_seq(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[test]
fn tfidf_matches_reference_formula() {
    let mut r = rng(51);
    let lists: Vec<Vec<String>> = (0..10)
        .map(|_| (0..8).filter(|_| r.gen_bool(0.4)).map(|c| format!("u{c}")).collect())
        .collect();
    let tweets: Vec<Tweet> = lists
        .iter()
        .enumerate()
        .map(|(i, l)| Tweet {
            id: format!("t{i}"),
            text: String::new(),
            author: "a".into(),
            retweeters: l.clone(),
            hashtags: vec![],
            timestamp: 0,
            label: None,
        })
        .collect();
    let m = tfidf(&Corpus::new(tweets).unwrap()).unwrap();
    let n = lists.len() as f64;
    let dense = m.to_dense();
    for (i, (row, l)) in m.rows.iter().zip(&lists).enumerate() {
        let raw: Vec<(String, f64)> = l
            .iter()
            .map(|u| {
                let df = lists.iter().filter(|x| x.contains(u)).count() as f64;
                (u.clone(), ((1.0 + n) / (1.0 + df)).ln() + 1.0)
            })
            .collect();
        let norm = raw.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        for (u, v) in &raw {
            let c = m.model.column(u).unwrap();
            assert!((dense[(i, c)] - v / norm).abs() <= 1e-12);
        }
        assert_eq!(row.len(), raw.len());
    }
}

#[test]
fn projection_reproduces_training_scores() {
    let mut r = rng(61);
    for seed in 0..5 {
        let a = random_matrix(&mut r, 30, 12);
        let columns: Vec<String> = (0..12).map(|c| format!("u{c}")).collect();
        let (model, scores) = fit_transform(
            &a,
            columns,
            SvdParams {
                k: 4,
                seed,
                oversample: 10,
                power_iters: 4,
            },
        )
        .unwrap();
        for i in 0..30 {
            let row: Vec<(usize, f64)> = (0..12).map(|j| (j, a[(i, j)])).collect();
            let p = model.project(&row);
            for (k, v) in p.iter().enumerate() {
                assert!((v - scores[(i, k)]).abs() <= 1e-8);
            }
        }
    }
}

// -------------------------------------------------------------- classifier

#[test]
fn loss_matches_scalar_recomputation() {
    use disinfo_core::classifier::forward;
    for seed in 0..5 {
        let (params, batch) = gradient_fixture(seed);
        let refs: Vec<(&FeatureBundle, f64)> = batch.iter().map(|(x, y)| (x, *y)).collect();
        let mut total = 0.0;
        for (x, y) in &refs {
            let p = forward(&params, x).unwrap().clamp(1e-7, 1.0 - 1e-7);
            total += -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
        }
        let expected = total / refs.len() as f64;
        assert!((loss(&params, &refs).unwrap() - expected).abs() <= 1e-12);
    }
}

#[test]
fn separable_set_is_learned() {
    let mut r = rng(71);
    let data: Vec<(FeatureBundle, f64)> = (0..200)
        .map(|i| {
            let y = (i % 2) as f64;
            let base: u32 = if y > 0.5 { 1 } else { 11 };
            let text_ids: Vec<u32> = (0..6).map(|_| base + r.gen_range(0..10)).collect();
            let mixed_ids = text_ids.clone();
            let svd_vec: Vec<f64> = (0..3).map(|_| (2.0 * y - 1.0) + r.gen_range(-0.3..0.3)).collect();
            (
                FeatureBundle {
                    text_ids,
                    mixed_ids,
                    svd_vec,
                    sentiment_vec: None,
                    external_vec: None,
                },
                y,
            )
        })
        .collect();
    let refs: Vec<(&FeatureBundle, f64)> = data.iter().map(|(x, y)| (x, *y)).collect();
    let params = init_params(&ModelConfig::new(21, 21, 3, 7)).unwrap();
    let cfg = TrainConfig {
        optimizer: Optimizer::Adam,
        learning_rate: 1e-2,
        epochs: 50,
        seed: 7,
        ..TrainConfig::default()
    };
    let (trained, history) = train(&params, &refs, &cfg).unwrap();
    assert_eq!(history.len(), 50);
    assert!(loss(&trained, &refs).unwrap() < 0.1, "{history:?}");
    assert!(history[..10].windows(2).all(|w| w[1] < w[0]), "{history:?}");
}

#[test]
fn synthetic_label_counts() {
    let s = small_synthetic(8);
    let fakes = s.corpus.iter().filter(|t| t.label == Some(Label::Fake)).count();
    assert_eq!(fakes, 50);
}
