//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//! Run with `cargo test -p disinfo-core --test acceptance -- --nocapture`.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use common::*;
use disinfo_core::classifier::{loss_and_grad, Metrics};
use disinfo_core::features::{truncated_svd, FeatureBundle, SvdParams};
use disinfo_core::itemsets::{derive_rules, mine_frequent};
use disinfo_core::llm::{
    build_prompt, emit_finetune_config, parse_entity_sentiments, FinetuneOverrides, Sentiment, TaskKind,
};
use disinfo_core::pipeline::{read_json, read_manifest, run_stage, MetricsReport, PipelineConfig, Stage};
use disinfo_core::synth::{generate_synthetic, SyntheticSpec};
use disinfo_core::usergraph::{
    betweenness, build_user_graph, hits, isolation_metrics, pagerank, walktrap, EdgeMode, PageRankParams,
    HITS_MAX_ITER, HITS_TOL,
};
use rand::Rng;

fn report(n: u32, title: &str, pass: bool, detail: &str) {
    println!(
        "[{}] criterion {n:>2}: {title} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed < Duration::from_secs(limit_secs)
}

#[test]
fn criterion_01_itemset_oracle() {
    let t0 = Instant::now();
    let mut r = rng(1);
    let mut mismatches = Vec::new();
    let mut worst_conf: f64 = 0.0;
    for db_index in 0..200 {
        let n_items = r.gen_range(1..=6usize);
        let n = r.gen_range(1..=50usize);
        let db = random_transactions(&mut r, n, n_items, 0.5);
        let min_support = r.gen_range(1..=6u64);
        let min_conf = [0.0, 0.3, 0.5, 0.8][db_index % 4];

        let expected = brute_frequent(&db, n_items, min_support);
        let mined = mine_frequent(&db, min_support, 6).unwrap();
        let got: BTreeMap<Vec<String>, u64> = mined.iter().map(|f| (f.items.clone(), f.support)).collect();
        if got != expected {
            mismatches.push(format!("db {db_index}: itemsets differ"));
            continue;
        }
        for f in &mined {
            if f.support_ratio != f.support as f64 / n as f64 {
                mismatches.push(format!("db {db_index}: support ratio of {:?}", f.items));
            }
        }
        let expected_rules = brute_rules(&expected, min_conf);
        let rules = derive_rules(&mined, min_conf).unwrap();
        if rules.len() != expected_rules.len() {
            mismatches.push(format!(
                "db {db_index}: {} rules, expected {}",
                rules.len(),
                expected_rules.len()
            ));
            continue;
        }
        for rule in &rules {
            match expected_rules.get(&(rule.antecedent.clone(), rule.consequent.clone())) {
                Some(c) => worst_conf = worst_conf.max((c - rule.confidence).abs()),
                None => mismatches.push(format!("db {db_index}: unexpected rule {:?}", rule.antecedent)),
            }
        }
    }
    let elapsed = t0.elapsed();
    let pass = mismatches.is_empty() && worst_conf <= 1e-12 && within(elapsed, 10);
    report(
        1,
        "itemset oracle equivalence",
        pass,
        &format!(
            "200 databases, {} mismatches, max confidence error {worst_conf:.1e}, {:.2?}",
            mismatches.len(),
            elapsed
        ),
    );
    assert!(pass, "{mismatches:?}");
}

#[test]
fn criterion_02_centrality_oracles() {
    let t0 = Instant::now();
    let mut r = rng(2);
    let (mut worst_sum, mut worst_solve, mut worst_bc, mut worst_hits): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..50 {
        let g = random_graph(&mut r, 8, 0.4);
        let pr = pagerank(&g, PageRankParams::default()).unwrap();
        worst_sum = worst_sum.max((pr.iter().sum::<f64>() - 1.0).abs());
        let oracle = dense_pagerank(&g, 0.85);
        for (a, b) in pr.iter().zip(&oracle) {
            worst_solve = worst_solve.max((a - b).abs());
        }
        let bc = betweenness(&g);
        let enumerated = enumerated_betweenness(&g);
        for (a, b) in bc.iter().zip(&enumerated) {
            worst_bc = worst_bc.max((a - b).abs() / b.abs().max(1.0));
        }
        let (hub, auth) = hits(&g, HITS_TOL, HITS_MAX_ITER).unwrap();
        for (a, b) in hub.iter().zip(&auth) {
            worst_hits = worst_hits.max((a - b).abs());
        }
    }
    let elapsed = t0.elapsed();
    // Betweenness sums of path-count ratios are compared at float resolution.
    let pass =
        worst_sum <= 1e-9 && worst_solve <= 1e-8 && worst_bc <= 1e-12 && worst_hits <= 1e-10 && within(elapsed, 10);
    report(
        2,
        "centrality oracles",
        pass,
        &format!(
            "50 graphs: |Σpr−1| {worst_sum:.1e}, pr vs solve {worst_solve:.1e}, betweenness {worst_bc:.1e}, hub−authority {worst_hits:.1e}, {elapsed:.2?}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_03_walktrap_planted() {
    let t0 = Instant::now();
    let g = bridged_cliques(8);
    let p = walktrap(&g, 4).unwrap();
    let expected: Vec<Vec<usize>> = vec![(0..8).collect(), (8..16).collect()];
    let exact = p.communities == expected;

    let mut good = 0;
    let mut agreements = Vec::new();
    for trial in 0..20 {
        let g = planted_two_block(&mut rng(300 + trial), 16, 16, 0.9, 0.05);
        let p = walktrap(&g, 4).unwrap();
        let a = two_block_agreement(&p, 16);
        agreements.push(a);
        if a >= 0.95 {
            good += 1;
        }
    }
    let elapsed = t0.elapsed();
    let pass = exact && good >= 18 && within(elapsed, 30);
    report(
        3,
        "walktrap planted recovery",
        pass,
        &format!(
            "bridged cliques split exactly: {exact}; {good}/20 planted trials ≥ 95% (min agreement {:.3}), {elapsed:.2?}",
            agreements.iter().copied().fold(1.0, f64::min)
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_04_truncated_svd() {
    let t0 = Instant::now();
    let mut r = rng(4);
    let (mut worst_sv, mut worst_orth): (f64, f64) = (0.0, 0.0);
    for i in 0..50 {
        let a = random_matrix(&mut r, 20, 15);
        let oracle = jacobi_singular_values(&a);
        let model = truncated_svd(
            &a,
            SvdParams {
                k: 5,
                seed: i,
                oversample: 10,
                power_iters: 4,
            },
        )
        .unwrap();
        for (s, o) in model.singular_values.iter().zip(&oracle) {
            worst_sv = worst_sv.max((s - o).abs() / o);
        }
        for p in 0..5 {
            for q in 0..5 {
                let dot: f64 = model.components[p]
                    .iter()
                    .zip(&model.components[q])
                    .map(|(x, y)| x * y)
                    .sum();
                let target = if p == q { 1.0 } else { 0.0 };
                worst_orth = worst_orth.max((dot - target).abs());
            }
        }
    }
    let elapsed = t0.elapsed();
    let pass = worst_sv <= 1e-6 && worst_orth <= 1e-8 && within(elapsed, 10);
    report(
        4,
        "truncated SVD accuracy",
        pass,
        &format!(
            "50 matrices 20×15, k=5: max σ rel. error {worst_sv:.1e}, max |VᵀV−I| {worst_orth:.1e}, {elapsed:.2?}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_05_gradient_check() {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    let mut n_params = 0;
    for seed in 0..5 {
        let (params, batch) = gradient_fixture(seed);
        let refs: Vec<(&FeatureBundle, f64)> = batch.iter().map(|(x, y)| (x, *y)).collect();
        let (_, g) = loss_and_grad(&params, &refs).unwrap();
        let numeric = numeric_gradient(&params, &refs, 1e-6);
        worst = worst.max(max_relative_error(&g.tensors(), &numeric));
        n_params = params.parameter_count();
    }
    let elapsed = t0.elapsed();
    let pass = worst < 1e-4 && within(elapsed, 10);
    report(
        5,
        "gradient correctness",
        pass,
        &format!("5 seeds × {n_params} parameters, h=1e-6: max relative error {worst:.2e}, {elapsed:.2?}"),
    );
    assert!(pass);
}

fn synthetic_config(dir: &Path, seed: u64) -> PipelineConfig {
    let mut cfg = PipelineConfig {
        seed,
        ..PipelineConfig::default()
    };
    cfg.synth = SyntheticSpec {
        seed,
        ..SyntheticSpec::default()
    };
    cfg.paths.run_dir = dir.join("run");
    cfg.paths.synth_output = Some(dir.join("synthetic.jsonl"));
    cfg.paths.corpus = cfg.paths.synth_output.clone();
    cfg.features.svd_k = 16;
    cfg.features.valid_fraction = 0.25;
    cfg.train.epochs = 30;
    cfg
}

#[test]
fn criterion_06_classifier_on_synthetic() {
    let t0 = Instant::now();
    let mut scores = Vec::new();
    for seed in 1..=3 {
        let dir = tempfile::tempdir().unwrap();
        let cfg = synthetic_config(dir.path(), seed);
        run_stage(Stage::Synth, &cfg).unwrap();
        run_stage(Stage::Pipeline, &cfg).unwrap();
        let report: MetricsReport = read_json(&cfg.paths.run_dir.join("metrics.json"), "report").unwrap();
        assert_eq!(report.n_samples, 500);
        scores.push(report.metrics);
    }
    let elapsed = t0.elapsed();
    let f1s: Vec<String> = scores.iter().map(|m: &Metrics| format!("{:.4}", m.f1)).collect();
    let pass = scores.iter().all(|m| m.f1 >= 0.90) && within(elapsed, 120);
    report(
        6,
        "synthetic classifier f1 ≥ 0.90",
        pass,
        &format!("seeds 1..3 f1 = [{}], {elapsed:.2?}", f1s.join(", ")),
    );
    assert!(pass);
}

#[test]
fn criterion_07_bot_community_isolation() {
    let mut details = Vec::new();
    let mut pass = true;
    for seed in 1..=3 {
        let s = generate_synthetic(&SyntheticSpec {
            seed,
            ..SyntheticSpec::default()
        })
        .unwrap();
        let g = build_user_graph(&s.corpus, EdgeMode::AuthorRetweeter);
        let p = walktrap(&g, 4).unwrap();
        let iso = isolation_metrics(&g, &p).unwrap();
        let mut bot_iso = Vec::new();
        let mut organic_iso = Vec::new();
        for c in &iso.communities {
            let members = &p.communities[c.community];
            let bots = members.iter().filter(|&&v| s.is_bot(&g.names()[v])).count();
            let share = bots as f64 / members.len() as f64;
            if share >= 0.8 {
                bot_iso.push(c.isolation);
            } else if share < 0.2 {
                organic_iso.push(c.isolation);
            }
        }
        organic_iso.sort_by(f64::total_cmp);
        let median = match organic_iso.len() {
            0 => f64::NAN,
            n if n % 2 == 1 => organic_iso[n / 2],
            n => 0.5 * (organic_iso[n / 2 - 1] + organic_iso[n / 2]),
        };
        let ok = !bot_iso.is_empty() && !organic_iso.is_empty() && bot_iso.iter().all(|&b| b < median);
        pass &= ok;
        details.push(format!(
            "seed {seed}: bot communities {:?} vs organic median {median:.4} ({} organic)",
            bot_iso.iter().map(|b| format!("{b:.4}")).collect::<Vec<_>>(),
            organic_iso.len()
        ));
    }
    report(7, "bot communities more isolated", pass, &details.join("; "));
    assert!(pass);
}

fn fixture(rel: &str) -> String {
    fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)).unwrap()
}

#[test]
fn criterion_08_prompt_golden() {
    let input = fixture("prompts/input.txt");
    let mut failures = Vec::new();
    for task in TaskKind::ALL {
        let golden = fixture(&format!("prompts/{}.txt", task.name()));
        let built = build_prompt(task, &input, None).unwrap();
        if built.as_bytes() != golden.as_bytes() {
            failures.push(task.name());
        }
    }
    let pass = failures.is_empty();
    report(
        8,
        "prompt golden files",
        pass,
        &format!("5 task kinds, byte mismatches: {failures:?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_09_appendix_parse() {
    let expected = [
        (10, "The Left", Sentiment::Negative),
        (7, "Dr. Ben Carson", Sentiment::Positive),
        (11, "Hillary Clinton", Sentiment::Negative),
        (4, "Harry Reid", Sentiment::Negative),
        (10, "The View", Sentiment::Neutral),
    ];
    let mut got = Vec::new();
    let mut pass = true;
    for (i, (count, entity, sentiment)) in expected.iter().enumerate() {
        let records = parse_entity_sentiments(&fixture(&format!("appendix/response_{}.txt", i + 1))).unwrap();
        pass &= records.len() == *count && records[0].entity == *entity && records[0].sentiment == *sentiment;
        got.push(format!(
            "{} ({}/{})",
            records.len(),
            records[0].entity,
            records[0].sentiment
        ));
    }
    report(9, "appendix entity-sentiment parse", pass, &got.join(", "));
    assert!(pass);
}

#[test]
fn criterion_10_finetune_config_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig::default();
    cfg.paths.run_dir = dir.path().to_path_buf();
    run_stage(Stage::EmitConfig, &cfg).unwrap();
    let written = fs::read_to_string(dir.path().join("finetune_config.json")).unwrap();
    let expected = "{\n  \"model_name\": \"meta-llama/Llama-2-7b-chat-hf\",\n  \"learning_rate\": 5e-4,\n  \"num_train_epochs\": 10,\n  \"max_seq_length\": 2048,\n  \"gradient_accumulation_steps\": 2,\n  \"load_in_4bit\": true,\n  \"bnb_4bit_quant_type\": \"nf4\",\n  \"lr_scheduler_type\": \"linear\"\n}\n";
    let (_, doc) = emit_finetune_config(&FinetuneOverrides::default()).unwrap();
    let pass = written == expected && doc == expected;
    report(
        10,
        "fine-tune config defaults",
        pass,
        &format!(
            "{} keys, byte-identical to reference: {pass}",
            written.lines().count() - 2
        ),
    );
    assert!(pass, "{written}");
}

#[test]
fn criterion_11_determinism_sweep() {
    let mut runs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let cfg = synthetic_config(dir.path(), 11);
        run_stage(Stage::Synth, &cfg).unwrap();
        run_stage(Stage::Pipeline, &cfg).unwrap();
        let metrics = fs::read(cfg.paths.run_dir.join("metrics.json")).unwrap();
        let manifest = read_manifest(&cfg.paths.run_dir).unwrap();
        let hashes: Vec<(String, String)> = manifest
            .artifacts
            .iter()
            .filter(|e| !e.name.starts_with('/'))
            .map(|e| (e.name.clone(), e.sha256.clone()))
            .collect();
        runs.push((metrics, hashes, dir));
    }
    let same_metrics = runs[0].0 == runs[1].0;
    let same_hashes = runs[0].1 == runs[1].1;
    let pass = same_metrics && same_hashes && runs[0].1.len() >= 6;
    report(
        11,
        "pipeline determinism",
        pass,
        &format!(
            "metrics identical: {same_metrics}; {} artifact hashes identical: {same_hashes}",
            runs[0].1.len()
        ),
    );
    assert!(pass);
}
