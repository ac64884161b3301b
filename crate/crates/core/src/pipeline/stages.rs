use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::BufReader;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::artifacts::{read_json, read_jsonl, RunDir};
use super::config::PipelineConfig;
use super::PipelineError;
use crate::classifier::{evaluate, init_params, load_params, save_params, train, Metrics, ModelParams};
use crate::corpus::{self, apply_filter, apply_labels, split, Corpus, CorpusFormat};
use crate::features::{FeatureBundle, FeatureModel, LabeledBundle};
use crate::itemsets::{
    default_stopwords, derive_rules, mine_frequent, parse_stopwords, semantic_graph, to_transactions,
    write_itemsets_csv, write_rules_csv,
};
use crate::llm::{
    build_prompt, emit_finetune_config, parse_entity_sentiments, query_many, records_to_json, sentiment_features,
    EntitySentiment,
};
use crate::synth::generate_synthetic;
use crate::text::normalize_term;
use crate::trends::count_series;
use crate::usergraph::{annotated_graph, build_user_graph, centralities, isolation_metrics, layout_fr, walktrap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Ingest,
    Trends,
    Itemsets,
    Graph,
    Features,
    Train,
    Eval,
    Analyze,
    ExtractEntities,
    EmitConfig,
    Synth,
    Pipeline,
}

impl Stage {
    pub const ALL: [Stage; 12] = [
        Stage::Ingest,
        Stage::Trends,
        Stage::Itemsets,
        Stage::Graph,
        Stage::Features,
        Stage::Train,
        Stage::Eval,
        Stage::Analyze,
        Stage::ExtractEntities,
        Stage::EmitConfig,
        Stage::Synth,
        Stage::Pipeline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Trends => "trends",
            Stage::Itemsets => "itemsets",
            Stage::Graph => "graph",
            Stage::Features => "features",
            Stage::Train => "train",
            Stage::Eval => "eval",
            Stage::Analyze => "analyze",
            Stage::ExtractEntities => "extract-entities",
            Stage::EmitConfig => "emit-config",
            Stage::Synth => "synth",
            Stage::Pipeline => "pipeline",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = PipelineError;
    fn from_str(s: &str) -> Result<Self, PipelineError> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| PipelineError::Config(format!("unknown stage '{s}'")))
    }
}

pub const CORPUS: &str = "corpus.jsonl";
pub const FEATURE_MODEL: &str = "feature_model.json";
pub const TRAIN_FEATURES: &str = "train_features.jsonl";
pub const VALID_FEATURES: &str = "valid_features.jsonl";
pub const MODEL: &str = "model.json";
pub const METRICS: &str = "metrics.json";
pub const ANALYSIS: &str = "analysis.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub threshold: f64,
    pub n_samples: usize,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AnalysisRow {
    id: String,
    task: String,
    prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EntityRow {
    id: String,
    entities: Vec<EntitySentiment>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ExternalRow {
    id: String,
    vector: Vec<f64>,
}

/// Wraps any displayable module error with the stage name.
fn fail<E: fmt::Display>(stage: Stage) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::Stage {
        stage: stage.name(),
        message: e.to_string(),
    }
}

/// Runs one stage and returns its one-line summary. `Pipeline` chains
/// ingest → features → train → eval.
pub fn run_stage(stage: Stage, cfg: &PipelineConfig) -> Result<String, PipelineError> {
    cfg.validate()?;
    if stage == Stage::Pipeline {
        let mut parts = Vec::new();
        for s in [Stage::Ingest, Stage::Features, Stage::Train, Stage::Eval] {
            parts.push(run_single(s, cfg)?);
        }
        return Ok(parts.join("; "));
    }
    run_single(stage, cfg)
}

fn run_single(stage: Stage, cfg: &PipelineConfig) -> Result<String, PipelineError> {
    log::info!("stage {stage} starting in {}", cfg.paths.run_dir.display());
    let run = RunDir::open(&cfg.paths.run_dir, stage.name(), cfg.seed, cfg.provenance())?;
    match stage {
        Stage::Ingest => ingest(&run, cfg),
        Stage::Trends => trends(&run, cfg),
        Stage::Itemsets => itemsets(&run, cfg),
        Stage::Graph => graph(&run, cfg),
        Stage::Features => features(&run, cfg),
        Stage::Train => train_stage(&run, cfg),
        Stage::Eval => eval(&run, cfg),
        Stage::Analyze => analyze(&run, cfg),
        Stage::ExtractEntities => extract_entities(&run, cfg),
        Stage::EmitConfig => emit_config(&run, cfg),
        Stage::Synth => synth(&run, cfg),
        Stage::Pipeline => unreachable!("handled by run_stage"),
    }
}

fn load_run_corpus(run: &RunDir, stage: Stage) -> Result<Corpus, PipelineError> {
    corpus::load_corpus(&run.input(CORPUS)?, CorpusFormat::Jsonl).map_err(fail(stage))
}

fn jsonl_bytes(corpus: &Corpus, meta: &Value) -> Vec<u8> {
    let mut buf = Vec::new();
    corpus::write_jsonl(corpus, &mut buf, Some(meta)).expect("writing to memory");
    buf
}

fn with_header(run: &RunDir, body: Vec<u8>) -> Vec<u8> {
    let mut out = run.comment_header("#").into_bytes();
    out.extend(body);
    out
}

fn ingest(run: &RunDir, cfg: &PipelineConfig) -> Result<String, PipelineError> {
    let st = Stage::Ingest;
    let src = cfg
        .paths
        .corpus
        .as_ref()
        .ok_or_else(|| PipelineError::Config("paths.corpus is required for ingest".into()))?;
    if !src.is_file() {
        return Err(PipelineError::MissingInput {
            stage: st.name(),
            path: src.display().to_string(),
        });
    }
    let raw = match cfg.paths.format {
        CorpusFormat::Jsonl => corpus::load_corpus(src, CorpusFormat::Jsonl).map_err(fail(st))?,
        CorpusFormat::Csv => {
            let file = fs::File::open(src).map_err(fail(st))?;
            corpus::read_csv(BufReader::new(file), &cfg.paths.csv).map_err(fail(st))?
        }
    };
    let kept = apply_labels(&apply_filter(&raw, &cfg.filter.build()?), &cfg.labels);
    let labeled = kept.iter().filter(|t| t.label.is_some()).count();
    run.write(CORPUS, &jsonl_bytes(&kept, run.meta()))?;
    Ok(format!(
        "ingest: kept {} of {} tweets ({labeled} labeled) -> {CORPUS}",
        kept.len(),
        raw.len()
    ))
}

fn trends(run: &RunDir, cfg: &PipelineConfig) -> Result<String, PipelineError> {
    let st = Stage::Trends;
    let corpus = load_run_corpus(run, st)?;
    let terms: BTreeSet<String> = cfg
        .trends
        .terms
        .iter()
        .map(|t| normalize_term(t))
        .filter(|t| !t.is_empty())
        .collect();
    let series = count_series(&corpus, &terms, cfg.trends.bin).map_err(fail(st))?;
    let mut csv = Vec::new();
    series.write_csv(&mut csv).map_err(fail(st))?;
    run.write("trends.csv", &with_header(run, csv))?;
    let mut gp = Vec::new();
    series.write_gnuplot(&mut gp).map_err(fail(st))?;
    run.write("trends.dat", &with_header(run, gp))?;
    let peak = series.bins.iter().max_by_key(|(_, c)| *c).map_or(0, |(_, c)| *c);
    Ok(format!(
        "trends: {} matching tweets over {} {} bins (peak {peak}) -> trends.csv",
        series.total(),
        series.bins.len(),
        cfg.trends.bin
    ))
}

fn itemsets(run: &RunDir, cfg: &PipelineConfig) -> Result<String, PipelineError> {
    let st = Stage::Itemsets;
    let c = &cfg.itemsets;
    let corpus = load_run_corpus(run, st)?;
    let stopwords = match &c.stopwords {
        Some(p) => parse_stopwords(&fs::read_to_string(p).map_err(|e| PipelineError::Io {
            path: p.display().to_string(),
            message: e.to_string(),
        })?),
        None => default_stopwords(),
    };
    let transactions = to_transactions(&corpus, &stopwords, c.min_token_len);
    let frequent = mine_frequent(&transactions, c.min_support, c.max_len).map_err(fail(st))?;
    let rules = derive_rules(&frequent, c.min_confidence).map_err(fail(st))?;

    let mut buf = Vec::new();
    write_itemsets_csv(&frequent, &mut buf).map_err(fail(st))?;
    run.write("itemsets.csv", &with_header(run, buf))?;
    let mut buf = Vec::new();
    write_rules_csv(&rules, &mut buf).map_err(fail(st))?;
    run.write("rules.csv", &with_header(run, buf))?;

    let graph = semantic_graph(&frequent, transactions.len()).to_attr_graph(Some(run.meta().to_string()));
    let mut buf = Vec::new();
    graph.write_graphml(&mut buf).map_err(fail(st))?;
    run.write("semantic_graph.graphml", &buf)?;
    let mut buf = Vec::new();
    graph.write_dot(&mut buf).map_err(fail(st))?;
    run.write("semantic_graph.dot", &buf)?;
    Ok(format!(
        "itemsets: {} frequent itemsets, {} rules from {} transactions -> itemsets.csv, rules.csv",
        frequent.len(),
        rules.len(),
        transactions.len()
    ))
}

fn graph(run: &RunDir, cfg: &PipelineConfig) -> Result<String, PipelineError> {
    let st = Stage::Graph;
    let g = &cfg.graph;
    let corpus = load_run_corpus(run, st)?;
    let graph = build_user_graph(&corpus, g.mode);
    let partition = walktrap(&graph, g.walk_steps).map_err(fail(st))?;
    let report = centralities(&graph, g.pagerank()).map_err(fail(st))?;
    let positions = layout_fr(&graph, g.layout(cfg.seed));
    let isolation = isolation_metrics(&graph, &partition).map_err(fail(st))?;

    let attr = annotated_graph(&graph, &partition, &report, &positions, Some(run.meta().to_string()));
    let mut buf = Vec::new();
    attr.write_graphml(&mut buf).map_err(fail(st))?;
    run.write("user_graph.graphml", &buf)?;
    let mut buf = Vec::new();
    attr.write_dot(&mut buf).map_err(fail(st))?;
    run.write("user_graph.dot", &buf)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "user",
        "community",
        "pagerank",
        "hub",
        "authority",
        "betweenness",
        "x",
        "y",
    ])
    .map_err(fail(st))?;
    for (v, (x, y)) in positions.iter().enumerate() {
        w.write_record([
            graph.names()[v].clone(),
            partition.community_of[v].to_string(),
            report.pagerank[v].to_string(),
            report.hub[v].to_string(),
            report.authority[v].to_string(),
            report.betweenness[v].to_string(),
            x.to_string(),
            y.to_string(),
        ])
        .map_err(fail(st))?;
    }
    let buf = w.into_inner().map_err(fail(st))?;
    run.write("users.csv", &with_header(run, buf))?;

    let mut buf = Vec::new();
    isolation.write_csv(&mut buf).map_err(fail(st))?;
    run.write("isolation.csv", &with_header(run, buf))?;

    let most = isolation.communities.first();
    Ok(format!(
        "graph: {} users, {} edges, {} communities (modularity {:.4}); lowest isolation {} -> user_graph.graphml, isolation.csv",
        graph.len(),
        graph.edge_count(),
        partition.len(),
        partition.modularity,
        most.map_or("n/a".to_string(), |c| format!("{:.4} (community {}, {} users)", c.isolation, c.community, c.size)),
    ))
}

fn read_entity_rows(path: &Path) -> Result<HashMap<String, Vec<EntitySentiment>>, PipelineError> {
    let rows: Vec<EntityRow> = read_jsonl(path)?;
    let mut map: HashMap<String, Vec<EntitySentiment>> = HashMap::new();
    for r in rows {
        map.entry(r.id).or_default().extend(r.entities);
    }
    Ok(map)
}

fn attach_optional(bundles: &mut [LabeledBundle], cfg: &PipelineConfig, st: Stage) -> Result<(), PipelineError> {
    let f = &cfg.features;
    if let Some(path) = &f.entities {
        let map = read_entity_rows(path)?;
        for b in bundles.iter_mut() {
            let records = map.get(&b.id).map(Vec::as_slice).unwrap_or(&[]);
            b.features.sentiment_vec = Some(sentiment_features(records, &f.entity_registry));
        }
    }
    if let Some(path) = &f.external {
        let rows: Vec<ExternalRow> = read_jsonl(path)?;
        let dim = rows.first().map_or(0, |r| r.vector.len());
        let map: HashMap<String, Vec<f64>> = rows.into_iter().map(|r| (r.id, r.vector)).collect();
        for b in bundles.iter_mut() {
            let v = map.get(&b.id).ok_or_else(|| PipelineError::Stage {
                stage: st.name(),
                message: format!("no external vector for tweet {}", b.id),
            })?;
            if v.len() != dim || dim == 0 {
                return Err(PipelineError::Stage {
                    stage: st.name(),
                    message: format!(
                        "external vector for tweet {} has length {}, expected {dim}",
                        b.id,
                        v.len()
                    ),
                });
            }
            b.features.external_vec = Some(v.clone());
        }
    }
    Ok(())
}

fn features(run: &RunDir, cfg: &PipelineConfig) -> Result<String, PipelineError> {
    let st = Stage::Features;
    let corpus = load_run_corpus(run, st)?;
    let labeled = Corpus::new(corpus.iter().filter(|t| t.label.is_some()).cloned().collect()).map_err(fail(st))?;
    if labeled.is_empty() {
        return Err(PipelineError::Stage {
            stage: st.name(),
            message: "corpus has no labeled tweets".into(),
        });
    }
    let (train_set, valid_set) = split(&labeled, cfg.features.valid_fraction, cfg.seed).map_err(fail(st))?;
    let model = FeatureModel::fit(&train_set, cfg.features.feature_config(cfg.seed)).map_err(fail(st))?;
    let mut train_b = model.featurize_labeled(&train_set);
    let mut valid_b = model.featurize_labeled(&valid_set);
    attach_optional(&mut train_b, cfg, st)?;
    attach_optional(&mut valid_b, cfg, st)?;

    run.write_json(FEATURE_MODEL, "model", &model)?;
    run.write_jsonl(TRAIN_FEATURES, &train_b)?;
    run.write_jsonl(VALID_FEATURES, &valid_b)?;
    Ok(format!(
        "features: vocab {}, {} retweeter columns, svd k={} (top singular value {:.4}); {} train / {} valid -> {FEATURE_MODEL}",
        model.vocab.len(),
        model.tfidf.columns.len(),
        model.svd.k,
        model.svd.singular_values.first().copied().unwrap_or(0.0),
        train_b.len(),
        valid_b.len()
    ))
}

fn as_samples(bundles: &[LabeledBundle]) -> Vec<(&FeatureBundle, f64)> {
    bundles.iter().map(|b| (&b.features, b.label.as_f64())).collect()
}

fn load_model(path: &Path, st: Stage) -> Result<ModelParams, PipelineError> {
    let v: Value = read_json(path, "model")?;
    load_params(&v.to_string()).map_err(fail(st))
}

fn train_stage(run: &RunDir, cfg: &PipelineConfig) -> Result<String, PipelineError> {
    let st = Stage::Train;
    let features: FeatureModel = read_json(&run.input(FEATURE_MODEL)?, "model")?;
    let bundles: Vec<LabeledBundle> = read_jsonl(&run.input(TRAIN_FEATURES)?)?;
    let first = bundles.first().ok_or_else(|| PipelineError::Stage {
        stage: st.name(),
        message: "no training samples".into(),
    })?;
    let dense_dim = first.features.svd_vec.len() + first.features.sentiment_vec.as_ref().map_or(0, Vec::len);
    let external_dim = first.features.external_vec.as_ref().map_or(0, Vec::len);
    let model_cfg = cfg
        .train
        .model_config(features.vocab.len(), dense_dim, external_dim, cfg.seed);
    let init = init_params(&model_cfg).map_err(fail(st))?;
    let (params, history) = train(&init, &as_samples(&bundles), &cfg.train.train_config(cfg.seed)).map_err(fail(st))?;

    let saved: Value = serde_json::from_str(&save_params(&params).map_err(fail(st))?).map_err(fail(st))?;
    run.write_json(MODEL, "model", &saved)?;
    let mut csv = String::from("epoch,loss\n");
    for (i, l) in history.iter().enumerate() {
        csv.push_str(&format!("{},{l}\n", i + 1));
    }
    run.write("loss_history.csv", &with_header(run, csv.into_bytes()))?;
    Ok(format!(
        "train: {} samples, {} parameters, {} epochs, final loss {:.6} -> {MODEL}",
        bundles.len(),
        params.parameter_count(),
        history.len(),
        history.last().copied().unwrap_or(f64::NAN)
    ))
}

fn eval(run: &RunDir, cfg: &PipelineConfig) -> Result<String, PipelineError> {
    let st = Stage::Eval;
    let params = load_model(&run.input(MODEL)?, st)?;
    let bundles: Vec<LabeledBundle> = read_jsonl(&run.input(VALID_FEATURES)?)?;
    let metrics = evaluate(&params, &as_samples(&bundles), cfg.train.threshold).map_err(fail(st))?;
    let report = MetricsReport {
        threshold: cfg.train.threshold,
        n_samples: bundles.len(),
        metrics,
    };
    run.write_json(METRICS, "report", &report)?;
    Ok(format!(
        "eval: f1 {:.4}, precision {:.4}, recall {:.4}, accuracy {:.4} on {} tweets -> {METRICS}",
        metrics.f1,
        metrics.precision,
        metrics.recall,
        metrics.accuracy,
        bundles.len()
    ))
}

fn analyze(run: &RunDir, cfg: &PipelineConfig) -> Result<String, PipelineError> {
    let st = Stage::Analyze;
    let l = &cfg.llm;
    let docs: Vec<(String, String)> = match &l.input {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| PipelineError::Io {
                path: p.display().to_string(),
                message: e.to_string(),
            })?;
            vec![("input".to_string(), text)]
        }
        None => load_run_corpus(run, st)?
            .iter()
            .filter(|t| !t.text.trim().is_empty())
            .take(l.max_tweets)
            .map(|t| (t.id.clone(), t.text.clone()))
            .collect(),
    };
    let prompts: Vec<String> = docs
        .iter()
        .map(|(_, text)| build_prompt(l.task, text, l.question.as_deref()))
        .collect::<Result<_, _>>()
        .map_err(fail(st))?;
    let results = query_many(&l.endpoint, &prompts).map_err(fail(st))?;
    let mut ok = 0;
    let rows: Vec<AnalysisRow> = docs
        .iter()
        .zip(prompts)
        .zip(results)
        .map(|(((id, _), prompt), r)| {
            let (response, error) = match r {
                Ok(text) => {
                    ok += 1;
                    (Some(text), None)
                }
                Err(e) => {
                    log::warn!("analysis of {id} failed: {e}");
                    (None, Some(e.to_string()))
                }
            };
            AnalysisRow {
                id: id.clone(),
                task: l.task.to_string(),
                prompt,
                response,
                error,
            }
        })
        .collect();
    if ok == 0 && !rows.is_empty() {
        return Err(PipelineError::Stage {
            stage: st.name(),
            message: format!(
                "all {} requests failed; first error: {}",
                rows.len(),
                rows[0].error.clone().unwrap_or_default()
            ),
        });
    }
    run.write_jsonl(ANALYSIS, &rows)?;
    Ok(format!(
        "analyze: {ok} of {} {} responses -> {ANALYSIS}",
        rows.len(),
        l.task
    ))
}

fn extract_entities(run: &RunDir, cfg: &PipelineConfig) -> Result<String, PipelineError> {
    let st = Stage::ExtractEntities;
    let registry = &cfg.features.entity_registry;
    let source = match &cfg.llm.responses {
        Some(p) if p.is_file() => p.clone(),
        Some(p) => {
            return Err(PipelineError::MissingInput {
                stage: st.name(),
                path: p.display().to_string(),
            })
        }
        None => run.input(ANALYSIS)?,
    };
    let is_jsonl = source.extension().is_some_and(|e| e == "jsonl");
    if !is_jsonl {
        let text = fs::read_to_string(&source).map_err(|e| PipelineError::Io {
            path: source.display().to_string(),
            message: e.to_string(),
        })?;
        let records = parse_entity_sentiments(&text).map_err(fail(st))?;
        let mut doc = records_to_json(&records);
        doc.push('\n');
        run.write("entities.json", doc.as_bytes())?;
        if !registry.is_empty() {
            let values = sentiment_features(&records, registry);
            let mut csv = String::from("entity,sentiment\n");
            for (name, v) in registry.iter().zip(values) {
                csv.push_str(&format!("{},{v}\n", csv_field(name)));
            }
            run.write("sentiment_features.csv", &with_header(run, csv.into_bytes()))?;
        }
        return Ok(format!("extract-entities: {} records -> entities.json", records.len()));
    }

    let rows: Vec<AnalysisRow> = read_jsonl(&source)?;
    let mut out = Vec::new();
    let mut skipped = 0;
    for row in &rows {
        let Some(text) = &row.response else {
            skipped += 1;
            continue;
        };
        match parse_entity_sentiments(text) {
            Ok(entities) => out.push(EntityRow {
                id: row.id.clone(),
                entities,
            }),
            Err(e) => {
                log::warn!("no entities recovered for {}: {e}", row.id);
                skipped += 1;
            }
        }
    }
    run.write_jsonl("entities.jsonl", &out)?;
    let total: usize = out.iter().map(|r| r.entities.len()).sum();
    Ok(format!(
        "extract-entities: {total} records from {} responses ({skipped} skipped) -> entities.jsonl",
        out.len()
    ))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn emit_config(run: &RunDir, cfg: &PipelineConfig) -> Result<String, PipelineError> {
    let (ft, doc) = emit_finetune_config(&cfg.finetune).map_err(fail(Stage::EmitConfig))?;
    run.write("finetune_config.json", doc.as_bytes())?;
    Ok(format!(
        "emit-config: {} lr {:e}, {} epochs -> finetune_config.json",
        ft.model_name, ft.learning_rate, ft.num_train_epochs
    ))
}

fn synth(run: &RunDir, cfg: &PipelineConfig) -> Result<String, PipelineError> {
    let st = Stage::Synth;
    let generated = generate_synthetic(&cfg.synth).map_err(fail(st))?;
    let target = cfg
        .paths
        .synth_output
        .clone()
        .unwrap_or_else(|| run.path("synthetic.jsonl"));
    run.write_at(&target, &jsonl_bytes(&generated.corpus, run.meta()))?;
    run.write_json("bot_communities.json", "bot_communities", &generated.bot_communities)?;
    let fake = generated
        .corpus
        .iter()
        .filter(|t| t.label == Some(crate::corpus::Label::Fake))
        .count();
    Ok(format!(
        "synth: {} tweets ({fake} fake), {} bot communities -> {}",
        generated.corpus.len(),
        generated.bot_communities.len(),
        target.display()
    ))
}
