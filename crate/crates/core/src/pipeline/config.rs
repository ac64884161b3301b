use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::classifier::{ModelConfig, Optimizer, TrainConfig};
use crate::corpus::{CorpusFilter, CorpusFormat, CsvColumns, LabelRule};
use crate::features::{FeatureConfig, SvdParams};
use crate::llm::{FinetuneOverrides, LlmEndpoint, TaskKind};
use crate::synth::SyntheticSpec;
use crate::trends::BinWidth;
use crate::usergraph::{EdgeMode, LayoutParams, PageRankParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Input corpus read by `ingest`.
    pub corpus: Option<PathBuf>,
    pub format: CorpusFormat,
    pub csv: CsvColumns,
    /// Directory holding every artifact and the manifest.
    pub run_dir: PathBuf,
    /// Where `synth` writes its corpus; defaults to `synthetic.jsonl` in the run directory.
    pub synth_output: Option<PathBuf>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            corpus: None,
            format: CorpusFormat::Jsonl,
            csv: CsvColumns::default(),
            run_dir: PathBuf::from("run"),
            synth_output: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    pub min_retweets: usize,
    /// Inclusive Unix-second bounds.
    pub start: Option<u64>,
    pub end: Option<u64>,
    pub terms: Vec<String>,
}

impl FilterSection {
    pub fn build(&self) -> Result<CorpusFilter, PipelineError> {
        let range = match (self.start, self.end) {
            (None, None) => None,
            (s, e) => Some((s.unwrap_or(0), e.unwrap_or(u64::MAX))),
        };
        CorpusFilter::new(self.min_retweets, range, self.terms.iter().cloned())
            .map_err(|e| PipelineError::Config(format!("filter: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrendsSection {
    pub terms: Vec<String>,
    pub bin: BinWidth,
}

impl Default for TrendsSection {
    fn default() -> Self {
        TrendsSection {
            terms: Vec::new(),
            bin: BinWidth::Day,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ItemsetsSection {
    /// Absolute transaction count.
    pub min_support: u64,
    pub max_len: usize,
    pub min_confidence: f64,
    pub min_token_len: usize,
    /// Replaces the built-in English stopword list.
    pub stopwords: Option<PathBuf>,
}

impl Default for ItemsetsSection {
    fn default() -> Self {
        ItemsetsSection {
            min_support: 10,
            max_len: 4,
            min_confidence: 0.6,
            min_token_len: 3,
            stopwords: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSection {
    pub mode: EdgeMode,
    pub walk_steps: usize,
    pub damping: f64,
    pub layout_iterations: usize,
    pub layout_area: f64,
}

impl Default for GraphSection {
    fn default() -> Self {
        GraphSection {
            mode: EdgeMode::AuthorRetweeter,
            walk_steps: 4,
            damping: PageRankParams::default().damping,
            layout_iterations: 100,
            layout_area: 1e6,
        }
    }
}

impl GraphSection {
    pub fn pagerank(&self) -> PageRankParams {
        PageRankParams {
            damping: self.damping,
            ..PageRankParams::default()
        }
    }

    pub fn layout(&self, seed: u64) -> LayoutParams {
        LayoutParams {
            iterations: self.layout_iterations,
            area: self.layout_area,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesSection {
    pub min_freq: u64,
    pub text_len: usize,
    pub mixed_len: usize,
    pub svd_k: usize,
    pub svd_oversample: usize,
    pub svd_power_iters: usize,
    pub valid_fraction: f64,
    /// JSONL of `{"id", "entities": [...]}` from `extract-entities`.
    pub entities: Option<PathBuf>,
    /// Entities whose mean sentiment becomes a feature, in this order.
    pub entity_registry: Vec<String>,
    /// JSONL of `{"id", "vector": [...]}` precomputed text embeddings.
    pub external: Option<PathBuf>,
}

impl Default for FeaturesSection {
    fn default() -> Self {
        FeaturesSection {
            min_freq: 2,
            text_len: 32,
            mixed_len: 64,
            svd_k: 16,
            svd_oversample: 10,
            svd_power_iters: 4,
            valid_fraction: 0.25,
            entities: None,
            entity_registry: Vec::new(),
            external: None,
        }
    }
}

impl FeaturesSection {
    pub fn feature_config(&self, seed: u64) -> FeatureConfig {
        FeatureConfig {
            min_freq: self.min_freq,
            text_len: self.text_len,
            mixed_len: self.mixed_len,
            svd: SvdParams {
                k: self.svd_k,
                seed,
                oversample: self.svd_oversample,
                power_iters: self.svd_power_iters,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub text_dim: usize,
    pub mixed_dim: usize,
    pub text_hidden: usize,
    pub mixed_hidden: usize,
    pub dense_hidden: usize,
    pub external_hidden: usize,
    pub head_hidden: usize,
    pub threshold: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            optimizer: t.optimizer,
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            epochs: t.epochs,
            beta1: t.beta1,
            beta2: t.beta2,
            epsilon: t.epsilon,
            text_dim: 16,
            mixed_dim: 16,
            text_hidden: 16,
            mixed_hidden: 16,
            dense_hidden: 16,
            external_hidden: 16,
            head_hidden: 16,
            threshold: 0.5,
        }
    }
}

impl TrainSection {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            optimizer: self.optimizer,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            seed,
        }
    }

    pub fn model_config(&self, vocab: usize, dense_dim: usize, external_dim: usize, seed: u64) -> ModelConfig {
        ModelConfig {
            text_vocab: vocab,
            mixed_vocab: vocab,
            text_dim: self.text_dim,
            mixed_dim: self.mixed_dim,
            dense_dim,
            external_dim,
            text_hidden: self.text_hidden,
            mixed_hidden: self.mixed_hidden,
            dense_hidden: self.dense_hidden,
            external_hidden: if external_dim > 0 { self.external_hidden } else { 0 },
            head_hidden: self.head_hidden,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSection {
    pub endpoint: LlmEndpoint,
    pub task: TaskKind,
    pub question: Option<String>,
    /// Plain-text document to analyse; the ingested corpus is used when unset.
    pub input: Option<PathBuf>,
    /// Cap on tweets sent when analysing the corpus.
    pub max_tweets: usize,
    /// Response source for `extract-entities`: a plain-text response or an
    /// `analysis.jsonl`; defaults to the run directory's `analysis.jsonl`.
    pub responses: Option<PathBuf>,
}

impl Default for LlmSection {
    fn default() -> Self {
        LlmSection {
            endpoint: LlmEndpoint::default(),
            task: TaskKind::EntitySentiment,
            question: None,
            input: None,
            max_tweets: 100,
            responses: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub paths: PathsConfig,
    pub filter: FilterSection,
    pub labels: Vec<LabelRule>,
    pub trends: TrendsSection,
    pub itemsets: ItemsetsSection,
    pub graph: GraphSection,
    pub features: FeaturesSection,
    pub train: TrainSection,
    pub llm: LlmSection,
    pub finetune: FinetuneOverrides,
    pub synth: SyntheticSpec,
}

impl PipelineConfig {
    pub fn from_toml(src: &str) -> Result<Self, PipelineError> {
        toml::from_str(src).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let src = std::fs::read_to_string(path).map_err(|e| PipelineError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml(&src)
    }

    /// Overrides one value by dotted key, e.g. `train.epochs=5` or
    /// `features.entity_registry=["Ukraine","Russia"]`. The value is parsed as
    /// a TOML value, falling back to a plain string.
    pub fn set(&mut self, assignment: &str) -> Result<(), PipelineError> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| PipelineError::Config(format!("override '{assignment}' is not key=value")))?;
        let key = key.trim();
        let raw = raw.trim();
        let value: toml::Value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));

        let mut root = toml::Value::try_from(&*self).map_err(|e| PipelineError::Config(e.to_string()))?;
        let parts: Vec<&str> = key.split('.').collect();
        let mut slot = &mut root;
        for (i, part) in parts.iter().enumerate() {
            let table = slot
                .as_table_mut()
                .ok_or_else(|| PipelineError::Config(format!("'{key}': '{part}' is not inside a section")))?;
            if i + 1 == parts.len() {
                table.insert(part.to_string(), value.clone());
                break;
            }
            slot = table
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        }
        *self = root
            .try_into()
            .map_err(|e: toml::de::Error| PipelineError::Config(format!("'{key}': {e}")))?;
        Ok(())
    }

    /// Bounds that can be checked without touching the filesystem.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        self.filter.build()?;
        for r in &self.labels {
            LabelRule::new(r.kind, r.value.clone(), r.label)
                .map_err(|e| PipelineError::Config(format!("labels: {e}")))?;
        }
        if self.itemsets.min_support < 1 || self.itemsets.max_len < 1 {
            return bad("itemsets: min_support and max_len must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.itemsets.min_confidence) {
            return bad("itemsets: min_confidence must lie in [0, 1]".into());
        }
        if self.graph.walk_steps < 1 {
            return bad("graph: walk_steps must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.graph.damping) {
            return bad("graph: damping must lie in [0, 1)".into());
        }
        if self.graph.layout_area.is_nan() || self.graph.layout_area <= 0.0 {
            return bad("graph: layout_area must be positive".into());
        }
        let f = &self.features;
        if f.svd_k < 1 || f.text_len < 1 || f.mixed_len < 1 {
            return bad("features: svd_k, text_len and mixed_len must be at least 1".into());
        }
        if !(f.valid_fraction > 0.0 && f.valid_fraction < 1.0) {
            return bad("features: valid_fraction must lie strictly between 0 and 1".into());
        }
        if f.entities.is_some() && f.entity_registry.is_empty() {
            return bad("features: entities given but entity_registry is empty".into());
        }
        self.train
            .train_config(self.seed)
            .validate()
            .map_err(|e| PipelineError::Config(format!("train: {e}")))?;
        self.train
            .model_config(2, 1, 0, self.seed)
            .validate()
            .map_err(|e| PipelineError::Config(format!("train: {e}")))?;
        if !(0.0..=1.0).contains(&self.train.threshold) {
            return bad("train: threshold must lie in [0, 1]".into());
        }
        self.llm
            .endpoint
            .validate()
            .map_err(|e| PipelineError::Config(format!("llm: {e}")))?;
        Ok(())
    }

    /// The configuration minus filesystem locations: what gets embedded in
    /// artifacts, so that the same settings give byte-identical files
    /// wherever the run directory lives.
    pub fn provenance(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serialises");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("paths");
        }
        v
    }
}
