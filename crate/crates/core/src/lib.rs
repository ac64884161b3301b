#![forbid(unsafe_code)]
//! Disinformation analytics over labeled social-media corpora.
//!
//! The crate is organised as a set of loosely coupled stages that all read
//! from the same [`corpus::Corpus`]:
//!
//! - [`corpus`]: loading, filtering, labeling and splitting tweets
//! - [`trends`]: thematic-field time series
//! - [`itemsets`]: FP-growth frequent itemsets, association rules, semantic graph
//! - [`usergraph`]: author/retweeter graph, Walktrap communities, centralities,
//!   force-directed layout and community isolation
//! - [`features`]: vocabulary encoding, retweeter TF-IDF and randomized truncated SVD
//! - [`classifier`]: the concatenated embedding/SVD network, trained from scratch
//! - [`llm`]: prompt construction, endpoint client, entity-sentiment parsing and
//!   fine-tuning configuration
//! - [`synth`]: planted-amplification corpus generator
//! - [`pipeline`]: artifact-producing stages with a reproducibility manifest

pub mod classifier;
pub mod corpus;
pub mod export;
pub mod features;
pub mod itemsets;
pub mod llm;
pub mod pipeline;
pub mod synth;
pub mod text;
pub mod trends;
pub mod usergraph;

pub use classifier::{Metrics, ModelConfig, ModelParams, TrainConfig};
pub use corpus::{Corpus, CorpusFilter, Label, LabelRule, Tweet};
pub use features::{FeatureBundle, SvdModel, TfIdfMatrix, Vocab};
pub use itemsets::{AssociationRule, FrequentItemset, SemanticGraph, Transaction};
pub use llm::{EntitySentiment, FinetuneConfig, LlmEndpoint, TaskKind};
pub use synth::SyntheticSpec;
pub use trends::{BinWidth, TimeSeries};
pub use usergraph::{CentralityReport, IsolationReport, Partition, UserGraph};
