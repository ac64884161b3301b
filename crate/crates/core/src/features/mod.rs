//! Classifier inputs: token ids, mixed word/username ids and SVD components
//! of the retweeter TF-IDF matrix.

mod svd;
mod tfidf;
mod vocab;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Label, Tweet};

pub use svd::{fit_transform, truncated_svd, truncated_svd_tfidf, SvdModel, SvdParams, SVD_FORMAT, SVD_VERSION};
pub use tfidf::{tfidf, SparseRow, TfIdfMatrix, TfIdfModel};
pub use vocab::{build_vocab, encode, username_token, Vocab, UNKNOWN};

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("every retweeter list is empty; TF-IDF has no columns")]
    NoRetweeters,
    #[error("component count {k} outside 1..={max}")]
    BadRank { k: usize, max: usize },
    #[error("matrix is all zeros")]
    ZeroMatrix,
    #[error("artifact: {0}")]
    Persist(String),
}

/// One tweet's model input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBundle {
    pub text_ids: Vec<u32>,
    pub mixed_ids: Vec<u32>,
    pub svd_vec: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentiment_vec: Option<Vec<f64>>,
    /// Precomputed external text embedding, when supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_vec: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledBundle {
    pub id: String,
    pub label: Label,
    pub features: FeatureBundle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub min_freq: u64,
    pub text_len: usize,
    pub mixed_len: usize,
    pub svd: SvdParams,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            min_freq: 2,
            text_len: 32,
            mixed_len: 64,
            svd: SvdParams::default(),
        }
    }
}

/// Everything fitted on the training corpus that is needed to featurise new tweets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureModel {
    pub config: FeatureConfig,
    pub vocab: Vocab,
    pub tfidf: TfIdfModel,
    pub svd: SvdModel,
}

impl FeatureModel {
    pub fn fit(corpus: &Corpus, config: FeatureConfig) -> Result<Self, FeatureError> {
        let vocab = build_vocab(corpus, config.min_freq, true);
        let matrix = tfidf(corpus)?;
        let svd = truncated_svd_tfidf(&matrix, config.svd)?;
        Ok(FeatureModel {
            config,
            vocab,
            tfidf: matrix.model,
            svd,
        })
    }

    /// Rebuilds lookup tables dropped by serialisation.
    pub fn reindex(&mut self) {
        self.vocab.reindex();
        self.tfidf.reindex();
        self.svd.reindex();
    }

    pub fn featurize(&self, tweet: &Tweet) -> FeatureBundle {
        let (text_ids, mixed_ids) = encode(tweet, &self.vocab, self.config.text_len, self.config.mixed_len);
        let row = self.tfidf.transform(&tweet.retweeters);
        FeatureBundle {
            text_ids,
            mixed_ids,
            svd_vec: self.svd.project(&row),
            sentiment_vec: None,
            external_vec: None,
        }
    }

    /// Featurises every labeled tweet; unlabeled tweets are skipped.
    pub fn featurize_labeled(&self, corpus: &Corpus) -> Vec<LabeledBundle> {
        corpus
            .iter()
            .filter_map(|t| {
                t.label.map(|label| LabeledBundle {
                    id: t.id.clone(),
                    label,
                    features: self.featurize(t),
                })
            })
            .collect()
    }
}
