use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::corpus::Corpus;

/// Sparse row: `(column, value)` pairs with ascending, unique columns.
pub type SparseRow = Vec<(usize, f64)>;

/// Retweeter-username columns and their smoothed idf weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfModel {
    pub columns: Vec<String>,
    pub idf: Vec<f64>,
    pub n_docs: usize,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl TfIdfModel {
    pub fn reindex(&mut self) {
        self.index = self.columns.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// tf · idf over known usernames (unknown ones dropped), L2-normalised.
    pub fn transform(&self, retweeters: &[String]) -> SparseRow {
        let mut tf: HashMap<usize, f64> = HashMap::new();
        for r in retweeters {
            if let Some(c) = self.column(r) {
                *tf.entry(c).or_default() += 1.0;
            }
        }
        let mut row: SparseRow = tf.into_iter().map(|(c, f)| (c, f * self.idf[c])).collect();
        row.sort_by_key(|(c, _)| *c);
        let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, v) in &mut row {
                *v /= norm;
            }
        }
        row
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfMatrix {
    pub model: TfIdfModel,
    pub rows: Vec<SparseRow>,
}

impl TfIdfMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.model.columns.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_rows(), self.n_cols());
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] = v;
            }
        }
        m
    }
}

/// Rows are tweets, columns retweeter usernames in first-appearance order.
/// `tf` counts repeats within a list; `idf = ln((1 + N) / (1 + df)) + 1`.
pub fn tfidf(corpus: &Corpus) -> Result<TfIdfMatrix, FeatureError> {
    let mut columns: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut df: Vec<u64> = Vec::new();
    for t in corpus {
        let mut seen_here: Vec<usize> = Vec::new();
        for r in &t.retweeters {
            let c = *index.entry(r.clone()).or_insert_with(|| {
                columns.push(r.clone());
                df.push(0);
                columns.len() - 1
            });
            if !seen_here.contains(&c) {
                seen_here.push(c);
                df[c] += 1;
            }
        }
    }
    if columns.is_empty() {
        return Err(FeatureError::NoRetweeters);
    }
    let n = corpus.len() as f64;
    let idf = df.iter().map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0).collect();
    let model = TfIdfModel {
        columns,
        idf,
        n_docs: corpus.len(),
        index,
    };
    let rows = corpus.iter().map(|t| model.transform(&t.retweeters)).collect();
    Ok(TfIdfMatrix { model, rows })
}
