use serde::{Deserialize, Serialize};

use super::model::{forward, ModelParams};
use super::ModelError;
use crate::features::FeatureBundle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    pub fn from_counts(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Metrics {
            precision,
            recall,
            f1,
            accuracy: ratio(tp + tn, tp + fp + tn + fn_),
            tp,
            fp,
            tn,
            fn_,
        }
    }

    /// Tallies `(predicted_fake, actually_fake)` pairs.
    pub fn from_predictions(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for (pred, truth) in pairs {
            match (pred, truth) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, false) => tn += 1,
                (false, true) => fn_ += 1,
            }
        }
        Self::from_counts(tp, fp, tn, fn_)
    }
}

/// Predicts fake when the probability reaches `threshold`.
pub fn evaluate(params: &ModelParams, data: &[(&FeatureBundle, f64)], threshold: f64) -> Result<Metrics, ModelError> {
    if data.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let mut pairs = Vec::with_capacity(data.len());
    for (x, y) in data {
        pairs.push((forward(params, x)? >= threshold, *y >= 0.5));
    }
    Ok(Metrics::from_predictions(pairs))
}
