//! Randomized truncated SVD (Halko–Martinsson–Tropp range finder).

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::tfidf::{SparseRow, TfIdfMatrix};
use super::FeatureError;

pub const SVD_FORMAT: &str = "truncated-svd";
pub const SVD_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SvdParams {
    pub k: usize,
    pub seed: u64,
    pub oversample: usize,
    pub power_iters: usize,
}

impl Default for SvdParams {
    fn default() -> Self {
        SvdParams {
            k: 64,
            seed: 0,
            oversample: 10,
            power_iters: 4,
        }
    }
}

/// Top-`k` right singular basis with its spectrum and column registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdModel {
    pub format: String,
    pub version: u32,
    pub k: usize,
    /// Non-increasing.
    pub singular_values: Vec<f64>,
    /// `k` rows, one right singular vector each, over `columns`.
    pub components: Vec<Vec<f64>>,
    pub columns: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl SvdModel {
    pub fn reindex(&mut self) {
        self.index = self.columns.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
    }

    pub fn n_cols(&self) -> usize {
        self.components.first().map_or(0, Vec::len)
    }

    /// `row · V`, ignoring column indices outside the basis.
    pub fn project(&self, row: &SparseRow) -> Vec<f64> {
        self.components
            .iter()
            .map(|v| row.iter().filter_map(|&(j, x)| v.get(j).map(|vj| vj * x)).sum())
            .collect()
    }

    /// Projects a row given by column name; unknown names are dropped.
    pub fn project_named(&self, row: &[(String, f64)]) -> Vec<f64> {
        let sparse: SparseRow = row
            .iter()
            .filter_map(|(name, x)| self.index.get(name).map(|&j| (j, *x)))
            .collect();
        self.project(&sparse)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string(self)
    }

    pub fn from_json(s: &str) -> Result<Self, FeatureError> {
        let mut m: SvdModel = serde_json::from_str(s).map_err(|e| FeatureError::Persist(e.to_string()))?;
        if m.format != SVD_FORMAT || m.version != SVD_VERSION {
            return Err(FeatureError::Persist(format!(
                "unsupported svd artifact {} v{}",
                m.format, m.version
            )));
        }
        m.reindex();
        Ok(m)
    }
}

fn orthonormal_basis(y: DMatrix<f64>) -> DMatrix<f64> {
    y.qr().q()
}

/// Fits the model and also returns the training-row scores `U·Σ` (rows × k).
pub fn fit_transform(
    a: &DMatrix<f64>,
    columns: Vec<String>,
    params: SvdParams,
) -> Result<(SvdModel, DMatrix<f64>), FeatureError> {
    let (m, n) = a.shape();
    let k = params.k;
    if k < 1 || k > m.min(n) {
        return Err(FeatureError::BadRank { k, max: m.min(n) });
    }
    if a.iter().all(|&x| x == 0.0) {
        return Err(FeatureError::ZeroMatrix);
    }
    if !columns.is_empty() && columns.len() != n {
        return Err(FeatureError::Persist(format!(
            "{} column names for a matrix with {n} columns",
            columns.len()
        )));
    }
    let l = (k + params.oversample).min(m.min(n));

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let omega = DMatrix::<f64>::from_fn(n, l, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormal_basis(a * omega);
    for _ in 0..params.power_iters {
        let z = orthonormal_basis(a.transpose() * &q);
        q = orthonormal_basis(a * z);
    }
    let b = q.transpose() * a;
    let svd = b.svd(true, true);
    let u_small = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .total_cmp(&svd.singular_values[i])
            .then(i.cmp(&j))
    });
    order.truncate(k);

    let mut singular_values = Vec::with_capacity(k);
    let mut components = Vec::with_capacity(k);
    let mut scores = DMatrix::zeros(m, k);
    for (c, &i) in order.iter().enumerate() {
        let sigma = svd.singular_values[i];
        let mut v: Vec<f64> = v_t.row(i).iter().copied().collect();
        // Sign convention: the largest-magnitude entry is positive.
        let pivot = v
            .iter()
            .copied()
            .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        v.iter_mut().for_each(|x| *x *= sign);
        let u = &q * u_small.column(i) * (sign * sigma);
        scores.set_column(c, &u);
        singular_values.push(sigma);
        components.push(v);
    }
    let mut model = SvdModel {
        format: SVD_FORMAT.into(),
        version: SVD_VERSION,
        k,
        singular_values,
        components,
        columns,
        index: HashMap::new(),
    };
    model.reindex();
    Ok((model, scores))
}

pub fn truncated_svd(a: &DMatrix<f64>, params: SvdParams) -> Result<SvdModel, FeatureError> {
    fit_transform(a, Vec::new(), params).map(|(m, _)| m)
}

/// Fits on a TF-IDF matrix, registering its username columns.
pub fn truncated_svd_tfidf(matrix: &TfIdfMatrix, params: SvdParams) -> Result<SvdModel, FeatureError> {
    fit_transform(&matrix.to_dense(), matrix.model.columns.clone(), params).map(|(m, _)| m)
}
