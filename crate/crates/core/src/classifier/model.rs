//! Network topology, initialisation, forward pass, loss and gradients.
//!
//! ```text
//! text_ids  -> mean(E_text[id != 0])   -> dense+relu --\
//! mixed_ids -> mean(E_mixed[id != 0])  -> dense+relu ---+-> concat -> dense+relu -> dense(1) -> sigmoid
//! svd_vec ++ sentiment_vec             -> dense+relu --/
//! external_vec (optional)              -> dense+relu -/
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::features::FeatureBundle;

pub const LOGIT_CLAMP: f64 = 30.0;
pub const PROB_CLIP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub text_vocab: usize,
    pub mixed_vocab: usize,
    pub text_dim: usize,
    pub mixed_dim: usize,
    /// Length of `svd_vec` plus `sentiment_vec`.
    pub dense_dim: usize,
    /// Length of `external_vec`; 0 disables that branch.
    #[serde(default)]
    pub external_dim: usize,
    pub text_hidden: usize,
    pub mixed_hidden: usize,
    pub dense_hidden: usize,
    #[serde(default)]
    pub external_hidden: usize,
    pub head_hidden: usize,
    pub seed: u64,
}

impl ModelConfig {
    /// Defaults for the hidden sizes given the input shapes.
    pub fn new(text_vocab: usize, mixed_vocab: usize, dense_dim: usize, seed: u64) -> Self {
        ModelConfig {
            text_vocab,
            mixed_vocab,
            text_dim: 16,
            mixed_dim: 16,
            dense_dim,
            external_dim: 0,
            text_hidden: 16,
            mixed_hidden: 16,
            dense_hidden: 16,
            external_hidden: 0,
            head_hidden: 16,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let named = [
            ("text_vocab", self.text_vocab),
            ("mixed_vocab", self.mixed_vocab),
            ("text_dim", self.text_dim),
            ("mixed_dim", self.mixed_dim),
            ("dense_dim", self.dense_dim),
            ("text_hidden", self.text_hidden),
            ("mixed_hidden", self.mixed_hidden),
            ("dense_hidden", self.dense_hidden),
            ("head_hidden", self.head_hidden),
        ];
        for (name, v) in named {
            if v == 0 {
                return Err(ModelError::Config(format!("{name} must be at least 1")));
            }
        }
        if self.external_dim > 0 && self.external_hidden == 0 {
            return Err(ModelError::Config("external_hidden must be at least 1".into()));
        }
        Ok(())
    }

    fn concat_width(&self) -> usize {
        self.text_hidden
            + self.mixed_hidden
            + self.dense_hidden
            + if self.external_dim > 0 { self.external_hidden } else { 0 }
    }
}

/// Fully connected layer, `w` row-major `n_out × n_in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Dense {
    fn zeros(n_in: usize, n_out: usize) -> Self {
        Dense {
            n_in,
            n_out,
            w: vec![0.0; n_in * n_out],
            b: vec![0.0; n_out],
        }
    }

    fn uniform(n_in: usize, n_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (n_in as f64).sqrt();
        Dense {
            n_in,
            n_out,
            w: (0..n_in * n_out).map(|_| rng.gen_range(-bound..=bound)).collect(),
            b: vec![0.0; n_out],
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_out)
            .map(|o| {
                let row = &self.w[o * self.n_in..(o + 1) * self.n_in];
                self.b[o] + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>()
            })
            .collect()
    }

    /// Accumulates `dW += dy ⊗ x`, `db += dy`; returns `Wᵀ dy`.
    fn backward(&self, x: &[f64], dy: &[f64], grad: &mut Dense) -> Vec<f64> {
        let mut dx = vec![0.0; self.n_in];
        for (o, &g) in dy.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grad.b[o] += g;
            let base = o * self.n_in;
            for i in 0..self.n_in {
                grad.w[base + i] += g * x[i];
                dx[i] += g * self.w[base + i];
            }
        }
        dx
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub config: ModelConfig,
    /// `text_vocab × text_dim`, row-major.
    pub text_emb: Vec<f64>,
    /// `mixed_vocab × mixed_dim`, row-major.
    pub mixed_emb: Vec<f64>,
    pub text_proj: Dense,
    pub mixed_proj: Dense,
    pub dense_proj: Dense,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_proj: Option<Dense>,
    pub head: Dense,
    pub out: Dense,
}

/// Embedding rows and weights uniform in `±1/sqrt(fan_in)`, biases zero.
/// For embedding tables the fan-in is the embedding width.
pub fn init_params(config: &ModelConfig) -> Result<ModelParams, ModelError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let table = |rows: usize, dim: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
        let bound = 1.0 / (dim as f64).sqrt();
        (0..rows * dim).map(|_| rng.gen_range(-bound..=bound)).collect()
    };
    let text_emb = table(config.text_vocab, config.text_dim, &mut rng);
    let mixed_emb = table(config.mixed_vocab, config.mixed_dim, &mut rng);
    let text_proj = Dense::uniform(config.text_dim, config.text_hidden, &mut rng);
    let mixed_proj = Dense::uniform(config.mixed_dim, config.mixed_hidden, &mut rng);
    let dense_proj = Dense::uniform(config.dense_dim, config.dense_hidden, &mut rng);
    let external_proj =
        (config.external_dim > 0).then(|| Dense::uniform(config.external_dim, config.external_hidden, &mut rng));
    let head = Dense::uniform(config.concat_width(), config.head_hidden, &mut rng);
    let out = Dense::uniform(config.head_hidden, 1, &mut rng);
    Ok(ModelParams {
        config: *config,
        text_emb,
        mixed_emb,
        text_proj,
        mixed_proj,
        dense_proj,
        external_proj,
        head,
        out,
    })
}

impl ModelParams {
    /// Same shapes, all zeros. Used as a gradient accumulator.
    pub fn zeros_like(&self) -> ModelParams {
        let z = |d: &Dense| Dense::zeros(d.n_in, d.n_out);
        ModelParams {
            config: self.config,
            text_emb: vec![0.0; self.text_emb.len()],
            mixed_emb: vec![0.0; self.mixed_emb.len()],
            text_proj: z(&self.text_proj),
            mixed_proj: z(&self.mixed_proj),
            dense_proj: z(&self.dense_proj),
            external_proj: self.external_proj.as_ref().map(z),
            head: z(&self.head),
            out: z(&self.out),
        }
    }

    /// Every tensor in a fixed order.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = vec![&self.text_emb, &self.mixed_emb];
        let mut dense: Vec<&Dense> = vec![&self.text_proj, &self.mixed_proj, &self.dense_proj];
        dense.extend(self.external_proj.as_ref());
        dense.push(&self.head);
        dense.push(&self.out);
        for d in dense {
            v.push(&d.w);
            v.push(&d.b);
        }
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut v: Vec<&mut Vec<f64>> = vec![&mut self.text_emb, &mut self.mixed_emb];
        let mut dense: Vec<&mut Dense> = vec![&mut self.text_proj, &mut self.mixed_proj, &mut self.dense_proj];
        dense.extend(self.external_proj.as_mut());
        dense.push(&mut self.head);
        dense.push(&mut self.out);
        for d in dense {
            v.push(&mut d.w);
            v.push(&mut d.b);
        }
        v
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    fn check(&self, x: &FeatureBundle) -> Result<(), ModelError> {
        let c = &self.config;
        if let Some(&id) = x.text_ids.iter().find(|&&i| i as usize >= c.text_vocab) {
            return Err(ModelError::Shape(format!("text id {id} >= vocab {}", c.text_vocab)));
        }
        if let Some(&id) = x.mixed_ids.iter().find(|&&i| i as usize >= c.mixed_vocab) {
            return Err(ModelError::Shape(format!("mixed id {id} >= vocab {}", c.mixed_vocab)));
        }
        let dense = x.svd_vec.len() + x.sentiment_vec.as_ref().map_or(0, Vec::len);
        if dense != c.dense_dim {
            return Err(ModelError::Shape(format!(
                "dense input has {dense} values, model expects {}",
                c.dense_dim
            )));
        }
        let ext = x.external_vec.as_ref().map_or(0, Vec::len);
        if ext != c.external_dim {
            return Err(ModelError::Shape(format!(
                "external input has {ext} values, model expects {}",
                c.external_dim
            )));
        }
        Ok(())
    }
}

fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.max(0.0)).collect()
}

fn relu_back(pre: &[f64], dy: &[f64]) -> Vec<f64> {
    pre.iter()
        .zip(dy)
        .map(|(&p, &g)| if p > 0.0 { g } else { 0.0 })
        .collect()
}

fn mean_embedding(table: &[f64], dim: usize, ids: &[u32]) -> (Vec<f64>, usize) {
    let mut s = vec![0.0; dim];
    let mut count = 0;
    for &id in ids.iter().filter(|&&i| i != 0) {
        let row = &table[id as usize * dim..(id as usize + 1) * dim];
        s.iter_mut().zip(row).for_each(|(a, b)| *a += b);
        count += 1;
    }
    if count > 0 {
        s.iter_mut().for_each(|a| *a /= count as f64);
    }
    (s, count)
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Intermediate values of one forward pass, kept for backpropagation.
struct Trace {
    text_mean: Vec<f64>,
    text_count: usize,
    text_pre: Vec<f64>,
    mixed_mean: Vec<f64>,
    mixed_count: usize,
    mixed_pre: Vec<f64>,
    dense_in: Vec<f64>,
    dense_pre: Vec<f64>,
    ext_in: Vec<f64>,
    ext_pre: Vec<f64>,
    concat: Vec<f64>,
    head_pre: Vec<f64>,
    head_act: Vec<f64>,
    raw_logit: f64,
    prob: f64,
}

fn trace(p: &ModelParams, x: &FeatureBundle) -> Result<Trace, ModelError> {
    p.check(x)?;
    let c = &p.config;
    let (text_mean, text_count) = mean_embedding(&p.text_emb, c.text_dim, &x.text_ids);
    let text_pre = p.text_proj.apply(&text_mean);
    let (mixed_mean, mixed_count) = mean_embedding(&p.mixed_emb, c.mixed_dim, &x.mixed_ids);
    let mixed_pre = p.mixed_proj.apply(&mixed_mean);
    let mut dense_in = x.svd_vec.clone();
    if let Some(s) = &x.sentiment_vec {
        dense_in.extend_from_slice(s);
    }
    let dense_pre = p.dense_proj.apply(&dense_in);
    let ext_in = x.external_vec.clone().unwrap_or_default();
    let ext_pre = p.external_proj.as_ref().map(|d| d.apply(&ext_in)).unwrap_or_default();

    let mut concat = relu(&text_pre);
    concat.extend(relu(&mixed_pre));
    concat.extend(relu(&dense_pre));
    concat.extend(relu(&ext_pre));
    let head_pre = p.head.apply(&concat);
    let head_act = relu(&head_pre);
    let raw_logit = p.out.apply(&head_act)[0];
    let prob = sigmoid(raw_logit.clamp(-LOGIT_CLAMP, LOGIT_CLAMP));
    Ok(Trace {
        text_mean,
        text_count,
        text_pre,
        mixed_mean,
        mixed_count,
        mixed_pre,
        dense_in,
        dense_pre,
        ext_in,
        ext_pre,
        concat,
        head_pre,
        head_act,
        raw_logit,
        prob,
    })
}

/// Probability of the fake class, strictly inside (0, 1).
pub fn forward(params: &ModelParams, x: &FeatureBundle) -> Result<f64, ModelError> {
    trace(params, x).map(|t| t.prob)
}

fn bce(prob: f64, y: f64) -> f64 {
    let p = prob.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// Mean binary cross-entropy with probabilities clipped to `[1e-7, 1 - 1e-7]`.
pub fn loss(params: &ModelParams, batch: &[(&FeatureBundle, f64)]) -> Result<f64, ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let mut total = 0.0;
    for (x, y) in batch {
        check_label(*y)?;
        total += bce(forward(params, x)?, *y);
    }
    Ok(total / batch.len() as f64)
}

fn check_label(y: f64) -> Result<(), ModelError> {
    if y == 0.0 || y == 1.0 {
        Ok(())
    } else {
        Err(ModelError::BadLabel(y))
    }
}

/// Exact gradient of [`loss`] together with the loss value.
pub fn loss_and_grad(params: &ModelParams, batch: &[(&FeatureBundle, f64)]) -> Result<(f64, ModelParams), ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let c = params.config;
    let scale = 1.0 / batch.len() as f64;
    let mut g = params.zeros_like();
    let mut total = 0.0;
    for (x, y) in batch {
        check_label(*y)?;
        let t = trace(params, x)?;
        total += bce(t.prob, *y);

        let clamped = t.raw_logit.abs() > LOGIT_CLAMP;
        let clipped = t.prob < PROB_CLIP || t.prob > 1.0 - PROB_CLIP;
        if clamped || clipped {
            continue;
        }
        let d_logit = (t.prob - y) * scale;
        let d_head_act = params.out.backward(&t.head_act, &[d_logit], &mut g.out);
        let d_head_pre = relu_back(&t.head_pre, &d_head_act);
        let d_concat = params.head.backward(&t.concat, &d_head_pre, &mut g.head);

        let (d_text, rest) = d_concat.split_at(c.text_hidden);
        let (d_mixed, rest) = rest.split_at(c.mixed_hidden);
        let (d_dense, d_ext) = rest.split_at(c.dense_hidden);

        let d = relu_back(&t.text_pre, d_text);
        let d_mean = params.text_proj.backward(&t.text_mean, &d, &mut g.text_proj);
        scatter_mean(&mut g.text_emb, c.text_dim, &x.text_ids, t.text_count, &d_mean);

        let d = relu_back(&t.mixed_pre, d_mixed);
        let d_mean = params.mixed_proj.backward(&t.mixed_mean, &d, &mut g.mixed_proj);
        scatter_mean(&mut g.mixed_emb, c.mixed_dim, &x.mixed_ids, t.mixed_count, &d_mean);

        let d = relu_back(&t.dense_pre, d_dense);
        params.dense_proj.backward(&t.dense_in, &d, &mut g.dense_proj);

        if let (Some(layer), Some(grad)) = (&params.external_proj, g.external_proj.as_mut()) {
            let d = relu_back(&t.ext_pre, d_ext);
            layer.backward(&t.ext_in, &d, grad);
        }
    }
    Ok((total * scale, g))
}

pub fn grad(params: &ModelParams, batch: &[(&FeatureBundle, f64)]) -> Result<ModelParams, ModelError> {
    loss_and_grad(params, batch).map(|(_, g)| g)
}

fn scatter_mean(table: &mut [f64], dim: usize, ids: &[u32], count: usize, d_mean: &[f64]) {
    if count == 0 {
        return;
    }
    let w = 1.0 / count as f64;
    for &id in ids.iter().filter(|&&i| i != 0) {
        let row = &mut table[id as usize * dim..(id as usize + 1) * dim];
        row.iter_mut().zip(d_mean).for_each(|(r, d)| *r += w * d);
    }
}
