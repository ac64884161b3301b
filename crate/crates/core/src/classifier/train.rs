use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{init_params, loss_and_grad, ModelParams};
use super::ModelError;
use crate::features::FeatureBundle;

pub const MODEL_FORMAT: &str = "concat-classifier";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    #[default]
    Adam,
}

impl std::str::FromStr for Optimizer {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sgd" => Ok(Optimizer::Sgd),
            "adam" => Ok(Optimizer::Adam),
            other => Err(format!("unknown optimizer '{other}' (expected sgd or adam)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: Optimizer::Adam,
            learning_rate: 1e-3,
            batch_size: 32,
            epochs: 30,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::TrainConfig(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.epochs < 1 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size < 1 {
            return bad("batch_size must be at least 1");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("adam betas must lie in [0, 1)");
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return bad("epsilon must be positive");
        }
        Ok(())
    }
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl Adam {
    fn new(params: &ModelParams) -> Self {
        let zeros: Vec<Vec<f64>> = params.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        Adam {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    fn step(&mut self, params: &mut ModelParams, grad: &ModelParams, cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        let grads = grad.tensors();
        for (k, p) in params.tensors_mut().into_iter().enumerate() {
            let (m, v, g) = (&mut self.m[k], &mut self.v[k], grads[k]);
            for i in 0..p.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                p[i] -= cfg.learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + cfg.epsilon);
            }
        }
    }
}

fn sgd_step(params: &mut ModelParams, grad: &ModelParams, lr: f64) {
    let grads = grad.tensors();
    for (k, p) in params.tensors_mut().into_iter().enumerate() {
        p.iter_mut().zip(grads[k]).for_each(|(p, g)| *p -= lr * g);
    }
}

/// Mini-batch training. Returns the trained parameters and, per epoch, the
/// sample-weighted mean of the batch losses seen during that epoch. An empty
/// dataset performs no steps and returns the parameters unchanged.
pub fn train(
    params: &ModelParams,
    data: &[(&FeatureBundle, f64)],
    config: &TrainConfig,
) -> Result<(ModelParams, Vec<f64>), ModelError> {
    config.validate()?;
    let mut params = params.clone();
    if data.is_empty() {
        return Ok((params, Vec::new()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = Adam::new(&params);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(&FeatureBundle, f64)> = chunk.iter().map(|&i| data[i]).collect();
            let (l, g) = loss_and_grad(&params, &batch)?;
            if !l.is_finite() {
                return Err(ModelError::Diverged { epoch, loss: l });
            }
            total += l * batch.len() as f64;
            match config.optimizer {
                Optimizer::Adam => adam.step(&mut params, &g, config),
                Optimizer::Sgd => sgd_step(&mut params, &g, config.learning_rate),
            }
        }
        let mean = total / data.len() as f64;
        if !mean.is_finite() || !params.is_finite() {
            return Err(ModelError::Diverged { epoch, loss: mean });
        }
        log::info!("epoch {epoch}/{}: loss {mean:.6}", config.epochs);
        history.push(mean);
    }
    Ok((params, history))
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    params: ModelParams,
}

pub fn save_params(params: &ModelParams) -> serde_json::Result<String> {
    serde_json::to_string(&ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        params: params.clone(),
    })
}

/// Parses a saved model, checking its format tag and that every tensor has
/// the shape implied by the embedded config.
pub fn load_params(s: &str) -> Result<ModelParams, ModelError> {
    let file: ModelFile = serde_json::from_str(s).map_err(|e| ModelError::Persist(e.to_string()))?;
    if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
        return Err(ModelError::Persist(format!(
            "unsupported model file {} v{}",
            file.format, file.version
        )));
    }
    let reference = init_params(&file.params.config)?;
    let shapes = |p: &ModelParams| p.tensors().iter().map(|t| t.len()).collect::<Vec<_>>();
    if shapes(&reference) != shapes(&file.params) {
        return Err(ModelError::Persist(
            "tensor shapes do not match the embedded config".into(),
        ));
    }
    if !file.params.is_finite() {
        return Err(ModelError::Persist("non-finite parameter".into()));
    }
    Ok(file.params)
}
