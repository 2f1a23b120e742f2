use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use lvo_core::rng::stream;

use crate::model::{Batch, FcnModel, LossKind};
use crate::FcnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    #[default]
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub loss: LossKind,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { optimizer: Optimizer::Adam, learning_rate: 1e-3, batch_size: 4, epochs: 20, loss: LossKind::BceDice, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainStatus {
    Completed,
    /// A non-finite loss or gradient appeared; the model is left at the
    /// last finite step.
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    pub config: TrainConfig,
    /// Batch loss of every completed step, measured before its update.
    pub loss_history: Vec<f64>,
    pub status: TrainStatus,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Mini-batch training with a per-epoch shuffle drawn from the seed.
pub fn train_fcn(mut model: FcnModel, data: &Batch, config: &TrainConfig) -> Result<(FcnModel, TrainState), FcnError> {
    if data.is_empty() {
        return Err(FcnError::EmptyBatch);
    }
    if !(config.learning_rate >= 0.0 && config.learning_rate.is_finite()) {
        return Err(FcnError::Train(format!("learning rate {} must be finite and ≥ 0", config.learning_rate)));
    }
    if config.batch_size == 0 {
        return Err(FcnError::Train("batch size must be ≥ 1".into()));
    }
    let mut m: Vec<Vec<f64>> = model.params().iter().map(|p| vec![0.0; p.data.len()]).collect();
    let mut v = m.clone();
    let mut state = TrainState { config: config.clone(), loss_history: Vec::new(), status: TrainStatus::Completed };
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut t = 0i32;
    for epoch in 0..config.epochs {
        order.sort_unstable();
        order.shuffle(&mut stream(config.seed, &format!("fcn-epoch-{epoch}")));
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(&[f64], &[f64])> = chunk.iter().map(|&i| data[i]).collect();
            let (loss, grads) = model.loss_and_grad(&batch, config.loss)?;
            if !loss.is_finite() || grads.iter().flatten().any(|g| !g.is_finite()) {
                state.status = TrainStatus::Diverged;
                return Ok((model, state));
            }
            state.loss_history.push(loss);
            if config.learning_rate == 0.0 {
                continue;
            }
            let snapshot: Vec<Vec<f64>> = model.params().iter().map(|p| p.data.clone()).collect();
            t += 1;
            let lr = config.learning_rate;
            for (k, p) in model.params_mut().iter_mut().enumerate() {
                let g = &grads[k];
                match config.optimizer {
                    Optimizer::Sgd => p.data.iter_mut().zip(g).for_each(|(w, gi)| *w -= lr * gi),
                    Optimizer::Adam => {
                        let (c1, c2) = (1.0 - BETA1.powi(t), 1.0 - BETA2.powi(t));
                        for i in 0..g.len() {
                            m[k][i] = BETA1 * m[k][i] + (1.0 - BETA1) * g[i];
                            v[k][i] = BETA2 * v[k][i] + (1.0 - BETA2) * g[i] * g[i];
                            p.data[i] -= lr * (m[k][i] / c1) / ((v[k][i] / c2).sqrt() + ADAM_EPS);
                        }
                    }
                }
            }
            if model.params().iter().any(|p| p.data.iter().any(|w| !w.is_finite())) {
                for (p, old) in model.params_mut().iter_mut().zip(snapshot) {
                    p.data = old;
                }
                state.status = TrainStatus::Diverged;
                return Ok((model, state));
            }
        }
    }
    Ok((model, state))
}
