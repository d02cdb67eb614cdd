//! Losses, Adam and the mini-batch training loop.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, PreparedData};
use crate::diff::{sample_loss_gradient, Sample};
use crate::error::{Error, Result};
use crate::models::{Model, ParamVector};
use crate::pruning::{apply_mask, PruningMask};

/// Probabilities below this are clamped before taking the log.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// `-ln(max(probs[label], 1e-12))`
pub fn cross_entropy_loss(probs: &[f64], label: usize) -> Result<f64> {
    let p = probs
        .get(label)
        .ok_or_else(|| Error::Contract(format!("label {label} with {} classes", probs.len())))?;
    Ok(-p.max(PROBABILITY_FLOOR).ln())
}

/// Binary cross-entropy on a logit, `max(l, 0) - l·y + ln(1 + e^-|l|)`.
pub fn bce_with_logits_loss(logit: f64, label: usize) -> f64 {
    let y = label as f64;
    logit.max(0.0) - logit * y + (-logit.abs()).exp().ln_1p()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            weight_decay: 0.0,
            epochs: 100,
            batch_size: 16,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!("learning rate {}", self.learning_rate)));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::Config(format!("weight decay {}", self.weight_decay)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Per-epoch metrics of one training run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Running accuracy over the epoch's mini-batches, measured before each update.
    pub train_accuracy: Vec<f64>,
    pub val_accuracy: Vec<f64>,
    /// Mean mini-batch loss over the epoch.
    pub train_loss: Vec<f64>,
    /// Maximum of `val_accuracy`; 0 when no epoch ran.
    pub best_val_accuracy: f64,
}

impl TrainHistory {
    pub fn epochs(&self) -> usize {
        self.val_accuracy.len()
    }

    fn push(&mut self, train_acc: f64, val_acc: f64, loss: f64) {
        self.train_accuracy.push(train_acc);
        self.val_accuracy.push(val_acc);
        self.train_loss.push(loss);
        self.best_val_accuracy = self.best_val_accuracy.max(val_acc);
    }
}

/// First and second moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    /// Steps taken so far.
    pub fn step_index(&self) -> u64 {
        self.t
    }
}

/// One bias-corrected Adam update with L2 weight decay folded into the gradient.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    learning_rate: f64,
    weight_decay: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::Contract(format!(
            "adam lengths: {} params, {} grads, {} state",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::Numeric(format!("gradient entry {i} is {}", grads[i])));
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - ADAM_BETA1.powi(t);
    let c2 = 1.0 - ADAM_BETA2.powi(t);
    for i in 0..params.len() {
        let g = grads[i] + weight_decay * params[i];
        state.m[i] = ADAM_BETA1 * state.m[i] + (1.0 - ADAM_BETA1) * g;
        state.v[i] = ADAM_BETA2 * state.v[i] + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
    }
    Ok(())
}

/// Fraction of correctly classified rows.
pub fn evaluate(model: &Model, params: &[f64], data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Contract(format!("evaluating on empty split `{}`", data.name())));
    }
    let mut correct = 0usize;
    for (x, label) in data.samples() {
        if model.predict(params, x)? == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Mini-batch Adam with seeded per-epoch shuffling. Pruned weights are held
/// at zero throughout.
pub fn train(
    model: &Model,
    params: ParamVector,
    mask: &PruningMask,
    data: &PreparedData,
    config: &TrainConfig,
) -> Result<(ParamVector, TrainHistory)> {
    config.validate()?;
    mask.check_against(model.spec())?;
    if params.len() != model.parameter_count() {
        return Err(Error::Contract(format!(
            "{} parameters, model expects {}",
            params.len(),
            model.parameter_count()
        )));
    }
    if data.train.is_empty() {
        return Err(Error::Contract("empty training split".into()));
    }
    let mut params = params;
    apply_mask(&mut params, mask)?;
    let mut history = TrainHistory::default();
    let mut adam = AdamState::new(params.len());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut grad = vec![0.0; params.len()];

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / chunk.len() as f64;
            let mut batch_loss = 0.0;
            for &i in chunk {
                let (x, label): Sample = (data.train.row(i), data.train.label(i));
                let (loss, predicted) = sample_loss_gradient(model, &params, x, label, scale, &mut grad)?;
                if predicted == label {
                    correct += 1;
                }
                batch_loss += scale * loss;
            }
            for (g, &keep) in grad.iter_mut().zip(mask.bits()) {
                if !keep {
                    *g = 0.0;
                }
            }
            adam_step(&mut params, &grad, &mut adam, config.learning_rate, config.weight_decay)
                .map_err(|e| Error::Numeric(format!("epoch {}: {e}", epoch + 1)))?;
            apply_mask(&mut params, mask)?;
            loss_sum += batch_loss;
            batches += 1;
        }
        let val_acc = if data.validation.is_empty() {
            0.0
        } else {
            evaluate(model, &params, &data.validation)?
        };
        history.push(
            correct as f64 / data.train.len() as f64,
            val_acc,
            loss_sum / batches as f64,
        );
    }
    Ok((params, history))
}
