use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::matrix::Matrix;
use super::model::{Gradients, MlpModel, Workspace};
use super::optim::{adamw_step, AdamWConfig, OptimizerState};
use super::schedule::WarmRestartSchedule;
use super::NnError;

/// Epoch loss above which training is treated as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub lr_max: f64,
    pub lr_min: f64,
    /// Length of the first annealing cycle, in epochs.
    pub restart_epochs: usize,
    pub restart_mult: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamWConfig::default();
        Self {
            batch_size: 1000,
            epochs: 4000,
            lr_max: 1e-3,
            lr_min: 1e-6,
            restart_epochs: 10,
            restart_mult: 2.0,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
            weight_decay: adam.weight_decay,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if self.batch_size == 0 {
            return Err(NnError::InvalidConfig("batch_size must be positive"));
        }
        if !(self.lr_min > 0.0 && self.lr_min < self.lr_max && self.lr_max.is_finite()) {
            return Err(NnError::InvalidConfig("need 0 < lr_min < lr_max"));
        }
        if self.restart_epochs == 0 {
            return Err(NnError::InvalidConfig("restart_epochs must be positive"));
        }
        if !(self.restart_mult >= 1.0 && self.restart_mult.is_finite()) {
            return Err(NnError::InvalidConfig("restart_mult must be at least 1"));
        }
        if !(unit(self.beta1) && unit(self.beta2)) {
            return Err(NnError::InvalidConfig("beta1 and beta2 must lie in (0, 1)"));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(NnError::InvalidConfig("eps must be positive"));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(NnError::InvalidConfig("weight_decay must be nonnegative"));
        }
        Ok(())
    }

    pub fn adamw(&self) -> AdamWConfig {
        AdamWConfig { beta1: self.beta1, beta2: self.beta2, eps: self.eps, weight_decay: self.weight_decay }
    }

    /// Batch size actually used for `n_samples` rows; one partial batch when
    /// the dataset is smaller than `batch_size`.
    pub fn effective_batch(&self, n_samples: usize) -> usize {
        self.batch_size.min(n_samples).max(1)
    }

    pub fn steps_per_epoch(&self, n_samples: usize) -> usize {
        n_samples.div_ceil(self.effective_batch(n_samples))
    }

    pub fn schedule(&self, n_samples: usize) -> WarmRestartSchedule {
        WarmRestartSchedule {
            lr_max: self.lr_max,
            lr_min: self.lr_min,
            first_cycle_steps: (self.restart_epochs * self.steps_per_epoch(n_samples)) as u64,
            cycle_mult: self.restart_mult,
        }
    }
}

/// Learning rate at optimizer `step` for a dataset of `n_samples` rows.
pub fn lr_at(step: u64, config: &TrainConfig, n_samples: usize) -> f64 {
    config.schedule(n_samples).lr_at(step)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    /// Sample-weighted mean batch loss per epoch, L2 penalty included.
    pub epoch_losses: Vec<f64>,
    pub steps: u64,
}

pub fn train(model: &mut MlpModel, inputs: &Matrix, targets: &[f64], config: &TrainConfig) -> Result<TrainReport, NnError> {
    train_with_observer(model, inputs, targets, config, |_, _| {})
}

/// [`train`], calling `observer(epoch, loss)` after every epoch.
///
/// Sample order is reshuffled each epoch from a generator seeded with
/// `config.seed`; the run is bit-reproducible for a fixed seed.
pub fn train_with_observer(
    model: &mut MlpModel,
    inputs: &Matrix,
    targets: &[f64],
    config: &TrainConfig,
    mut observer: impl FnMut(usize, f64),
) -> Result<TrainReport, NnError> {
    config.validate()?;
    if inputs.cols() != model.input_width() {
        return Err(NnError::ShapeMismatch { expected: model.input_width(), got: inputs.cols() });
    }
    if inputs.rows() != targets.len() {
        return Err(NnError::ShapeMismatch { expected: inputs.rows(), got: targets.len() });
    }
    let n = inputs.rows();
    let mut report = TrainReport::default();
    if config.epochs == 0 {
        return Ok(report);
    }
    if n == 0 {
        return Err(NnError::EmptyBatch);
    }
    let batch = config.effective_batch(n);
    let schedule = config.schedule(n);
    let adam = config.adamw();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut ws = Workspace::new(model, batch);
    let mut grads = Gradients::zeros_like(model);
    let mut state = OptimizerState::new(model);
    let mut x_batch = Matrix::zeros(batch, inputs.cols());
    let mut y_batch = Vec::with_capacity(batch);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut weighted = 0.0;
        for chunk in order.chunks(batch) {
            x_batch.resize_rows(chunk.len());
            inputs.gather_rows_into(chunk, &mut x_batch);
            y_batch.clear();
            y_batch.extend(chunk.iter().map(|&i| targets[i]));
            model.forward_into(&x_batch, &mut ws)?;
            let batch_loss = model.backward_into(&x_batch, &y_batch, &mut ws, &mut grads)?;
            let lr = schedule.lr_at(report.steps);
            adamw_step(model, &grads, &mut state, lr, &adam)
                .map_err(|_| NnError::Diverged { epoch, loss: batch_loss })?;
            report.steps += 1;
            weighted += batch_loss * chunk.len() as f64;
        }
        let epoch_loss = weighted / n as f64;
        if !epoch_loss.is_finite() || epoch_loss > DIVERGENCE_LIMIT {
            return Err(NnError::Diverged { epoch, loss: epoch_loss });
        }
        report.epoch_losses.push(epoch_loss);
        observer(epoch, epoch_loss);
    }
    Ok(report)
}
