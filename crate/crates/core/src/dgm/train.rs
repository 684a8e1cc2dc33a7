use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{BetaSchedule, LossBreakdown, SequenceVae};
use crate::error::{invalid, Result};
use crate::toy::TokenSeq;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    /// Heavy-ball SGD.
    Momentum { momentum: f64 },
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Multiply the learning rate by `lr_decay` every `lr_step` epochs.
    pub lr_step: usize,
    pub lr_decay: f64,
    /// Global gradient-norm ceiling.
    pub clip_norm: f64,
    pub optimizer: OptimizerKind,
}

impl TrainConfig {
    /// Initial training: step decay every 4 epochs.
    pub fn initial() -> Self {
        Self {
            batch_size: 128,
            learning_rate: 5e-4,
            lr_step: 4,
            lr_decay: 0.8,
            clip_norm: 5.0,
            optimizer: OptimizerKind::Momentum { momentum: 0.9 },
        }
    }

    /// Per-generation fine-tuning: step decay every 2 epochs.
    pub fn fine_tune() -> Self {
        Self {
            lr_step: 2,
            ..Self::initial()
        }
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        let steps = (epoch.saturating_sub(1) / self.lr_step.max(1)) as i32;
        self.learning_rate * libm::pow(self.lr_decay, steps as f64)
    }
}

struct OptimizerState {
    first: Vec<f64>,
    second: Vec<f64>,
    steps: u64,
}

impl OptimizerState {
    fn new(n: usize) -> Self {
        Self {
            first: vec![0.0; n],
            second: vec![0.0; n],
            steps: 0,
        }
    }

    fn step(&mut self, kind: OptimizerKind, lr: f64, params: &mut [f64], grad: &[f64]) {
        self.steps += 1;
        match kind {
            OptimizerKind::Momentum { momentum } => {
                for ((p, v), g) in params.iter_mut().zip(&mut self.first).zip(grad) {
                    *v = momentum * *v + g;
                    *p -= lr * *v;
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                let t = self.steps as f64;
                let c1 = 1.0 - libm::pow(beta1, t);
                let c2 = 1.0 - libm::pow(beta2, t);
                for (((p, m), v), g) in params.iter_mut().zip(&mut self.first).zip(&mut self.second).zip(grad) {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    *p -= lr * (*m / c1) / (libm::sqrt(*v / c2) + eps);
                }
            }
        }
    }
}

fn clip(grad: &mut [f64], max_norm: f64) {
    let norm = libm::sqrt(grad.iter().map(|g| g * g).sum::<f64>());
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
}

/// Minibatch training for `epochs` epochs.
///
/// The KL weight of epoch `e` is `beta.at(min(e, beta.total))`. Returns the
/// sample-weighted mean loss of every epoch.
#[allow(clippy::too_many_arguments)]
pub fn train<R: Rng + ?Sized>(
    model: &mut SequenceVae,
    data: &[TokenSeq],
    props: &[Vec<f64>],
    epochs: usize,
    alpha: f64,
    beta: &BetaSchedule,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<Vec<LossBreakdown>> {
    if data.is_empty() {
        return Err(invalid!("training set is empty"));
    }
    if props.len() != data.len() {
        return Err(invalid!("{} sequences but {} property rows", data.len(), props.len()));
    }
    if cfg.batch_size == 0 {
        return Err(invalid!("batch size must be positive"));
    }
    beta.validate()?;

    let mut state = OptimizerState::new(model.params().len());
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut log = Vec::with_capacity(epochs);
    for epoch in 1..=epochs {
        let b = beta.at(epoch.min(beta.total))?;
        let lr = cfg.lr_at(epoch);
        order.shuffle(rng);
        let mut sum = LossBreakdown::default();
        for chunk in order.chunks(cfg.batch_size) {
            let seqs: Vec<TokenSeq> = chunk.iter().map(|&i| data[i].clone()).collect();
            let ys: Vec<Vec<f64>> = chunk.iter().map(|&i| props[i].clone()).collect();
            let noise = model.draw_noise(chunk.len(), rng);
            let (loss, mut grad) = model.loss_and_grad(&seqs, &ys, alpha, b, &noise)?;
            clip(&mut grad, cfg.clip_norm);
            state.step(cfg.optimizer, lr, model.params_mut(), &grad);
            let w = chunk.len() as f64;
            sum.recon += loss.recon * w;
            sum.kl += loss.kl * w;
            sum.prop_mse += loss.prop_mse * w;
            sum.total += loss.total * w;
        }
        let n = data.len() as f64;
        log.push(LossBreakdown {
            recon: sum.recon / n,
            kl: sum.kl / n,
            prop_mse: sum.prop_mse / n,
            total: sum.total / n,
        });
    }
    Ok(log)
}
