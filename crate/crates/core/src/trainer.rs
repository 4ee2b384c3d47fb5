//! SGD training loop: warmup-then-stepwise-decay learning rate schedules,
//! uniform weight decay, and an iteration budget counted in images.
//!
//! Updates are plain SGD without momentum, applied on a single thread, so
//! a run is bitwise deterministic given (initial model, data, config).

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::SoftmaxClassifier;
use crate::data::{ConstructedDataset, LabeledDataset, UnlabeledPool};
use crate::error::{Error, Result};

/// Schedule family. Selects the default decay shape: pre-training halves the
/// rate 13 times, fine-tuning cuts it to a tenth 3 times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Pretrain,
    Finetune,
}

/// Piecewise learning-rate schedule: linear warmup from `base_lr` to
/// `peak_lr` over the first `warmup_steps` steps, then `num_reductions`
/// multiplicative cuts by `reduction_factor` at equally spaced steps
/// strictly inside the post-warmup span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub kind: ScheduleKind,
    pub base_lr: f64,
    pub peak_lr: f64,
    pub warmup_steps: u64,
    pub total_steps: u64,
    pub num_reductions: u64,
    pub reduction_factor: f64,
}

/// Scaled peak rate for pre-training: 0.1 per 256 images of batch.
pub fn default_pretrain_peak_lr(batch_size: usize) -> f64 {
    0.1 * batch_size as f64 / 256.0
}

/// Scaled rate for fine-tuning: 0.00025 per 256 images of batch.
pub fn default_finetune_peak_lr(batch_size: usize) -> f64 {
    0.00025 * batch_size as f64 / 256.0
}

impl LrSchedule {
    pub fn new(
        kind: ScheduleKind,
        base_lr: f64,
        peak_lr: f64,
        warmup_steps: u64,
        total_steps: u64,
        num_reductions: u64,
        reduction_factor: f64,
    ) -> Result<Self> {
        if total_steps == 0 {
            return Err(Error::config("schedule: total_steps must be positive"));
        }
        if warmup_steps >= total_steps {
            return Err(Error::config(format!(
                "schedule: warmup_steps {warmup_steps} must be < total_steps {total_steps}"
            )));
        }
        if num_reductions == 0 {
            return Err(Error::config("schedule: num_reductions must be >= 1"));
        }
        if !(reduction_factor > 0.0 && reduction_factor < 1.0) {
            return Err(Error::config(format!(
                "schedule: reduction_factor {reduction_factor} must lie in (0, 1)"
            )));
        }
        // peak_lr = 0 is allowed so a schedule can express a deliberate
        // no-op run; base_lr may not exceed it.
        if !peak_lr.is_finite() || peak_lr < 0.0 {
            return Err(Error::config(format!(
                "schedule: peak_lr {peak_lr} must be finite and >= 0"
            )));
        }
        if !base_lr.is_finite() || base_lr < 0.0 || base_lr > peak_lr {
            return Err(Error::config(format!(
                "schedule: base_lr {base_lr} must lie in [0, peak_lr]"
            )));
        }
        Ok(Self {
            kind,
            base_lr,
            peak_lr,
            warmup_steps,
            total_steps,
            num_reductions,
            reduction_factor,
        })
    }

    /// Pre-training defaults: warmup over 5% of the run, 13 halvings.
    pub fn pretrain(peak_lr: f64, total_steps: u64) -> Result<Self> {
        Self::new(
            ScheduleKind::Pretrain,
            0.0,
            peak_lr,
            total_steps / 20,
            total_steps,
            13,
            0.5,
        )
    }

    /// Fine-tuning defaults: warmup over 5% of the run, 3 cuts to a tenth.
    pub fn finetune(peak_lr: f64, total_steps: u64) -> Result<Self> {
        Self::new(
            ScheduleKind::Finetune,
            0.0,
            peak_lr,
            total_steps / 20,
            total_steps,
            3,
            0.1,
        )
    }

    /// Learning rate for step `t` (0-based).
    ///
    /// Warmup: base + (peak - base) * t / max(W-1, 1). After warmup the rate
    /// is peak * factor^r where r counts the reduction points
    /// W + floor((T-W) * i / (R+1)), i in 1..=R, already passed.
    pub fn lr_at(&self, t: u64) -> Result<f64> {
        if t >= self.total_steps {
            return Err(Error::config(format!(
                "lr_at: step {t} outside [0, {})",
                self.total_steps
            )));
        }
        let w = self.warmup_steps;
        if t < w {
            let denom = (w - 1).max(1) as f64;
            return Ok(self.base_lr + (self.peak_lr - self.base_lr) * t as f64 / denom);
        }
        let span = self.total_steps - w;
        let mut reductions = 0u32;
        for i in 1..=self.num_reductions {
            if t >= w + span * i / (self.num_reductions + 1) {
                reductions += 1;
            }
        }
        Ok(self.peak_lr * self.reduction_factor.powi(reductions as i32))
    }
}

/// Training run parameters. `total_images` is the iteration budget counted
/// in images processed; the schedule must cover exactly
/// ceil(total_images / batch_size) steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub schedule: LrSchedule,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub total_images: u64,
    pub seed: u64,
    pub shuffle: bool,
}

pub const DEFAULT_WEIGHT_DECAY: f64 = 0.0001;

impl TrainConfig {
    pub fn new(schedule: LrSchedule, batch_size: usize, total_images: u64, seed: u64) -> Self {
        Self {
            schedule,
            weight_decay: DEFAULT_WEIGHT_DECAY,
            batch_size,
            total_images,
            seed,
            shuffle: true,
        }
    }

    /// Pre-training config with the scaled default peak rate.
    pub fn pretrain(batch_size: usize, total_images: u64, seed: u64) -> Result<Self> {
        let steps = steps_for(total_images, batch_size)?;
        let schedule = LrSchedule::pretrain(default_pretrain_peak_lr(batch_size), steps)?;
        Ok(Self::new(schedule, batch_size, total_images, seed))
    }

    /// Fine-tuning config with the scaled default rate.
    pub fn finetune(batch_size: usize, total_images: u64, seed: u64) -> Result<Self> {
        let steps = steps_for(total_images, batch_size)?;
        let schedule = LrSchedule::finetune(default_finetune_peak_lr(batch_size), steps)?;
        Ok(Self::new(schedule, batch_size, total_images, seed))
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("train: batch_size must be positive"));
        }
        if self.total_images == 0 {
            return Err(Error::config("train: total_images must be positive"));
        }
        if !self.weight_decay.is_finite() || self.weight_decay < 0.0 {
            return Err(Error::config(format!(
                "train: weight_decay {} must be finite and >= 0",
                self.weight_decay
            )));
        }
        let steps = steps_for(self.total_images, self.batch_size)?;
        if steps != self.schedule.total_steps {
            return Err(Error::config(format!(
                "train: schedule covers {} steps but ceil({} / {}) = {steps}",
                self.schedule.total_steps, self.total_images, self.batch_size
            )));
        }
        Ok(())
    }
}

fn steps_for(total_images: u64, batch_size: usize) -> Result<u64> {
    if batch_size == 0 {
        return Err(Error::config("train: batch_size must be positive"));
    }
    if total_images == 0 {
        return Err(Error::config("train: total_images must be positive"));
    }
    Ok(total_images.div_ceil(batch_size as u64))
}

/// Source of training examples.
///
/// `Constructed` entries reference pool examples by id; an id selected under
/// several labels yields that many independent training examples.
pub enum TrainData<'a> {
    Labeled(&'a LabeledDataset),
    Constructed {
        dataset: &'a ConstructedDataset,
        pool: &'a UnlabeledPool,
    },
}

/// One record per full pass over the data (plus a final partial pass).
/// `loss` is the image-weighted mean batch loss within the pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: u64,
    pub loss: f64,
    pub lr: f64,
    pub images_seen: u64,
}

fn resolve<'a>(
    data: &'a TrainData<'a>,
    model: &SoftmaxClassifier,
) -> Result<Vec<(&'a [f32], u32)>> {
    match data {
        TrainData::Labeled(ds) => {
            if ds.dim() != model.dim() {
                return Err(Error::data(format!(
                    "train: dataset dim {} != model dim {}",
                    ds.dim(),
                    model.dim()
                )));
            }
            if ds.num_classes() != model.num_classes() {
                return Err(Error::data(format!(
                    "train: dataset has {} classes but model has {}",
                    ds.num_classes(),
                    model.num_classes()
                )));
            }
            Ok(ds
                .examples()
                .iter()
                .map(|e| (e.features.as_slice(), e.label))
                .collect())
        }
        TrainData::Constructed { dataset, pool } => {
            if pool.dim() != model.dim() {
                return Err(Error::data(format!(
                    "train: pool dim {} != model dim {}",
                    pool.dim(),
                    model.dim()
                )));
            }
            let index: HashMap<_, _> = pool
                .examples()
                .iter()
                .enumerate()
                .map(|(i, e)| (e.id, i))
                .collect();
            dataset
                .entries()
                .iter()
                .map(|entry| {
                    if entry.label as usize >= model.num_classes() {
                        return Err(Error::data(format!(
                            "train: constructed label {} >= model classes {}",
                            entry.label,
                            model.num_classes()
                        )));
                    }
                    let i = index.get(&entry.id).ok_or_else(|| {
                        Error::data(format!("train: id {} not present in pool", entry.id))
                    })?;
                    Ok((pool.get(*i).features.as_slice(), entry.label))
                })
                .collect()
        }
    }
}

/// Run the budgeted SGD loop, mutating `model` in place.
///
/// Minibatches walk a shuffled index order; the order is re-shuffled with
/// the config RNG each time a pass completes, and a batch may straddle the
/// boundary so every step except the last processes exactly `batch_size`
/// images. Update rule: param <- param - lr * (grad + weight_decay * param).
pub fn train(
    model: &mut SoftmaxClassifier,
    data: &TrainData,
    config: &TrainConfig,
) -> Result<Vec<EpochMetrics>> {
    config.validate()?;
    let examples = resolve(data, model)?;
    if examples.is_empty() {
        return Err(Error::data("train: empty dataset"));
    }
    let n = examples.len();
    let total_steps = steps_for(config.total_images, config.batch_size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut cursor = n;

    let mut metrics = Vec::new();
    let mut images_seen = 0u64;
    let mut pass_loss = 0.0;
    let mut pass_images = 0u64;
    let mut last_lr = 0.0;
    let mut batch: Vec<(&[f32], u32)> = Vec::with_capacity(config.batch_size);

    for step in 0..total_steps {
        let epoch_before = images_seen / n as u64;
        let want = (config.total_images - images_seen).min(config.batch_size as u64) as usize;
        batch.clear();
        while batch.len() < want {
            if cursor == n {
                cursor = 0;
                if config.shuffle {
                    order.shuffle(&mut rng);
                }
            }
            let take = (n - cursor).min(want - batch.len());
            batch.extend(order[cursor..cursor + take].iter().map(|&i| examples[i]));
            cursor += take;
        }
        let lr = config.schedule.lr_at(step)?;
        let (loss, grad) = model.loss_and_grad(&batch)?;
        if !loss.is_finite() {
            return Err(Error::numeric(format!(
                "train: non-finite loss {loss} at step {step} (lr {lr}, images_seen {images_seen})"
            )));
        }
        model.apply_update(&grad, lr, config.weight_decay);
        images_seen += batch.len() as u64;
        pass_loss += loss * batch.len() as f64;
        pass_images += batch.len() as u64;
        last_lr = lr;
        if images_seen / n as u64 > epoch_before {
            metrics.push(EpochMetrics {
                epoch: epoch_before,
                loss: pass_loss / pass_images as f64,
                lr: last_lr,
                images_seen,
            });
            pass_loss = 0.0;
            pass_images = 0;
        }
    }
    if pass_images > 0 {
        metrics.push(EpochMetrics {
            epoch: (images_seen - 1) / n as u64,
            loss: pass_loss / pass_images as f64,
            lr: last_lr,
            images_seen,
        });
    }
    Ok(metrics)
}

/// Continue training an already-trained model on labeled data. All
/// parameters stay trainable; only the config differs from pre-training.
pub fn fine_tune(
    model: &mut SoftmaxClassifier,
    labeled: &LabeledDataset,
    config: &TrainConfig,
) -> Result<Vec<EpochMetrics>> {
    train(model, &TrainData::Labeled(labeled), config)
}
