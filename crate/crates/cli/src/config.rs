//! The `run`/`study` config file and its mapping onto pipeline types.

use std::path::{Path, PathBuf};

use semisup::pipeline::{PipelineConfig, PipelineMode};
use semisup::selector::{SelectionConfig, SelectionVariant};
use semisup::trainer::{
    default_finetune_peak_lr, default_pretrain_peak_lr, LrSchedule, ScheduleKind, TrainConfig,
};
use semisup::{Error, Result};
use serde::{Deserialize, Serialize};

/// One training stage. Only the budget fields are mandatory; the learning
/// rate, warmup, and decay knobs fall back to the scaled defaults for the
/// stage kind, and the shuffle seed falls back to one derived from the
/// run seed (teacher +1, student +2, finetune +3).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSpec {
    pub batch_size: usize,
    pub total_images: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_lr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_lr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup_steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_reductions: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduction_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_decay: Option<f64>,
}

impl TrainSpec {
    pub fn to_config(&self, kind: ScheduleKind, fallback_seed: u64) -> Result<TrainConfig> {
        if self.batch_size == 0 {
            return Err(Error::config("train: batch_size must be positive"));
        }
        if self.total_images == 0 {
            return Err(Error::config("train: total_images must be positive"));
        }
        let steps = self.total_images.div_ceil(self.batch_size as u64);
        let peak = self.peak_lr.unwrap_or_else(|| match kind {
            ScheduleKind::Pretrain => default_pretrain_peak_lr(self.batch_size),
            ScheduleKind::Finetune => default_finetune_peak_lr(self.batch_size),
        });
        let (default_reductions, default_factor) = match kind {
            ScheduleKind::Pretrain => (13, 0.5),
            ScheduleKind::Finetune => (3, 0.1),
        };
        let schedule = LrSchedule::new(
            kind,
            self.base_lr.unwrap_or(0.0),
            peak,
            self.warmup_steps.unwrap_or(steps / 20),
            steps,
            self.num_reductions.unwrap_or(default_reductions),
            self.reduction_factor.unwrap_or(default_factor),
        )?;
        let mut config = TrainConfig::new(
            schedule,
            self.batch_size,
            self.total_images,
            self.seed.unwrap_or(fallback_seed),
        );
        if let Some(wd) = self.weight_decay {
            config.weight_decay = wd;
        }
        Ok(config)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionSpec {
    pub k: usize,
    pub p: usize,
    #[serde(default = "default_variant")]
    pub variant: SelectionVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_class_budget: Option<Vec<usize>>,
}

fn default_variant() -> SelectionVariant {
    SelectionVariant::BalancedRanked
}

impl SelectionSpec {
    pub fn to_config(&self) -> SelectionConfig {
        SelectionConfig {
            k: self.k,
            p: self.p,
            variant: self.variant,
            per_class_budget: self.per_class_budget.clone(),
        }
    }
}

/// The `run` config file. Unknown keys are rejected; relative paths are
/// resolved against the config file's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub labeled: PathBuf,
    pub pool: PathBuf,
    pub test: PathBuf,
    /// Output directory; the `--out` flag overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub mode: PipelineMode,
    pub seed: u64,
    #[serde(default = "default_rounds")]
    pub rounds: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dedup_r: Option<usize>,
    pub selection: SelectionSpec,
    pub teacher: TrainSpec,
    pub student: TrainSpec,
    pub finetune: TrainSpec,
}

fn default_rounds() -> u32 {
    1
}

impl RunConfigFile {
    /// Resolve the data paths against `base` (the config file's directory).
    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.labeled, &mut self.pool, &mut self.test] {
            if p.is_relative() {
                *p = base.join(&p);
            }
        }
        if let Some(out) = &mut self.out {
            if out.is_relative() {
                *out = base.join(&out);
            }
        }
    }

    pub fn to_pipeline(&self) -> Result<PipelineConfig> {
        Ok(PipelineConfig {
            mode: self.mode,
            teacher: self
                .teacher
                .to_config(ScheduleKind::Pretrain, self.seed.wrapping_add(1))?,
            student: self
                .student
                .to_config(ScheduleKind::Pretrain, self.seed.wrapping_add(2))?,
            finetune: self
                .finetune
                .to_config(ScheduleKind::Finetune, self.seed.wrapping_add(3))?,
            selection: self.selection.to_config(),
            dedup_r: self.dedup_r,
            seed: self.seed,
            rounds: self.rounds,
        })
    }
}

pub fn parse_mode(s: &str) -> Result<PipelineMode> {
    match s {
        "semi_supervised" => Ok(PipelineMode::SemiSupervised),
        "self_training" => Ok(PipelineMode::SelfTraining),
        "semi_weakly" => Ok(PipelineMode::SemiWeakly),
        other => Err(Error::config(format!(
            "unknown mode {other:?}; expected semi_supervised, self_training, or semi_weakly"
        ))),
    }
}

pub fn parse_variant(s: &str) -> Result<SelectionVariant> {
    match s {
        "balanced_ranked" => Ok(SelectionVariant::BalancedRanked),
        "unbalanced_ranked" => Ok(SelectionVariant::UnbalancedRanked),
        "balanced_with_tags" => Ok(SelectionVariant::BalancedWithTags),
        other => Err(Error::config(format!(
            "unknown variant {other:?}; expected balanced_ranked, unbalanced_ranked, or balanced_with_tags"
        ))),
    }
}

/// Comma-separated list of values, e.g. "100,200,400".
pub fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|item| {
            item.trim()
                .parse::<T>()
                .map_err(|e| Error::config(format!("{what}: bad value {item:?}: {e}")))
        })
        .collect()
}
