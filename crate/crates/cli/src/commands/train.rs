//! `train` and `finetune`: supervised training on a labeled feature file.
//!
//! `train` initializes a fresh model (init seed defaults to --seed) under
//! the pre-training schedule; `finetune` loads an existing model and
//! continues under the reduced fine-tuning schedule. Learning rates default
//! to the batch-size-scaled rates unless --peak-lr is given.

use std::path::PathBuf;

use clap::Args;
use semisup::classifier::SoftmaxClassifier;
use semisup::data::read_labeled;
use semisup::trainer::{fine_tune, train, ScheduleKind, TrainData};
use semisup::Result;

use crate::config::TrainSpec;
use crate::io::{write_json, OutputGuard};

#[derive(Args)]
pub struct TrainArgs {
    /// Labeled feature file.
    #[arg(long)]
    pub labeled: PathBuf,
    /// Where to write the trained model.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional per-pass metrics JSON.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    #[arg(long)]
    pub batch_size: usize,
    /// Training budget in example presentations.
    #[arg(long)]
    pub total_images: u64,
    #[arg(long)]
    pub peak_lr: Option<f64>,
    /// Shuffle seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Model initialization seed (defaults to --seed).
    #[arg(long)]
    pub init_seed: Option<u64>,
}

fn spec_from(batch_size: usize, total_images: u64, peak_lr: Option<f64>, seed: u64) -> TrainSpec {
    TrainSpec {
        batch_size,
        total_images,
        seed: Some(seed),
        peak_lr,
        base_lr: None,
        warmup_steps: None,
        num_reductions: None,
        reduction_factor: None,
        weight_decay: None,
    }
}

pub fn run(args: TrainArgs) -> Result<()> {
    let config = spec_from(args.batch_size, args.total_images, args.peak_lr, args.seed)
        .to_config(ScheduleKind::Pretrain, args.seed)?;
    let labeled = read_labeled(&args.labeled)?;

    let mut guard = OutputGuard::new();
    guard.track(&args.out);
    if let Some(m) = &args.metrics {
        guard.track(m);
    }

    let mut model = SoftmaxClassifier::init(
        labeled.num_classes(),
        labeled.dim(),
        args.init_seed.unwrap_or(args.seed),
    )?;
    let metrics = train(&mut model, &TrainData::Labeled(&labeled), &config)?;
    model.save(&args.out)?;
    if let Some(m) = &args.metrics {
        write_json(&metrics, m)?;
    }

    guard.commit();
    let last = metrics.last().map(|m| m.loss).unwrap_or(f64::NAN);
    println!(
        "trained on {} examples ({} images); final pass loss {last:.6}",
        labeled.len(),
        args.total_images
    );
    Ok(())
}

#[derive(Args)]
pub struct FinetuneArgs {
    /// Model to continue from.
    #[arg(long)]
    pub model: PathBuf,
    /// Labeled feature file.
    #[arg(long)]
    pub labeled: PathBuf,
    /// Where to write the fine-tuned model.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional per-pass metrics JSON.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    #[arg(long)]
    pub batch_size: usize,
    /// Training budget in example presentations.
    #[arg(long)]
    pub total_images: u64,
    #[arg(long)]
    pub peak_lr: Option<f64>,
    /// Shuffle seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run_finetune(args: FinetuneArgs) -> Result<()> {
    let config = spec_from(args.batch_size, args.total_images, args.peak_lr, args.seed)
        .to_config(ScheduleKind::Finetune, args.seed)?;
    let labeled = read_labeled(&args.labeled)?;
    let mut model = SoftmaxClassifier::load(&args.model)?;

    let mut guard = OutputGuard::new();
    guard.track(&args.out);
    if let Some(m) = &args.metrics {
        guard.track(m);
    }

    let metrics = fine_tune(&mut model, &labeled, &config)?;
    model.save(&args.out)?;
    if let Some(m) = &args.metrics {
        write_json(&metrics, m)?;
    }

    guard.commit();
    let last = metrics.last().map(|m| m.loss).unwrap_or(f64::NAN);
    println!(
        "fine-tuned on {} examples ({} images); final pass loss {last:.6}",
        labeled.len(),
        args.total_images
    );
    Ok(())
}
