//! `dedup`: drop pool examples that are near-duplicates of evaluation
//! examples, writing the filtered pool and an optional removal report.

use std::path::PathBuf;

use clap::Args;
use semisup::classifier::SoftmaxClassifier;
use semisup::data::{read_labeled, read_pool, write_pool};
use semisup::dedup::{dedup_pool, Embedder};
use semisup::{Error, Result};

use crate::io::{write_json, OutputGuard};

#[derive(Args)]
pub struct DedupArgs {
    /// Pool feature file to filter.
    #[arg(long)]
    pub pool: PathBuf,
    /// Labeled feature file whose examples must not leak into the pool.
    #[arg(long)]
    pub eval: PathBuf,
    /// Number of closest pairs to remove.
    #[arg(long)]
    pub r: usize,
    /// Embedding space: raw | logits (logits needs --model).
    #[arg(long, default_value = "raw")]
    pub embedder: String,
    /// Model for the logits embedder.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Where to write the filtered pool.
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the removal report JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn run(args: DedupArgs) -> Result<()> {
    let pool = read_pool(&args.pool)?;
    let eval = read_labeled(&args.eval)?;
    let model;
    let embedder = match args.embedder.as_str() {
        "raw" => Embedder::Raw,
        "logits" => {
            let path = args.model.as_ref().ok_or_else(|| {
                Error::config("dedup: --embedder logits requires --model")
            })?;
            model = SoftmaxClassifier::load(path)?;
            Embedder::Logits(&model)
        }
        other => {
            return Err(Error::config(format!(
                "unknown embedder {other:?}; expected raw or logits"
            )))
        }
    };

    let (filtered, report) = dedup_pool(&pool, &eval, args.r, &embedder)?;

    let mut guard = OutputGuard::new();
    guard.track(&args.out);
    if let Some(r) = &args.report {
        guard.track(r);
    }
    write_pool(&filtered, &args.out)?;
    if let Some(r) = &args.report {
        write_json(&report, r)?;
    }
    guard.commit();

    println!(
        "removed {} of {} pool examples into {}",
        report.removed_ids.len(),
        pool.len(),
        args.out.display()
    );
    Ok(())
}
