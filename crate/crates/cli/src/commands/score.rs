//! `score`: run the teacher over a pool (or one shard of it) and write the
//! per-class ranked shortlists as a bank file.
//!
//! Sharding is by contiguous index range: shard i of n covers pool indices
//! [i*m/n, (i+1)*m/n). Banks from disjoint shards of one pool merge into
//! exactly the single-pass result.

use std::path::PathBuf;

use clap::Args;
use semisup::classifier::SoftmaxClassifier;
use semisup::data::{read_pool, UnlabeledPool};
use semisup::selector::{score_pool, SelectionConfig};
use semisup::{Error, Result};

use crate::bank::{write_bank, RankedBankFile};
use crate::io::{with_threads, OutputGuard};

#[derive(Args)]
pub struct ScoreArgs {
    /// Teacher model.
    #[arg(long)]
    pub model: PathBuf,
    /// Pool feature file.
    #[arg(long)]
    pub pool: PathBuf,
    /// Per-class shortlist size.
    #[arg(long)]
    pub k: usize,
    /// Classes kept per example before ranking.
    #[arg(long)]
    pub p: usize,
    /// Process only shard "I/N" (0-based) of the pool.
    #[arg(long)]
    pub shard: Option<String>,
    /// Scoring thread count (defaults to the rayon global pool).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Where to write the ranked bank.
    #[arg(long)]
    pub out: PathBuf,
}

/// "I/N" with I < N.
fn parse_shard(s: &str) -> Result<(usize, usize)> {
    let (i, n) = s
        .split_once('/')
        .ok_or_else(|| Error::config(format!("shard: expected I/N, got {s:?}")))?;
    let i: usize = i
        .trim()
        .parse()
        .map_err(|e| Error::config(format!("shard index: {e}")))?;
    let n: usize = n
        .trim()
        .parse()
        .map_err(|e| Error::config(format!("shard count: {e}")))?;
    if n == 0 || i >= n {
        return Err(Error::config(format!("shard: need I < N, got {i}/{n}")));
    }
    Ok((i, n))
}

fn shard_slice(pool: &UnlabeledPool, index: usize, count: usize) -> Result<UnlabeledPool> {
    let m = pool.len();
    let start = index * m / count;
    let end = (index + 1) * m / count;
    UnlabeledPool::new(pool.dim(), pool.examples()[start..end].to_vec())
}

pub fn run(args: ScoreArgs) -> Result<()> {
    let model = SoftmaxClassifier::load(&args.model)?;
    let capacities = SelectionConfig::balanced(args.k, args.p).capacities(model.num_classes())?;
    let full_pool = read_pool(&args.pool)?;
    let pool = match &args.shard {
        Some(spec) => {
            let (i, n) = parse_shard(spec)?;
            shard_slice(&full_pool, i, n)?
        }
        None => full_pool,
    };

    let lists = with_threads(args.threads, || {
        score_pool(&model, &pool, &capacities, args.p)
    })?;

    let mut guard = OutputGuard::new();
    guard.track(&args.out);
    let bank = RankedBankFile::new(model.num_classes(), args.k, args.p, lists);
    write_bank(&bank, &args.out)?;
    guard.commit();

    let retained: usize = bank.lists.iter().map(|l| l.entries.len()).sum();
    println!(
        "scored {} pool examples; retained {retained} ranked entries in {}",
        pool.len(),
        args.out.display()
    );
    Ok(())
}
