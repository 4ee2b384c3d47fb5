//! `select`: merge ranked banks and emit the constructed dataset as a
//! manifest (one JSON object per line: id, pseudo-label, teacher score).
//!
//! An optional per-class budget truncates each class shortlist to its
//! budgeted count; truncating a ranked prefix is exactly selection with the
//! smaller capacity, so budgets can be applied after scoring.

use std::path::PathBuf;

use clap::Args;
use semisup::data::{write_manifest, ManifestEntry};
use semisup::selector::{construct_dataset, merge_ranked_banks, RankedList};
use semisup::{Error, Result};

use crate::bank::read_bank;
use crate::config::parse_list;
use crate::io::OutputGuard;

#[derive(Args)]
pub struct SelectArgs {
    /// Ranked-bank file; repeat once per shard.
    #[arg(long = "bank", required = true)]
    pub banks: Vec<PathBuf>,
    /// Acknowledge merging multiple banks (required with more than one).
    #[arg(long)]
    pub merge: bool,
    /// Comma-separated per-class counts, each at most the bank's K.
    #[arg(long)]
    pub budget: Option<String>,
    /// Where to write the dataset manifest.
    #[arg(long)]
    pub out: PathBuf,
}

fn apply_budget(lists: &mut [RankedList], budget: &[usize], k: usize) -> Result<()> {
    if budget.len() != lists.len() {
        return Err(Error::config(format!(
            "budget: {} counts for {} classes",
            budget.len(),
            lists.len()
        )));
    }
    for (list, &b) in lists.iter_mut().zip(budget) {
        if b > k {
            return Err(Error::config(format!(
                "budget: class {} wants {b} > scored capacity {k}",
                list.class
            )));
        }
        list.entries.truncate(b);
        list.capacity = b;
    }
    Ok(())
}

pub fn run(args: SelectArgs) -> Result<()> {
    if args.banks.len() > 1 && !args.merge {
        return Err(Error::config(
            "select: multiple banks given; pass --merge to combine shards",
        ));
    }

    let first = read_bank(&args.banks[0])?;
    let mut lists = first.lists.clone();
    for path in &args.banks[1..] {
        let next = read_bank(path)?;
        if !first.compatible(&next) {
            return Err(Error::data(format!(
                "select: {} was scored with different parameters (K={}, P={}, classes={}) \
                 than {} (K={}, P={}, classes={})",
                path.display(),
                next.k,
                next.p,
                next.num_classes,
                args.banks[0].display(),
                first.k,
                first.p,
                first.num_classes,
            )));
        }
        lists = merge_ranked_banks(&lists, &next.lists)?;
    }

    if let Some(budget) = &args.budget {
        let counts: Vec<usize> = parse_list(budget, "budget")?;
        apply_budget(&mut lists, &counts, first.k)?;
    }

    let constructed = construct_dataset(&lists)?;
    let entries: Vec<ManifestEntry> = constructed
        .entries()
        .iter()
        .map(|e| ManifestEntry {
            id: e.id,
            label: e.label,
            score: Some(e.score),
        })
        .collect();

    let mut guard = OutputGuard::new();
    guard.track(&args.out);
    write_manifest(&entries, &args.out)?;
    guard.commit();

    println!(
        "selected {} entries from {} bank(s) into {}",
        entries.len(),
        args.banks.len(),
        args.out.display()
    );
    Ok(())
}
