//! Core dataset containers shared by every other module.
//!
//! Containers validate their invariants at construction (and again on
//! deserialization) and are immutable afterwards, so they can be shared
//! read-only across parallel workers.

mod feature_file;
mod manifest;

pub use feature_file::{
    read_features, read_labeled, read_pool, write_features, write_labeled, write_pool,
    FeatureContainer,
};
pub use manifest::{read_manifest, write_manifest, ManifestEntry};

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of an example, unique within a single pool or dataset.
///
/// Ids are assigned by the generator or ingestor and never re-derived from
/// position, so shuffles and shards preserve identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExampleId(pub u64);

impl std::fmt::Display for ExampleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

fn check_features(features: &[f32], dim: usize, who: &str, position: usize) -> Result<()> {
    if features.len() != dim {
        return Err(Error::data(format!(
            "{who} example at position {position}: feature length {} != dim {dim}",
            features.len()
        )));
    }
    for (j, v) in features.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::data(format!(
                "{who} example at position {position}: non-finite feature at index {j}"
            )));
        }
    }
    Ok(())
}

fn check_unique_ids<'a>(ids: impl Iterator<Item = &'a ExampleId>, who: &str) -> Result<()> {
    let mut seen = HashSet::new();
    for (position, id) in ids.enumerate() {
        if !seen.insert(*id) {
            return Err(Error::data(format!(
                "{who}: duplicate id {id} at position {position}"
            )));
        }
    }
    Ok(())
}

/// One ground-truth labeled example.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub id: ExampleId,
    pub features: Vec<f32>,
    pub label: u32,
}

/// A labeled training or test set: feature vectors with ground-truth class
/// labels in `[0, num_classes)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    dim: usize,
    num_classes: usize,
    examples: Vec<LabeledExample>,
}

impl LabeledDataset {
    pub fn new(dim: usize, num_classes: usize, examples: Vec<LabeledExample>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::data("labeled dataset: dim must be positive"));
        }
        if num_classes == 0 {
            return Err(Error::data("labeled dataset: num_classes must be positive"));
        }
        for (position, ex) in examples.iter().enumerate() {
            check_features(&ex.features, dim, "labeled dataset", position)?;
            if ex.label as usize >= num_classes {
                return Err(Error::data(format!(
                    "labeled dataset example at position {position}: label {} >= num_classes {num_classes}",
                    ex.label
                )));
            }
        }
        check_unique_ids(examples.iter().map(|e| &e.id), "labeled dataset")?;
        Ok(Self {
            dim,
            num_classes,
            examples,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn get(&self, index: usize) -> &LabeledExample {
        &self.examples[index]
    }
}

/// One pool example: features plus a possibly-empty set of noisy tags.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolExample {
    pub id: ExampleId,
    pub features: Vec<f32>,
    /// Class indices, sorted ascending, no duplicates. Tag indices are
    /// validated against a task's class count where the pool is consumed.
    pub tags: Vec<u32>,
}

/// The unlabeled pool: feature vectors with stable ids and optional tag
/// annotations (tags carry the weak-supervision signal).
#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledPool {
    dim: usize,
    examples: Vec<PoolExample>,
}

impl UnlabeledPool {
    pub fn new(dim: usize, examples: Vec<PoolExample>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::data("pool: dim must be positive"));
        }
        for (position, ex) in examples.iter().enumerate() {
            check_features(&ex.features, dim, "pool", position)?;
            if !ex.tags.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::data(format!(
                    "pool example at position {position}: tags must be sorted and unique"
                )));
            }
        }
        check_unique_ids(examples.iter().map(|e| &e.id), "pool")?;
        Ok(Self { dim, examples })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn examples(&self) -> &[PoolExample] {
        &self.examples
    }

    pub fn get(&self, index: usize) -> &PoolExample {
        &self.examples[index]
    }

    /// True if any example carries at least one tag.
    pub fn has_tags(&self) -> bool {
        self.examples.iter().any(|e| !e.tags.is_empty())
    }

    /// New pool keeping only the examples whose id is not in `removed`,
    /// in the original order.
    pub fn without_ids(&self, removed: &HashSet<ExampleId>) -> UnlabeledPool {
        let examples = self
            .examples
            .iter()
            .filter(|e| !removed.contains(&e.id))
            .cloned()
            .collect();
        // Subset of a valid pool stays valid.
        UnlabeledPool {
            dim: self.dim,
            examples,
        }
    }

    /// Deterministic subsample of `count` examples: a seeded shuffle of the
    /// indices, then the first `count`, restored to original pool order.
    pub fn subsample(&self, count: usize, seed: u64) -> UnlabeledPool {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;

        let count = count.min(self.examples.len());
        let mut indices: Vec<usize> = (0..self.examples.len()).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        indices.shuffle(&mut rng);
        indices.truncate(count);
        indices.sort_unstable();
        let examples = indices.iter().map(|&i| self.examples[i].clone()).collect();
        UnlabeledPool {
            dim: self.dim,
            examples,
        }
    }
}

/// One selected entry of a constructed dataset: an example id, the class it
/// was selected for, and the teacher score that ranked it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstructedEntry {
    pub id: ExampleId,
    pub label: u32,
    pub score: f64,
}

/// The dataset assembled from per-class ranked lists.
///
/// The same id may appear under several labels (an example can rank for
/// more than one class and is then replicated), but an (id, label) pair is
/// unique. Features live in the source pool; entries reference them by id.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstructedDataset {
    entries: Vec<ConstructedEntry>,
}

impl ConstructedDataset {
    pub fn new(entries: Vec<ConstructedEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (position, entry) in entries.iter().enumerate() {
            if !(0.0..=1.0).contains(&entry.score) {
                return Err(Error::data(format!(
                    "constructed dataset entry at position {position}: score {} outside [0,1]",
                    entry.score
                )));
            }
            if !seen.insert((entry.id, entry.label)) {
                return Err(Error::data(format!(
                    "constructed dataset entry at position {position}: duplicate (id,label) pair ({}, {})",
                    entry.id, entry.label
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ConstructedEntry] {
        &self.entries
    }
}
