//! Removal of pool examples that are near-duplicates of evaluation
//! examples.
//!
//! Distances are exact Euclidean distances between L2-normalized
//! embeddings. Removal order is defined by the globally sorted pair list
//! (distance asc, eval id asc, pool id asc); the implementation reduces
//! each pool example to its closest eval pair first, which selects the
//! same ids because a pool id is claimed exactly at its first appearance
//! in that global order.

use serde::{Deserialize, Serialize};

use crate::classifier::SoftmaxClassifier;
use crate::data::{ExampleId, LabeledDataset, UnlabeledPool};
use crate::error::{Error, Result};

/// Map from raw feature vectors to the space distances are measured in.
#[derive(Debug, Clone, Copy)]
pub enum Embedder<'a> {
    /// Use the feature vector itself.
    Raw,
    /// Use a trained classifier's logits.
    Logits(&'a SoftmaxClassifier),
}

impl Embedder<'_> {
    fn embed(&self, x: &[f32]) -> Result<Vec<f64>> {
        match self {
            Embedder::Raw => Ok(x.iter().map(|&v| v as f64).collect()),
            Embedder::Logits(model) => model.logits(x),
        }
    }

    /// Embed and L2-normalize one feature vector.
    pub fn unit_embedding(&self, x: &[f32]) -> Result<Vec<f64>> {
        l2_normalize(&self.embed(x)?)
    }
}

/// Scale to unit Euclidean norm. Zero vectors have no direction and are
/// rejected.
pub fn l2_normalize(v: &[f64]) -> Result<Vec<f64>> {
    let norm_sq: f64 = v.iter().map(|x| x * x).sum();
    if !norm_sq.is_finite() {
        return Err(Error::numeric("l2_normalize: non-finite input"));
    }
    if norm_sq == 0.0 {
        return Err(Error::data("l2_normalize: zero vector"));
    }
    let norm = norm_sq.sqrt();
    Ok(v.iter().map(|x| x / norm).collect())
}

/// What the dedup pass removed and how much work it did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupReport {
    /// Removed pool ids, ascending.
    pub removed_ids: Vec<ExampleId>,
    /// Number of (eval, pool) distances computed.
    pub pairs_examined: u64,
    /// Euclidean distance of the R-th (last) removed pair, if any.
    pub distance_of_last_removed: Option<f64>,
}

/// Closest-eval summary for one pool example, ordered like the pool-side
/// first appearances in the global pair list.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Closest {
    dist_sq: f64,
    eval_id: ExampleId,
    pool_id: ExampleId,
}

fn closest_eval(
    pool_id: ExampleId,
    features: &[f32],
    eval: &[(ExampleId, Vec<f64>)],
    embedder: &Embedder,
) -> Result<Closest> {
    let emb = embedder.unit_embedding(features)?;
    let mut best: Option<(f64, ExampleId)> = None;
    for (eval_id, eval_emb) in eval {
        let dist_sq: f64 = emb
            .iter()
            .zip(eval_emb)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let better = match best {
            None => true,
            Some((d, id)) => dist_sq < d || (dist_sq == d && *eval_id < id),
        };
        if better {
            best = Some((dist_sq, *eval_id));
        }
    }
    let (dist_sq, eval_id) = best.expect("non-empty eval set");
    Ok(Closest {
        dist_sq,
        eval_id,
        pool_id,
    })
}

fn embed_eval(eval: &LabeledDataset, embedder: &Embedder) -> Result<Vec<(ExampleId, Vec<f64>)>> {
    eval.examples()
        .iter()
        .map(|e| Ok((e.id, embedder.unit_embedding(&e.features)?)))
        .collect()
}

fn check_dims(pool: &UnlabeledPool, eval: &LabeledDataset, embedder: &Embedder) -> Result<()> {
    if pool.dim() != eval.dim() {
        return Err(Error::data(format!(
            "dedup: pool dim {} != eval dim {}",
            pool.dim(),
            eval.dim()
        )));
    }
    if let Embedder::Logits(model) = embedder {
        if model.dim() != pool.dim() {
            return Err(Error::data(format!(
                "dedup: model dim {} != data dim {}",
                model.dim(),
                pool.dim()
            )));
        }
    }
    Ok(())
}

fn select_removals(
    mut candidates: Vec<Closest>,
    r: usize,
    pairs_examined: u64,
) -> (Vec<ExampleId>, DedupReport) {
    candidates.sort_by(|a, b| {
        a.dist_sq
            .total_cmp(&b.dist_sq)
            .then(a.eval_id.cmp(&b.eval_id))
            .then(a.pool_id.cmp(&b.pool_id))
    });
    let taken = &candidates[..r.min(candidates.len())];
    let distance_of_last_removed = taken.last().map(|c| c.dist_sq.sqrt());
    let mut removed_ids: Vec<ExampleId> = taken.iter().map(|c| c.pool_id).collect();
    removed_ids.sort_unstable();
    let report = DedupReport {
        removed_ids: removed_ids.clone(),
        pairs_examined,
        distance_of_last_removed,
    };
    (removed_ids, report)
}

/// Remove up to `r` pool examples closest to the evaluation set,
/// sequentially.
pub fn dedup_pool_seq(
    pool: &UnlabeledPool,
    eval: &LabeledDataset,
    r: usize,
    embedder: &Embedder,
) -> Result<(UnlabeledPool, DedupReport)> {
    check_dims(pool, eval, embedder)?;
    if r == 0 || eval.is_empty() || pool.is_empty() {
        return Ok((
            pool.clone(),
            DedupReport {
                removed_ids: Vec::new(),
                pairs_examined: 0,
                distance_of_last_removed: None,
            },
        ));
    }
    let eval_emb = embed_eval(eval, embedder)?;
    let candidates: Result<Vec<Closest>> = pool
        .examples()
        .iter()
        .map(|e| closest_eval(e.id, &e.features, &eval_emb, embedder))
        .collect();
    let pairs = (eval.len() * pool.len()) as u64;
    let (removed, report) = select_removals(candidates?, r, pairs);
    Ok((pool.without_ids(&removed.iter().copied().collect()), report))
}

/// Parallel variant: pool examples are scored against the eval set
/// independently, so the per-example reduction order never changes and the
/// result is identical to the sequential pass.
#[cfg(feature = "parallel")]
pub fn dedup_pool(
    pool: &UnlabeledPool,
    eval: &LabeledDataset,
    r: usize,
    embedder: &Embedder,
) -> Result<(UnlabeledPool, DedupReport)> {
    use rayon::prelude::*;

    check_dims(pool, eval, embedder)?;
    if r == 0 || eval.is_empty() || pool.is_empty() {
        return dedup_pool_seq(pool, eval, r, embedder);
    }
    let eval_emb = embed_eval(eval, embedder)?;
    let candidates: Result<Vec<Closest>> = pool
        .examples()
        .par_iter()
        .map(|e| closest_eval(e.id, &e.features, &eval_emb, embedder))
        .collect();
    let pairs = (eval.len() * pool.len()) as u64;
    let (removed, report) = select_removals(candidates?, r, pairs);
    Ok((pool.without_ids(&removed.iter().copied().collect()), report))
}

/// With the parallel feature off, dedup is always sequential.
#[cfg(not(feature = "parallel"))]
pub fn dedup_pool(
    pool: &UnlabeledPool,
    eval: &LabeledDataset,
    r: usize,
    embedder: &Embedder,
) -> Result<(UnlabeledPool, DedupReport)> {
    dedup_pool_seq(pool, eval, r, embedder)
}
