//! Per-class top-K selection over a scored example stream.
//!
//! Each example contributes only to the classes holding its P highest
//! probabilities; each class keeps its K best (score descending, ties by
//! ascending id) in a bounded min-heap, so memory stays O(sum of
//! capacities) no matter how long the stream is. Shards built from any
//! partition of the stream combine with [`merge_ranked_lists`], which is
//! associative and commutative under the same tie rule.

use std::collections::{BinaryHeap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::SoftmaxClassifier;
use crate::data::{ConstructedDataset, ConstructedEntry, ExampleId, UnlabeledPool};
use crate::error::{Error, Result};

/// How the selected training set is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionVariant {
    /// Same capacity K for every class.
    BalancedRanked,
    /// Per-class capacities from `per_class_budget` (total budget L*K).
    UnbalancedRanked,
    /// Ignore scores; sample tagged examples per class.
    BalancedWithTags,
}

impl fmt::Display for SelectionVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SelectionVariant::BalancedRanked => "balanced_ranked",
            SelectionVariant::UnbalancedRanked => "unbalanced_ranked",
            SelectionVariant::BalancedWithTags => "balanced_with_tags",
        };
        f.write_str(s)
    }
}

/// Selection stage parameters. `k` is the per-class shortlist size; for the
/// unbalanced variant it defines the total budget k*L that
/// `per_class_budget` must sum to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub k: usize,
    pub p: usize,
    pub variant: SelectionVariant,
    pub per_class_budget: Option<Vec<usize>>,
}

impl SelectionConfig {
    pub fn balanced(k: usize, p: usize) -> Self {
        Self {
            k,
            p,
            variant: SelectionVariant::BalancedRanked,
            per_class_budget: None,
        }
    }

    pub fn validate(&self, num_classes: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("selection: k must be positive"));
        }
        if self.p == 0 || self.p > num_classes {
            return Err(Error::config(format!(
                "selection: p={} outside [1, {num_classes}]",
                self.p
            )));
        }
        match self.variant {
            SelectionVariant::UnbalancedRanked => {
                let budget = self.per_class_budget.as_ref().ok_or_else(|| {
                    Error::config("selection: unbalanced_ranked requires per_class_budget")
                })?;
                if budget.len() != num_classes {
                    return Err(Error::config(format!(
                        "selection: per_class_budget has {} entries for {num_classes} classes",
                        budget.len()
                    )));
                }
                if budget.iter().any(|&b| b == 0) {
                    return Err(Error::config(
                        "selection: per_class_budget entries must be positive",
                    ));
                }
                let total: usize = budget.iter().sum();
                if total != self.k * num_classes {
                    return Err(Error::config(format!(
                        "selection: per_class_budget sums to {total}, budget is k*L = {}",
                        self.k * num_classes
                    )));
                }
            }
            SelectionVariant::BalancedRanked | SelectionVariant::BalancedWithTags => {
                if self.per_class_budget.is_some() {
                    return Err(Error::config(format!(
                        "selection: per_class_budget only applies to unbalanced_ranked, not {}",
                        self.variant
                    )));
                }
            }
        }
        Ok(())
    }

    /// Per-class heap capacities for the ranked variants.
    pub fn capacities(&self, num_classes: usize) -> Result<Vec<usize>> {
        self.validate(num_classes)?;
        Ok(match self.variant {
            SelectionVariant::UnbalancedRanked => self.per_class_budget.clone().unwrap(),
            _ => vec![self.k; num_classes],
        })
    }
}

/// One selected example: pool id plus the probability the scoring model
/// assigned to this list's class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub id: ExampleId,
    pub score: f64,
}

/// Shortlist for one class, score descending, ties by ascending id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub class: u32,
    pub capacity: usize,
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn empty(class: u32, capacity: usize) -> Self {
        Self {
            class,
            capacity,
            entries: Vec::new(),
        }
    }

    /// Check the structural invariants (used when lists cross a file
    /// boundary): length within capacity, order (score desc, id asc),
    /// scores in [0, 1].
    pub fn validate(&self) -> Result<()> {
        if self.entries.len() > self.capacity {
            return Err(Error::data(format!(
                "ranked list class {}: {} entries exceed capacity {}",
                self.class,
                self.entries.len(),
                self.capacity
            )));
        }
        for e in &self.entries {
            if !(e.score >= 0.0 && e.score <= 1.0) {
                return Err(Error::data(format!(
                    "ranked list class {}: score {} outside [0, 1]",
                    self.class, e.score
                )));
            }
        }
        for w in self.entries.windows(2) {
            let ordered = w[0].score > w[1].score
                || (w[0].score == w[1].score && w[0].id < w[1].id);
            if !ordered {
                return Err(Error::data(format!(
                    "ranked list class {}: entries out of order at id {}",
                    self.class, w[1].id
                )));
            }
        }
        Ok(())
    }
}

/// The P highest-probability classes, descending, ties by ascending class.
pub fn top_p_truncate(probs: &[f64], p: usize) -> Result<Vec<(u32, f64)>> {
    let l = probs.len();
    if p == 0 || p > l {
        return Err(Error::config(format!("top_p_truncate: P={p} outside [1, {l}]")));
    }
    let mut sum = 0.0;
    for &v in probs {
        if !(v >= 0.0 && v <= 1.0) {
            return Err(Error::data(format!(
                "top_p_truncate: probability {v} outside [0, 1]"
            )));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::data(format!(
            "top_p_truncate: probabilities sum to {sum}, not 1"
        )));
    }
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    Ok(order[..p].iter().map(|&c| (c as u32, probs[c])).collect())
}

/// Heap element ordered worst-first: lower score is greater, and at equal
/// score a higher id is greater, so the heap root is always the entry the
/// tie rule would discard first.
#[derive(Debug, Clone, Copy)]
struct WorstFirst {
    score: f64,
    id: ExampleId,
}

impl PartialEq for WorstFirst {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}

impl Eq for WorstFirst {}

impl PartialOrd for WorstFirst {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for WorstFirst {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then_with(|| self.id.cmp(&other.id))
    }
}

/// Bounded per-class top-K accumulator.
///
/// Memory never exceeds the sum of capacities: an offer either replaces the
/// current worst retained entry or is dropped. Duplicate ids are detected
/// within a class shortlist while the first occurrence is still retained;
/// a global seen-set would break the memory bound, so stream-wide
/// uniqueness remains the caller's contract.
pub struct StreamingSelector {
    p: usize,
    heaps: Vec<BinaryHeap<WorstFirst>>,
    retained_ids: Vec<HashSet<ExampleId>>,
    capacities: Vec<usize>,
    retained: usize,
    retained_peak: usize,
}

impl StreamingSelector {
    pub fn new(capacities: Vec<usize>, p: usize) -> Result<Self> {
        let l = capacities.len();
        if l == 0 {
            return Err(Error::config("selector: need at least one class"));
        }
        if p == 0 || p > l {
            return Err(Error::config(format!("selector: P={p} outside [1, {l}]")));
        }
        let heaps = capacities
            .iter()
            .map(|&c| BinaryHeap::with_capacity(c.min(1 << 20)))
            .collect();
        let retained_ids = capacities.iter().map(|_| HashSet::new()).collect();
        Ok(Self {
            p,
            heaps,
            retained_ids,
            capacities,
            retained: 0,
            retained_peak: 0,
        })
    }

    pub fn uniform(num_classes: usize, k: usize, p: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::config("selector: k must be positive"));
        }
        Self::new(vec![k; num_classes], p)
    }

    pub fn num_classes(&self) -> usize {
        self.capacities.len()
    }

    /// Peak number of entries retained at any point, for bound checks.
    pub fn retained_peak(&self) -> usize {
        self.retained_peak
    }

    pub fn capacity_total(&self) -> usize {
        self.capacities.iter().sum()
    }

    /// Offer one scored example: its P top classes each consider (id, score).
    pub fn offer(&mut self, id: ExampleId, probs: &[f64]) -> Result<()> {
        if probs.len() != self.capacities.len() {
            return Err(Error::data(format!(
                "selector: {} probabilities for {} classes",
                probs.len(),
                self.capacities.len()
            )));
        }
        for (class, score) in top_p_truncate(probs, self.p)? {
            let l = class as usize;
            let cap = self.capacities[l];
            if cap == 0 {
                continue;
            }
            if self.retained_ids[l].contains(&id) {
                return Err(Error::data(format!(
                    "selector: duplicate id {id} offered to class {class}"
                )));
            }
            let candidate = WorstFirst { score, id };
            if self.heaps[l].len() < cap {
                self.heaps[l].push(candidate);
                self.retained_ids[l].insert(id);
                self.retained += 1;
                self.retained_peak = self.retained_peak.max(self.retained);
            } else if candidate < *self.heaps[l].peek().unwrap() {
                // Strictly better than the worst retained entry.
                let evicted = self.heaps[l].pop().unwrap();
                self.retained_ids[l].remove(&evicted.id);
                self.heaps[l].push(candidate);
                self.retained_ids[l].insert(id);
            }
        }
        Ok(())
    }

    /// Drain into per-class lists sorted best-first.
    pub fn finish(self) -> Vec<RankedList> {
        self.heaps
            .into_iter()
            .zip(&self.capacities)
            .enumerate()
            .map(|(class, (heap, &capacity))| {
                let mut worst_first = heap.into_sorted_vec();
                // into_sorted_vec is ascending by Ord, i.e. best entries
                // first under worst-first ordering reversed; Ord puts the
                // worst greatest, so ascending order is already best-first.
                let entries = worst_first
                    .drain(..)
                    .map(|e| RankedEntry {
                        id: e.id,
                        score: e.score,
                    })
                    .collect();
                RankedList {
                    class: class as u32,
                    capacity,
                    entries,
                }
            })
            .collect()
    }
}

/// Build all class shortlists from one pass over a scored stream.
pub fn build_ranked_lists<I>(stream: I, capacities: &[usize], p: usize) -> Result<Vec<RankedList>>
where
    I: IntoIterator<Item = (ExampleId, Vec<f64>)>,
{
    let mut selector = StreamingSelector::new(capacities.to_vec(), p)?;
    for (id, probs) in stream {
        selector.offer(id, &probs)?;
    }
    Ok(selector.finish())
}

/// Combine shortlists built from disjoint stream shards. Equals building
/// from the concatenated stream; associative and commutative.
pub fn merge_ranked_lists(a: &RankedList, b: &RankedList) -> Result<RankedList> {
    if a.class != b.class {
        return Err(Error::data(format!(
            "merge: class mismatch ({} vs {})",
            a.class, b.class
        )));
    }
    if a.capacity != b.capacity {
        return Err(Error::data(format!(
            "merge: capacity mismatch ({} vs {})",
            a.capacity, b.capacity
        )));
    }
    let ids: HashSet<ExampleId> = a.entries.iter().map(|e| e.id).collect();
    if let Some(dup) = b.entries.iter().find(|e| ids.contains(&e.id)) {
        return Err(Error::data(format!("merge: id {} present in both lists", dup.id)));
    }
    let mut entries = Vec::with_capacity((a.entries.len() + b.entries.len()).min(a.capacity));
    let (mut i, mut j) = (0, 0);
    while entries.len() < a.capacity && (i < a.entries.len() || j < b.entries.len()) {
        let take_a = match (a.entries.get(i), b.entries.get(j)) {
            (Some(x), Some(y)) => {
                x.score > y.score || (x.score == y.score && x.id < y.id)
            }
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => unreachable!(),
        };
        if take_a {
            entries.push(a.entries[i]);
            i += 1;
        } else {
            entries.push(b.entries[j]);
            j += 1;
        }
    }
    Ok(RankedList {
        class: a.class,
        capacity: a.capacity,
        entries,
    })
}

/// Merge two equally shaped banks of shortlists class by class.
pub fn merge_ranked_banks(a: &[RankedList], b: &[RankedList]) -> Result<Vec<RankedList>> {
    if a.len() != b.len() {
        return Err(Error::data(format!(
            "merge: bank sizes differ ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| merge_ranked_lists(x, y))
        .collect()
}

/// Flatten shortlists into a training set: one entry per (class, id) pair,
/// ordered by (class asc, score desc, id asc). Ids selected under several
/// classes appear once per class.
pub fn construct_dataset(lists: &[RankedList]) -> Result<ConstructedDataset> {
    let mut by_class: Vec<&RankedList> = lists.iter().collect();
    by_class.sort_by_key(|l| l.class);
    let mut entries = Vec::with_capacity(lists.iter().map(|l| l.entries.len()).sum());
    for list in by_class {
        list.validate()?;
        entries.extend(list.entries.iter().map(|e| ConstructedEntry {
            id: e.id,
            label: list.class,
            score: e.score,
        }));
    }
    ConstructedDataset::new(entries)
}

/// Split a total budget across classes proportionally to positive weights,
/// rounding by largest remainder (remainder ties go to the lower class
/// index). Without `allow_zero` every class is guaranteed at least one
/// slot, repaired from the largest counts if rounding starved a class.
pub fn zipfian_allocate(weights: &[f64], budget: usize, allow_zero: bool) -> Result<Vec<usize>> {
    let l = weights.len();
    if l == 0 {
        return Err(Error::config("allocate: no classes"));
    }
    for &w in weights {
        if !w.is_finite() || w <= 0.0 {
            return Err(Error::config(format!("allocate: weight {w} must be positive")));
        }
    }
    if !allow_zero && budget < l {
        return Err(Error::config(format!(
            "allocate: budget {budget} cannot give {l} classes one slot each"
        )));
    }
    let total: f64 = weights.iter().sum();
    let mut counts = Vec::with_capacity(l);
    let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(l);
    let mut assigned = 0usize;
    for (i, &w) in weights.iter().enumerate() {
        let quota = budget as f64 * w / total;
        let base = quota.floor() as usize;
        counts.push(base);
        assigned += base;
        remainders.push((i, quota - base as f64));
    }
    remainders.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for &(i, _) in remainders.iter().take(budget - assigned) {
        counts[i] += 1;
    }
    if !allow_zero {
        // Move slots from the fullest classes to any the rounding left empty.
        loop {
            let Some(empty) = counts.iter().position(|&c| c == 0) else {
                break;
            };
            let donor = counts
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                .map(|(i, _)| i)
                .unwrap();
            if counts[donor] <= 1 {
                return Err(Error::config(format!(
                    "allocate: budget {budget} too small to cover {l} classes"
                )));
            }
            counts[donor] -= 1;
            counts[empty] += 1;
        }
    }
    Ok(counts)
}

/// Tag-driven selection: per class, uniformly sample up to `k` pool
/// examples carrying that class tag, without replacement. Scores are set
/// to 1.0 because no ranking is involved. Classes with no tagged examples
/// simply come back empty.
pub fn tag_select(
    pool: &UnlabeledPool,
    num_classes: usize,
    k: usize,
    seed: u64,
) -> Result<ConstructedDataset> {
    if num_classes == 0 {
        return Err(Error::config("tag_select: need at least one class"));
    }
    if k == 0 {
        return Err(Error::config("tag_select: k must be positive"));
    }
    if !pool.has_tags() {
        return Err(Error::data("tag_select: pool has no tags"));
    }
    let mut candidates: Vec<Vec<ExampleId>> = vec![Vec::new(); num_classes];
    for e in pool.examples() {
        for &tag in &e.tags {
            if tag as usize >= num_classes {
                return Err(Error::data(format!(
                    "tag_select: tag {tag} >= num_classes {num_classes} (id {})",
                    e.id
                )));
            }
            candidates[tag as usize].push(e.id);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for (class, mut ids) in candidates.into_iter().enumerate() {
        ids.shuffle(&mut rng);
        let mut picked: Vec<ExampleId> = ids.into_iter().take(k).collect();
        picked.sort_unstable();
        entries.extend(picked.into_iter().map(|id| ConstructedEntry {
            id,
            label: class as u32,
            score: 1.0,
        }));
    }
    ConstructedDataset::new(entries)
}

/// Score every pool example with the model and build the class shortlists,
/// sequentially.
pub fn score_pool_seq(
    model: &SoftmaxClassifier,
    pool: &UnlabeledPool,
    capacities: &[usize],
    p: usize,
) -> Result<Vec<RankedList>> {
    if pool.dim() != model.dim() {
        return Err(Error::data(format!(
            "score: pool dim {} != model dim {}",
            pool.dim(),
            model.dim()
        )));
    }
    if capacities.len() != model.num_classes() {
        return Err(Error::config(format!(
            "score: {} capacities for {} classes",
            capacities.len(),
            model.num_classes()
        )));
    }
    let mut selector = StreamingSelector::new(capacities.to_vec(), p)?;
    for e in pool.examples() {
        selector.offer(e.id, &model.probabilities(&e.features)?)?;
    }
    Ok(selector.finish())
}

/// Parallel scoring: the pool is split into shards, each shard builds a
/// private bank of shortlists, and banks fold together with the
/// order-insensitive merge, so the result is identical to the sequential
/// pass.
#[cfg(feature = "parallel")]
pub fn score_pool(
    model: &SoftmaxClassifier,
    pool: &UnlabeledPool,
    capacities: &[usize],
    p: usize,
) -> Result<Vec<RankedList>> {
    use rayon::prelude::*;

    if pool.dim() != model.dim() {
        return Err(Error::data(format!(
            "score: pool dim {} != model dim {}",
            pool.dim(),
            model.dim()
        )));
    }
    if capacities.len() != model.num_classes() {
        return Err(Error::config(format!(
            "score: {} capacities for {} classes",
            capacities.len(),
            model.num_classes()
        )));
    }
    let n = pool.len();
    if n == 0 {
        return StreamingSelector::new(capacities.to_vec(), p).map(|s| s.finish());
    }
    let shards = rayon::current_num_threads().max(1) * 4;
    let chunk = n.div_ceil(shards).max(1);
    let banks: Result<Vec<Vec<RankedList>>> = pool
        .examples()
        .par_chunks(chunk)
        .map(|shard| {
            let mut selector = StreamingSelector::new(capacities.to_vec(), p)?;
            for e in shard {
                selector.offer(e.id, &model.probabilities(&e.features)?)?;
            }
            Ok(selector.finish())
        })
        .collect();
    let mut banks = banks?.into_iter();
    let first = banks.next().expect("at least one shard");
    banks.try_fold(first, |acc, bank| merge_ranked_banks(&acc, &bank))
}

/// With the parallel feature off, scoring is always sequential.
#[cfg(not(feature = "parallel"))]
pub fn score_pool(
    model: &SoftmaxClassifier,
    pool: &UnlabeledPool,
    capacities: &[usize],
    p: usize,
) -> Result<Vec<RankedList>> {
    score_pool_seq(model, pool, capacities, p)
}
