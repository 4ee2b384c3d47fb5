//! Four-stage orchestration: train a teacher on the labeled set, score the
//! unlabeled pool and keep the per-class best, pre-train a student on the
//! selection, fine-tune the student on the labeled set.
//!
//! Fine-tuning takes only the labeled dataset by construction; no pool
//! example can leak into stage 4. Every stage is seeded, selection is
//! order-invariant, and training is single-threaded, so a full run is a
//! pure function of (inputs, config).

use serde::{Deserialize, Serialize};

use crate::classifier::SoftmaxClassifier;
use crate::data::{ConstructedDataset, ConstructedEntry, LabeledDataset, UnlabeledPool};
use crate::dedup::{dedup_pool, Embedder};
use crate::error::{Error, Result};
use crate::selector::{
    construct_dataset, score_pool, tag_select, SelectionConfig, SelectionVariant,
};
use crate::trainer::{fine_tune, train, EpochMetrics, TrainConfig, TrainData};

/// Which teacher the pipeline uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineMode {
    /// Teacher trained on the labeled set only.
    SemiSupervised,
    /// Teacher and student share the architecture; with rounds > 1 each
    /// fine-tuned student scores the pool for the next round.
    SelfTraining,
    /// Teacher is pre-trained on pool tag pseudo-labels, then fine-tuned
    /// on the labeled set, before it scores the pool.
    SemiWeakly,
}

impl std::fmt::Display for PipelineMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PipelineMode::SemiSupervised => "semi_supervised",
            PipelineMode::SelfTraining => "self_training",
            PipelineMode::SemiWeakly => "semi_weakly",
        };
        f.write_str(s)
    }
}

/// Full pipeline parameters. `seed` drives pipeline-level randomness (tag
/// sampling); model initialization and shuffling use the per-stage train
/// config seeds, so the supervised baseline is reproducible from
/// `teacher` alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub mode: PipelineMode,
    pub teacher: TrainConfig,
    pub student: TrainConfig,
    pub finetune: TrainConfig,
    pub selection: SelectionConfig,
    pub dedup_r: Option<usize>,
    pub seed: u64,
    pub rounds: u32,
}

impl PipelineConfig {
    pub fn validate(&self, num_classes: usize) -> Result<()> {
        self.teacher.validate()?;
        self.student.validate()?;
        self.finetune.validate()?;
        self.selection.validate(num_classes)?;
        if self.rounds == 0 {
            return Err(Error::config("pipeline: rounds must be positive"));
        }
        if self.rounds > 1 && self.mode != PipelineMode::SelfTraining {
            return Err(Error::config(format!(
                "pipeline: rounds={} requires self_training mode, not {}",
                self.rounds, self.mode
            )));
        }
        Ok(())
    }
}

/// Outcome of the pre-filtering dedup stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DedupSummary {
    pub removed: usize,
    pub distance_of_last_removed: Option<f64>,
}

/// One selection + train + fine-tune round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: u32,
    pub constructed_size: usize,
    pub per_class_sizes: Vec<usize>,
    /// Classes whose shortlist came up short of its capacity.
    pub shortfall_classes: Vec<u32>,
    pub pretrained_accuracy: f64,
    pub finetuned_accuracy: f64,
}

/// Serializable run summary: stage accuracies, selection sizes, config
/// echo. Contains nothing non-deterministic, so identical runs serialize
/// to identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub config: PipelineConfig,
    pub dedup: Option<DedupSummary>,
    pub teacher_accuracy: f64,
    pub rounds: Vec<RoundReport>,
    pub final_accuracy: f64,
}

/// Models and metrics from one pipeline run.
#[derive(Debug)]
pub struct PipelineRun {
    pub teacher: SoftmaxClassifier,
    pub student: SoftmaxClassifier,
    /// Stage-labeled training curves, in execution order.
    pub metrics: Vec<(String, Vec<EpochMetrics>)>,
    /// The dataset constructed in each round, in round order.
    pub constructed: Vec<ConstructedDataset>,
    pub report: PipelineReport,
}

/// Top-k accuracy of the model on a labeled set.
pub fn evaluate(model: &SoftmaxClassifier, test: &LabeledDataset, k: usize) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::data("evaluate: empty test set"));
    }
    if test.dim() != model.dim() {
        return Err(Error::data(format!(
            "evaluate: test dim {} != model dim {}",
            test.dim(),
            model.dim()
        )));
    }
    let mut hits = 0usize;
    for e in test.examples() {
        let top = model.predict_topk(&e.features, k)?;
        if top.iter().any(|&(class, _)| class == e.label) {
            hits += 1;
        }
    }
    Ok(hits as f64 / test.len() as f64)
}

/// Every (id, tag) pair in the pool as a hard-labeled training entry.
fn tag_pseudo_labels(pool: &UnlabeledPool, num_classes: usize) -> Result<ConstructedDataset> {
    if !pool.has_tags() {
        return Err(Error::data("pipeline: semi_weakly needs a tagged pool"));
    }
    let mut entries = Vec::new();
    for e in pool.examples() {
        for &tag in &e.tags {
            if tag as usize >= num_classes {
                return Err(Error::data(format!(
                    "pipeline: tag {tag} >= num_classes {num_classes} (id {})",
                    e.id
                )));
            }
            entries.push(ConstructedEntry {
                id: e.id,
                label: tag,
                score: 1.0,
            });
        }
    }
    ConstructedDataset::new(entries)
}

/// Select the training set for one round with the given scoring model.
fn select_round(
    scorer: &SoftmaxClassifier,
    pool: &UnlabeledPool,
    config: &PipelineConfig,
    num_classes: usize,
) -> Result<(ConstructedDataset, Vec<usize>, Vec<u32>)> {
    let (constructed, per_class_sizes, capacities) = match config.selection.variant {
        SelectionVariant::BalancedWithTags => {
            let ds = tag_select(pool, num_classes, config.selection.k, config.seed)?;
            let mut sizes = vec![0usize; num_classes];
            for e in ds.entries() {
                sizes[e.label as usize] += 1;
            }
            (ds, sizes, vec![config.selection.k; num_classes])
        }
        _ => {
            let capacities = config.selection.capacities(num_classes)?;
            let lists = score_pool(scorer, pool, &capacities, config.selection.p)?;
            let sizes = lists.iter().map(|l| l.entries.len()).collect();
            (construct_dataset(&lists)?, sizes, capacities)
        }
    };
    if constructed.is_empty() {
        return Err(Error::data(format!(
            "pipeline: selection produced no examples (pool {} examples, variant {}, k {}, p {})",
            pool.len(),
            config.selection.variant,
            config.selection.k,
            config.selection.p
        )));
    }
    let shortfalls = per_class_sizes
        .iter()
        .zip(&capacities)
        .enumerate()
        .filter(|(_, (&size, &cap))| size < cap)
        .map(|(class, _)| class as u32)
        .collect();
    Ok((constructed, per_class_sizes, shortfalls))
}

/// Execute the configured pipeline end to end.
pub fn run_pipeline(
    labeled: &LabeledDataset,
    pool: &UnlabeledPool,
    test: &LabeledDataset,
    config: &PipelineConfig,
) -> Result<PipelineRun> {
    let num_classes = labeled.num_classes();
    let dim = labeled.dim();
    config.validate(num_classes)?;
    if pool.dim() != dim || test.dim() != dim {
        return Err(Error::data(format!(
            "pipeline: dims differ (labeled {dim}, pool {}, test {})",
            pool.dim(),
            test.dim()
        )));
    }
    if test.num_classes() != num_classes {
        return Err(Error::data(format!(
            "pipeline: labeled has {num_classes} classes, test has {}",
            test.num_classes()
        )));
    }

    let mut metrics = Vec::new();

    let (pool, dedup_summary) = match config.dedup_r {
        Some(r) => {
            let (filtered, report) = dedup_pool(pool, test, r, &Embedder::Raw)?;
            let summary = DedupSummary {
                removed: report.removed_ids.len(),
                distance_of_last_removed: report.distance_of_last_removed,
            };
            (filtered, Some(summary))
        }
        None => (pool.clone(), None),
    };

    let mut teacher = SoftmaxClassifier::init(num_classes, dim, config.teacher.seed)?;
    match config.mode {
        PipelineMode::SemiSupervised | PipelineMode::SelfTraining => {
            let m = train(&mut teacher, &TrainData::Labeled(labeled), &config.teacher)?;
            metrics.push(("teacher".to_string(), m));
        }
        PipelineMode::SemiWeakly => {
            let tags = tag_pseudo_labels(&pool, num_classes)?;
            let data = TrainData::Constructed {
                dataset: &tags,
                pool: &pool,
            };
            let m = train(&mut teacher, &data, &config.teacher)?;
            metrics.push(("teacher_tag_pretrain".to_string(), m));
            let m = fine_tune(&mut teacher, labeled, &config.finetune)?;
            metrics.push(("teacher_finetune".to_string(), m));
        }
    }
    let teacher_accuracy = evaluate(&teacher, test, 1)?;

    let mut scorer = teacher.clone();
    let mut student = None;
    let mut rounds = Vec::with_capacity(config.rounds as usize);
    let mut constructed_per_round = Vec::with_capacity(config.rounds as usize);
    for round in 1..=config.rounds {
        let (constructed, per_class_sizes, shortfall_classes) =
            select_round(&scorer, &pool, config, num_classes)?;
        let init_seed = config.student.seed.wrapping_add(round as u64 - 1);
        let mut model = SoftmaxClassifier::init(num_classes, dim, init_seed)?;
        let data = TrainData::Constructed {
            dataset: &constructed,
            pool: &pool,
        };
        let m = train(&mut model, &data, &config.student)?;
        metrics.push((format!("round{round}_pretrain"), m));
        let pretrained_accuracy = evaluate(&model, test, 1)?;
        let m = fine_tune(&mut model, labeled, &config.finetune)?;
        metrics.push((format!("round{round}_finetune"), m));
        let finetuned_accuracy = evaluate(&model, test, 1)?;
        rounds.push(RoundReport {
            round,
            constructed_size: constructed.len(),
            per_class_sizes,
            shortfall_classes,
            pretrained_accuracy,
            finetuned_accuracy,
        });
        constructed_per_round.push(constructed);
        scorer = model.clone();
        student = Some(model);
    }
    let student = student.expect("rounds >= 1");
    let final_accuracy = rounds.last().expect("rounds >= 1").finetuned_accuracy;

    Ok(PipelineRun {
        teacher,
        student,
        metrics,
        constructed: constructed_per_round,
        report: PipelineReport {
            config: config.clone(),
            dedup: dedup_summary,
            teacher_accuracy,
            rounds,
            final_accuracy,
        },
    })
}

/// One variant's slice of the comparison study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantOutcome {
    pub variant: SelectionVariant,
    pub per_class_budget: Option<Vec<usize>>,
    pub constructed_size: usize,
    pub shortfall: usize,
    pub teacher_accuracy: f64,
    pub pretrained_accuracy: f64,
    pub finetuned_accuracy: f64,
}

/// Equal-budget comparison of the three selection variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantStudy {
    /// Total selection budget shared by every variant (k * L).
    pub budget: usize,
    pub outcomes: Vec<VariantOutcome>,
}

/// Run the pipeline once per selection variant under one shared budget.
/// `class_weights` shape the unbalanced variant's per-class allocation.
pub fn run_variant_study(
    labeled: &LabeledDataset,
    pool: &UnlabeledPool,
    test: &LabeledDataset,
    base: &PipelineConfig,
    class_weights: &[f64],
) -> Result<VariantStudy> {
    let num_classes = labeled.num_classes();
    if class_weights.len() != num_classes {
        return Err(Error::config(format!(
            "study: {} weights for {num_classes} classes",
            class_weights.len()
        )));
    }
    let budget = base.selection.k * num_classes;
    let variants = [
        SelectionVariant::BalancedRanked,
        SelectionVariant::UnbalancedRanked,
        SelectionVariant::BalancedWithTags,
    ];
    let mut outcomes = Vec::with_capacity(variants.len());
    for variant in variants {
        let mut config = base.clone();
        config.selection.variant = variant;
        config.selection.per_class_budget = match variant {
            SelectionVariant::UnbalancedRanked => {
                Some(crate::selector::zipfian_allocate(class_weights, budget, false)?)
            }
            _ => None,
        };
        let run = run_pipeline(labeled, pool, test, &config)?;
        let round = run.report.rounds.last().expect("one round");
        outcomes.push(VariantOutcome {
            variant,
            per_class_budget: config.selection.per_class_budget.clone(),
            constructed_size: round.constructed_size,
            shortfall: budget - round.constructed_size.min(budget),
            teacher_accuracy: run.report.teacher_accuracy,
            pretrained_accuracy: round.pretrained_accuracy,
            finetuned_accuracy: round.finetuned_accuracy,
        });
    }
    Ok(VariantStudy { budget, outcomes })
}
