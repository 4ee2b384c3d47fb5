//! `study`: parameter sweeps around one base config. Sweeps the shortlist
//! size K over a list, the pool size over subsample fractions (scaling K
//! with the pool so selection pressure is held fixed), and optionally
//! compares the three selection variants under one equal budget.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use semisup::data::{read_labeled, read_pool};
use semisup::pipeline::{run_pipeline, run_variant_study, VariantStudy};
use semisup::selector::SelectionVariant;
use semisup::{Error, Result};

use crate::config::{parse_list, RunConfigFile};
use crate::io::{read_config_json, with_threads, write_json, OutputGuard};

#[derive(Args)]
pub struct StudyArgs {
    /// Run config JSON used as the sweep baseline.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides the config's `out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated K values to sweep.
    #[arg(long)]
    pub k_list: Option<String>,
    /// Comma-separated pool fractions in (0, 1] to sweep.
    #[arg(long)]
    pub pool_fractions: Option<String>,
    /// Also compare selection variants under one equal budget.
    #[arg(long)]
    pub variants: bool,
    /// Zipf exponent shaping the unbalanced variant's class weights.
    #[arg(long, default_value_t = 1.0)]
    pub variant_exponent: f64,
    /// Override the run seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Scoring thread count (defaults to the rayon global pool).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(serde::Serialize)]
struct KPoint {
    k: usize,
    constructed_size: usize,
    teacher_accuracy: f64,
    pretrained_accuracy: f64,
    finetuned_accuracy: f64,
}

#[derive(serde::Serialize)]
struct PoolPoint {
    fraction: f64,
    pool_size: usize,
    k: usize,
    constructed_size: usize,
    teacher_accuracy: f64,
    pretrained_accuracy: f64,
    finetuned_accuracy: f64,
}

#[derive(serde::Serialize)]
struct StudyOutput {
    k_sweep: Vec<KPoint>,
    pool_sweep: Vec<PoolPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    variants: Option<VariantStudy>,
}

pub fn run(args: StudyArgs) -> Result<()> {
    if args.k_list.is_none() && args.pool_fractions.is_none() && !args.variants {
        return Err(Error::config(
            "study: nothing to do; pass --k-list, --pool-fractions, or --variants",
        ));
    }

    let mut file: RunConfigFile = read_config_json(&args.config)?;
    let base_dir = args.config.parent().unwrap_or_else(|| Path::new("."));
    file.resolve_paths(base_dir);
    if let Some(out) = &args.out {
        file.out = Some(out.clone());
    }
    if let Some(seed) = args.seed {
        file.seed = seed;
    }
    let out: PathBuf = file
        .out
        .clone()
        .ok_or_else(|| Error::config("study: no output directory (config `out` or --out)"))?;

    let base = file.to_pipeline()?;
    if base.selection.variant == SelectionVariant::UnbalancedRanked
        && (args.k_list.is_some() || args.pool_fractions.is_some())
    {
        return Err(Error::config(
            "study: sweeps rescale K, which the fixed per-class budget of \
             unbalanced_ranked cannot follow; use a balanced variant",
        ));
    }

    let labeled = read_labeled(&file.labeled)?;
    let pool = read_pool(&file.pool)?;
    let test = read_labeled(&file.test)?;

    let k_values: Vec<usize> = match &args.k_list {
        Some(s) => parse_list(s, "k-list")?,
        None => Vec::new(),
    };
    let fractions: Vec<f64> = match &args.pool_fractions {
        Some(s) => parse_list(s, "pool-fractions")?,
        None => Vec::new(),
    };
    for &f in &fractions {
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::config(format!(
                "pool-fractions: {f} outside (0, 1]"
            )));
        }
    }

    let output = with_threads(args.threads, || {
        let mut k_sweep = Vec::with_capacity(k_values.len());
        for &k in &k_values {
            let mut config = base.clone();
            config.selection.k = k;
            let run = run_pipeline(&labeled, &pool, &test, &config)?;
            let last = run.report.rounds.last().expect("rounds >= 1");
            k_sweep.push(KPoint {
                k,
                constructed_size: last.constructed_size,
                teacher_accuracy: run.report.teacher_accuracy,
                pretrained_accuracy: last.pretrained_accuracy,
                finetuned_accuracy: last.finetuned_accuracy,
            });
        }

        let mut pool_sweep = Vec::with_capacity(fractions.len());
        for &fraction in &fractions {
            let count = ((pool.len() as f64) * fraction).round() as usize;
            let sub = pool.subsample(count, base.seed);
            let mut config = base.clone();
            config.selection.k = (((base.selection.k as f64) * fraction).round() as usize).max(1);
            let run = run_pipeline(&labeled, &sub, &test, &config)?;
            let last = run.report.rounds.last().expect("rounds >= 1");
            pool_sweep.push(PoolPoint {
                fraction,
                pool_size: sub.len(),
                k: config.selection.k,
                constructed_size: last.constructed_size,
                teacher_accuracy: run.report.teacher_accuracy,
                pretrained_accuracy: last.pretrained_accuracy,
                finetuned_accuracy: last.finetuned_accuracy,
            });
        }

        let variants = if args.variants {
            let weights = zipf_weights(labeled.num_classes(), args.variant_exponent)?;
            Some(run_variant_study(&labeled, &pool, &test, &base, &weights)?)
        } else {
            None
        };

        Ok(StudyOutput {
            k_sweep,
            pool_sweep,
            variants,
        })
    })?;

    fs::create_dir_all(&out)
        .map_err(|e| Error::data(format!("cannot create {}: {e}", out.display())))?;
    let path = out.join("study.json");
    let mut guard = OutputGuard::new();
    guard.track(&path);
    write_json(&output, &path)?;
    guard.commit();

    println!(
        "swept {} K value(s), {} pool fraction(s){} into {}",
        output.k_sweep.len(),
        output.pool_sweep.len(),
        if output.variants.is_some() {
            ", 3 variants"
        } else {
            ""
        },
        path.display()
    );
    Ok(())
}

fn zipf_weights(num_classes: usize, exponent: f64) -> Result<Vec<f64>> {
    if !exponent.is_finite() || exponent < 0.0 {
        return Err(Error::config(format!(
            "variant-exponent: {exponent} must be finite and non-negative"
        )));
    }
    Ok((1..=num_classes)
        .map(|rank| (rank as f64).powf(-exponent))
        .collect())
}
