//! `run`: the four-stage pipeline from a config file, with flag overrides.
//!
//! Writes into the output directory: report.json (stage accuracies and
//! selection sizes), metrics.json (per-stage training curves),
//! teacher.model and student.model, and one dhat_round{N}.jsonl manifest
//! per selection round. Identical config and seed give byte-identical
//! files.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use semisup::data::{read_labeled, read_pool, ManifestEntry};
use semisup::pipeline::{run_pipeline, PipelineRun};
use semisup::{Error, Result};

use crate::config::{parse_mode, parse_variant, RunConfigFile};
use crate::io::{read_config_json, with_threads, write_json, OutputGuard};

#[derive(Args)]
pub struct RunArgs {
    /// Run config JSON (see README for the schema).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides the config's `out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the run seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override selection.k.
    #[arg(long)]
    pub k: Option<usize>,
    /// Override selection.p.
    #[arg(long)]
    pub p: Option<usize>,
    /// Override selection.variant.
    #[arg(long)]
    pub variant: Option<String>,
    /// Override dedup_r (0 disables dedup).
    #[arg(long)]
    pub dedup_r: Option<usize>,
    /// Override rounds.
    #[arg(long)]
    pub rounds: Option<u32>,
    /// Override mode.
    #[arg(long)]
    pub mode: Option<String>,
    /// Scoring thread count (defaults to the rayon global pool).
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Load the config, apply flag overrides, and resolve paths.
pub fn load_config(args_config: &Path, args: &RunArgs) -> Result<RunConfigFile> {
    let mut file: RunConfigFile = read_config_json(args_config)?;
    let base = args_config.parent().unwrap_or_else(|| Path::new("."));
    file.resolve_paths(base);

    if let Some(out) = &args.out {
        file.out = Some(out.clone());
    }
    if let Some(seed) = args.seed {
        file.seed = seed;
    }
    if let Some(k) = args.k {
        file.selection.k = k;
    }
    if let Some(p) = args.p {
        file.selection.p = p;
    }
    if let Some(v) = &args.variant {
        file.selection.variant = parse_variant(v)?;
    }
    if let Some(r) = args.dedup_r {
        file.dedup_r = if r == 0 { None } else { Some(r) };
    }
    if let Some(rounds) = args.rounds {
        file.rounds = rounds;
    }
    if let Some(m) = &args.mode {
        file.mode = parse_mode(m)?;
    }

    for (what, path) in [
        ("labeled", &file.labeled),
        ("pool", &file.pool),
        ("test", &file.test),
    ] {
        if !path.is_file() {
            return Err(Error::data(format!(
                "{what} file {} does not exist",
                path.display()
            )));
        }
    }
    Ok(file)
}

/// Write every artifact of a finished run into `out`.
pub fn write_outputs(run: &PipelineRun, out: &Path) -> Result<()> {
    fs::create_dir_all(out)
        .map_err(|e| Error::data(format!("cannot create {}: {e}", out.display())))?;

    let report_path = out.join("report.json");
    let metrics_path = out.join("metrics.json");
    let teacher_path = out.join("teacher.model");
    let student_path = out.join("student.model");

    let mut guard = OutputGuard::new();
    for p in [&report_path, &metrics_path, &teacher_path, &student_path] {
        guard.track(p);
    }

    write_json(&run.report, &report_path)?;
    write_json(&run.metrics, &metrics_path)?;
    run.teacher.save(&teacher_path)?;
    run.student.save(&student_path)?;

    for (i, constructed) in run.constructed.iter().enumerate() {
        let path = out.join(format!("dhat_round{}.jsonl", i + 1));
        guard.track(&path);
        let entries: Vec<ManifestEntry> = constructed
            .entries()
            .iter()
            .map(|e| ManifestEntry {
                id: e.id,
                label: e.label,
                score: Some(e.score),
            })
            .collect();
        semisup::data::write_manifest(&entries, &path)?;
    }

    guard.commit();
    Ok(())
}

pub fn run(args: RunArgs) -> Result<()> {
    let file = load_config(&args.config, &args)?;
    let out = file
        .out
        .clone()
        .ok_or_else(|| Error::config("run: no output directory (config `out` or --out)"))?;
    let config = file.to_pipeline()?;

    let labeled = read_labeled(&file.labeled)?;
    let pool = read_pool(&file.pool)?;
    let test = read_labeled(&file.test)?;

    let run = with_threads(args.threads, || {
        run_pipeline(&labeled, &pool, &test, &config)
    })?;
    write_outputs(&run, &out)?;

    println!(
        "teacher accuracy {:.4}; student accuracy {:.4}; report in {}",
        run.report.teacher_accuracy,
        run.report.final_accuracy,
        out.display()
    );
    Ok(())
}
