//! `gen`: synthesize a Gaussian-mixture benchmark into a directory.
//!
//! Writes labeled.features, pool.features, test.features, the pool's hidden
//! oracle labels as pool_oracle.jsonl, and gen.json echoing the parameters.
//! Sample seeds derive from --seed: labeled +1, pool +2, test +3; class
//! means use --mean-seed (default --seed).

use std::fs;
use std::path::PathBuf;

use clap::Args;
use semisup::data::{write_labeled, write_manifest, write_pool};
use semisup::syngen::{generate_labeled, generate_pool, ClassPrior, MixtureSpec};
use semisup::{Error, Result};
use serde::Serialize;

use crate::io::{write_json, OutputGuard};

#[derive(Args)]
pub struct GenArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    /// Distance between any two class means.
    #[arg(long, default_value_t = 3.0)]
    pub separation: f64,
    /// Per-coordinate noise around the class mean.
    #[arg(long, default_value_t = 1.0)]
    pub noise_sigma: f64,
    /// Class prior: uniform | zipfian.
    #[arg(long, default_value = "uniform")]
    pub prior: String,
    /// Exponent for the zipfian prior.
    #[arg(long, default_value_t = 1.0)]
    pub zipf_exponent: f64,
    /// Probability that a pool tag is replaced by a random wrong class.
    #[arg(long, default_value_t = 0.0)]
    pub tag_noise: f64,
    /// Labeled set size.
    #[arg(long)]
    pub labeled: usize,
    /// Unlabeled pool size.
    #[arg(long)]
    pub pool: usize,
    /// Test set size.
    #[arg(long)]
    pub test: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seed for the class means (defaults to --seed).
    #[arg(long)]
    pub mean_seed: Option<u64>,
}

/// Parameter echo written next to the generated files.
#[derive(Serialize)]
struct GenEcho<'a> {
    classes: usize,
    dim: usize,
    separation: f64,
    noise_sigma: f64,
    prior: &'a str,
    zipf_exponent: Option<f64>,
    tag_noise: f64,
    labeled: usize,
    pool: usize,
    test: usize,
    seed: u64,
    mean_seed: u64,
}

pub fn run(args: GenArgs) -> Result<()> {
    let prior = match args.prior.as_str() {
        "uniform" => ClassPrior::Uniform,
        "zipfian" => ClassPrior::Zipfian {
            exponent: args.zipf_exponent,
        },
        other => {
            return Err(Error::config(format!(
                "unknown prior {other:?}; expected uniform or zipfian"
            )))
        }
    };
    let mean_seed = args.mean_seed.unwrap_or(args.seed);
    let spec = MixtureSpec::new(
        args.classes,
        args.dim,
        args.separation,
        args.noise_sigma,
        prior,
        args.tag_noise,
        mean_seed,
    )?;
    if args.labeled == 0 || args.pool == 0 || args.test == 0 {
        return Err(Error::config("gen: --labeled, --pool, --test must be positive"));
    }

    fs::create_dir_all(&args.out)
        .map_err(|e| Error::data(format!("cannot create {}: {e}", args.out.display())))?;
    let labeled_path = args.out.join("labeled.features");
    let pool_path = args.out.join("pool.features");
    let test_path = args.out.join("test.features");
    let oracle_path = args.out.join("pool_oracle.jsonl");
    let echo_path = args.out.join("gen.json");

    let mut guard = OutputGuard::new();
    for p in [&labeled_path, &pool_path, &test_path, &oracle_path, &echo_path] {
        guard.track(p);
    }

    let labeled = generate_labeled(&spec, args.labeled, args.seed.wrapping_add(1));
    let (pool, oracle) = generate_pool(&spec, args.pool, args.seed.wrapping_add(2));
    let test = generate_labeled(&spec, args.test, args.seed.wrapping_add(3));

    write_labeled(&labeled, &labeled_path)?;
    write_pool(&pool, &pool_path)?;
    write_labeled(&test, &test_path)?;
    write_manifest(&oracle, &oracle_path)?;
    write_json(
        &GenEcho {
            classes: args.classes,
            dim: args.dim,
            separation: args.separation,
            noise_sigma: args.noise_sigma,
            prior: &args.prior,
            zipf_exponent: match prior {
                ClassPrior::Zipfian { exponent } => Some(exponent),
                ClassPrior::Uniform => None,
            },
            tag_noise: args.tag_noise,
            labeled: args.labeled,
            pool: args.pool,
            test: args.test,
            seed: args.seed,
            mean_seed,
        },
        &echo_path,
    )?;

    guard.commit();
    println!(
        "wrote {} labeled, {} pool, {} test examples to {}",
        args.labeled,
        args.pool,
        args.test,
        args.out.display()
    );
    Ok(())
}
