//! `eval`: top-k accuracy of a saved model on a labeled feature file.
//! The result is printed to stdout as JSON and optionally written to a file.

use std::path::PathBuf;

use clap::Args;
use semisup::classifier::SoftmaxClassifier;
use semisup::data::read_labeled;
use semisup::pipeline::evaluate;
use semisup::Result;
use serde::Serialize;

use crate::io::{write_json, OutputGuard};

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Labeled feature file to evaluate on.
    #[arg(long)]
    pub test: PathBuf,
    /// Count a prediction correct if the label is in the top k classes.
    #[arg(long, default_value_t = 1)]
    pub topk: usize,
    /// Also write the result JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct EvalResult {
    accuracy: f64,
    topk: usize,
    examples: usize,
}

pub fn run(args: EvalArgs) -> Result<()> {
    let model = SoftmaxClassifier::load(&args.model)?;
    let test = read_labeled(&args.test)?;
    let accuracy = evaluate(&model, &test, args.topk)?;
    let result = EvalResult {
        accuracy,
        topk: args.topk,
        examples: test.len(),
    };
    if let Some(out) = &args.out {
        let mut guard = OutputGuard::new();
        guard.track(out);
        write_json(&result, out)?;
        guard.commit();
    }
    println!("{}", serde_json::to_string(&result).expect("serializable"));
    Ok(())
}
