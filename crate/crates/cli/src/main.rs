//! `semisup`: generate synthetic data, train and evaluate classifiers, and
//! drive the teacher/student selection pipeline from the command line.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
//! failure. Errors are printed to stderr as one JSON object:
//! `{"error":{"kind":"...","message":"..."}}`.

mod bank;
mod commands;
mod config;
mod io;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use semisup::Error;

#[derive(Parser)]
#[command(name = "semisup", version, about = "Teacher/student semi-supervised selection pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled set, unlabeled pool, and test set.
    Gen(commands::gen::GenArgs),
    /// Train a classifier from scratch on a labeled feature file.
    Train(commands::train::TrainArgs),
    /// Score an unlabeled pool with a model into a ranked-bank file.
    Score(commands::score::ScoreArgs),
    /// Construct a dataset manifest from one or more ranked banks.
    Select(commands::select::SelectArgs),
    /// Continue training an existing model on a labeled feature file.
    Finetune(commands::finetune::FinetuneArgs),
    /// Top-k accuracy of a model on a labeled feature file.
    Eval(commands::eval::EvalArgs),
    /// Remove pool examples that are near-duplicates of evaluation examples.
    Dedup(commands::dedup::DedupArgs),
    /// Run the full pipeline from a config file.
    Run(commands::run::RunArgs),
    /// Sweep selection size and pool size; optionally compare variants.
    Study(commands::study::StudyArgs),
}

fn dispatch(cli: Cli) -> semisup::Result<()> {
    match cli.command {
        Command::Gen(args) => commands::gen::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Score(args) => commands::score::run(args),
        Command::Select(args) => commands::select::run(args),
        Command::Finetune(args) => commands::finetune::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Dedup(args) => commands::dedup::run(args),
        Command::Run(args) => commands::run::run(args),
        Command::Study(args) => commands::study::run(args),
    }
}

fn classify(err: &Error) -> (&'static str, i32) {
    match err {
        Error::Config(_) => ("config", 2),
        Error::Data(_) => ("data", 3),
        Error::Numeric(_) => ("numeric", 4),
        Error::Io(_) => ("io", 3),
    }
}

fn emit_error(kind: &str, message: &str) {
    let payload = serde_json::json!({"error": {"kind": kind, "message": message}});
    eprintln!("{payload}");
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            std::process::exit(0);
        }
        Err(e) => {
            emit_error("config", &e.to_string());
            std::process::exit(2);
        }
    };
    if let Err(err) = dispatch(cli) {
        let (kind, code) = classify(&err);
        emit_error(kind, &err.to_string());
        std::process::exit(code);
    }
}
