//! Teacher/student semi-supervised training over feature vectors.
//!
//! The pipeline trains a teacher on a small labeled set, scores a large
//! unlabeled pool with it, keeps the top-ranked pool examples per class,
//! pre-trains a student on that constructed set, and fine-tunes the
//! student on the original labels. Supporting modules cover synthetic
//! data generation, streaming per-class selection, and embedding-based
//! pool deduplication.

pub mod classifier;
pub mod data;
pub mod dedup;
pub mod error;
pub mod pipeline;
pub mod selector;
pub mod syngen;
pub mod trainer;

pub use error::{Error, Result};
