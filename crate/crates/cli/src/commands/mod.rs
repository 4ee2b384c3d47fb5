pub mod dedup;
pub mod eval;
pub mod gen;
pub mod run;
pub mod score;
pub mod select;
pub mod study;
pub mod train;

pub mod finetune {
    pub use super::train::{run_finetune as run, FinetuneArgs};
}
