//! Ranked-bank files: the on-disk form of per-class ranked lists.
//!
//! `score` writes one bank per pool shard; `select` merges banks and
//! constructs the dataset manifest. Shards are mergeable only if they were
//! scored with the same model shape, K, and P.

use std::path::Path;

use semisup::selector::RankedList;
use semisup::{Error, Result};
use serde::{Deserialize, Serialize};

pub const BANK_FORMAT: &str = "ranked-bank/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankedBankFile {
    /// Format tag, always "ranked-bank/1".
    pub format: String,
    pub num_classes: usize,
    pub k: usize,
    pub p: usize,
    /// One list per class, class index ascending.
    pub lists: Vec<RankedList>,
}

impl RankedBankFile {
    pub fn new(num_classes: usize, k: usize, p: usize, lists: Vec<RankedList>) -> Self {
        Self {
            format: BANK_FORMAT.to_string(),
            num_classes,
            k,
            p,
            lists,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != BANK_FORMAT {
            return Err(Error::data(format!(
                "bank: unknown format {:?}, expected {:?}",
                self.format, BANK_FORMAT
            )));
        }
        if self.lists.len() != self.num_classes {
            return Err(Error::data(format!(
                "bank: {} lists for {} classes",
                self.lists.len(),
                self.num_classes
            )));
        }
        for (i, list) in self.lists.iter().enumerate() {
            if list.class as usize != i {
                return Err(Error::data(format!(
                    "bank: list {i} is for class {}",
                    list.class
                )));
            }
            if list.capacity != self.k {
                return Err(Error::data(format!(
                    "bank: class {i} capacity {} != k {}",
                    list.capacity, self.k
                )));
            }
            list.validate()?;
        }
        Ok(())
    }

    /// True when `other` was produced under the same scoring parameters and
    /// may therefore be merged with `self`.
    pub fn compatible(&self, other: &RankedBankFile) -> bool {
        self.num_classes == other.num_classes && self.k == other.k && self.p == other.p
    }
}

pub fn write_bank(bank: &RankedBankFile, path: &Path) -> Result<()> {
    crate::io::write_json(bank, path)
}

pub fn read_bank(path: &Path) -> Result<RankedBankFile> {
    let bank: RankedBankFile = crate::io::read_data_json(path)?;
    bank.validate()
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    Ok(bank)
}
