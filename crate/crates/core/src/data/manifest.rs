//! Manifest files: one JSON object per line, UTF-8.
//!
//! Keys are written in the fixed order id, label, score so that output is
//! byte-stable across runs. The score key is omitted when absent.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::ExampleId;
use crate::error::{Error, Result};

/// One manifest record. Serialization preserves declaration order of the
/// fields, which is what makes the output byte-stable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: ExampleId,
    pub label: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

/// Write entries in the given order, one JSON object per line.
pub fn write_manifest(entries: &[ManifestEntry], path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    for entry in entries {
        // Struct serialization never fails here.
        let line = serde_json::to_string(entry).expect("manifest entry serializes");
        w.write_all(line.as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Read a manifest, rejecting malformed lines and duplicate (id,label)
/// pairs.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut entries = Vec::new();
    let mut seen: HashSet<(ExampleId, u32)> = HashSet::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let entry: ManifestEntry = serde_json::from_str(&line).map_err(|e| {
            Error::data(format!(
                "manifest {} line {}: malformed entry: {e}",
                path.display(),
                lineno + 1
            ))
        })?;
        if let Some(score) = entry.score {
            if !score.is_finite() {
                return Err(Error::data(format!(
                    "manifest {} line {}: non-finite score",
                    path.display(),
                    lineno + 1
                )));
            }
        }
        if !seen.insert((entry.id, entry.label)) {
            return Err(Error::data(format!(
                "manifest {} line {}: duplicate (id,label) pair ({}, {})",
                path.display(),
                lineno + 1,
                entry.id,
                entry.label
            )));
        }
        entries.push(entry);
    }
    Ok(entries)
}
