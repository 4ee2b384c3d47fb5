//! Binary feature file ("SSLF"), little-endian.
//!
//! Layout: magic `SSLF`, version byte 0x01, u64 example count, u32 dim,
//! u8 flags (bit0 = tags present, bit1 = labels present). When labels are
//! present the header additionally carries u32 num_classes so the container
//! round-trips exactly even when some classes have no examples. Then per
//! example: u64 id, dim f32 features, tags as u16 count + u32 indices when
//! flagged, u32 label when flagged.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::data::{ExampleId, LabeledDataset, LabeledExample, PoolExample, UnlabeledPool};
use crate::error::{Error, Result};

const MAGIC: [u8; 4] = *b"SSLF";
const VERSION: u8 = 0x01;
const FLAG_TAGS: u8 = 0b01;
const FLAG_LABELS: u8 = 0b10;

/// Either container kind the feature format can hold.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureContainer {
    Labeled(LabeledDataset),
    Pool(UnlabeledPool),
}

/// Tracks the byte offset so read failures can point at a position.
struct Reader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Reader<R> {
    fn new(inner: R) -> Self {
        Self { inner, offset: 0 }
    }

    fn read_bytes(&mut self, buf: &mut [u8]) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| {
            Error::data(format!(
                "feature file truncated or unreadable at byte {}: {e}",
                self.offset
            ))
        })?;
        self.offset += buf.len() as u64;
        Ok(())
    }

    fn read_u8(&mut self) -> Result<u8> {
        let mut b = [0u8; 1];
        self.read_bytes(&mut b)?;
        Ok(b[0])
    }

    fn read_u16(&mut self) -> Result<u16> {
        let mut b = [0u8; 2];
        self.read_bytes(&mut b)?;
        Ok(u16::from_le_bytes(b))
    }

    fn read_u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.read_bytes(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    fn read_u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.read_bytes(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    fn read_f32(&mut self) -> Result<f32> {
        let mut b = [0u8; 4];
        self.read_bytes(&mut b)?;
        Ok(f32::from_le_bytes(b))
    }
}

fn write_header<W: Write>(
    w: &mut W,
    count: u64,
    dim: u32,
    flags: u8,
    num_classes: Option<u32>,
) -> Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&[VERSION])?;
    w.write_all(&count.to_le_bytes())?;
    w.write_all(&dim.to_le_bytes())?;
    w.write_all(&[flags])?;
    if let Some(l) = num_classes {
        w.write_all(&l.to_le_bytes())?;
    }
    Ok(())
}

/// Write either container kind to `path`. Byte-identical output for equal
/// containers.
pub fn write_features(container: &FeatureContainer, path: &Path) -> Result<()> {
    match container {
        FeatureContainer::Labeled(d) => write_labeled(d, path),
        FeatureContainer::Pool(p) => write_pool(p, path),
    }
}

pub fn write_labeled(dataset: &LabeledDataset, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    write_header(
        &mut w,
        dataset.len() as u64,
        dataset.dim() as u32,
        FLAG_LABELS,
        Some(dataset.num_classes() as u32),
    )?;
    for ex in dataset.examples() {
        w.write_all(&ex.id.0.to_le_bytes())?;
        for v in &ex.features {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&ex.label.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_pool(pool: &UnlabeledPool, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    write_header(&mut w, pool.len() as u64, pool.dim() as u32, FLAG_TAGS, None)?;
    for ex in pool.examples() {
        w.write_all(&ex.id.0.to_le_bytes())?;
        for v in &ex.features {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&(ex.tags.len() as u16).to_le_bytes())?;
        for t in &ex.tags {
            w.write_all(&t.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a feature file, validating container invariants on the way in.
pub fn read_features(path: &Path) -> Result<FeatureContainer> {
    let file = File::open(path)?;
    let mut r = Reader::new(BufReader::new(file));

    let mut magic = [0u8; 4];
    r.read_bytes(&mut magic)?;
    if magic != MAGIC {
        return Err(Error::data(format!(
            "feature file {}: bad magic {magic:02x?}",
            path.display()
        )));
    }
    let version = r.read_u8()?;
    if version != VERSION {
        return Err(Error::data(format!(
            "feature file {}: unsupported version {version}",
            path.display()
        )));
    }
    let count = r.read_u64()?;
    let dim = r.read_u32()? as usize;
    let flags = r.read_u8()?;
    if flags & !(FLAG_TAGS | FLAG_LABELS) != 0 {
        return Err(Error::data(format!(
            "feature file {}: unknown flags {flags:#04x}",
            path.display()
        )));
    }
    let has_tags = flags & FLAG_TAGS != 0;
    let has_labels = flags & FLAG_LABELS != 0;
    if has_tags && has_labels {
        return Err(Error::data(format!(
            "feature file {}: labeled file with tags is not supported",
            path.display()
        )));
    }
    let num_classes = if has_labels { Some(r.read_u32()?) } else { None };

    if has_labels {
        let mut examples = Vec::with_capacity(count.min(1 << 20) as usize);
        for position in 0..count {
            let id = ExampleId(r.read_u64()?);
            let mut features = Vec::with_capacity(dim);
            for j in 0..dim {
                let v = r.read_f32()?;
                if !v.is_finite() {
                    return Err(Error::data(format!(
                        "feature file {}: non-finite feature at example {position}, index {j}",
                        path.display()
                    )));
                }
                features.push(v);
            }
            let label = r.read_u32()?;
            examples.push(LabeledExample { id, features, label });
        }
        let dataset = LabeledDataset::new(dim, num_classes.unwrap() as usize, examples)?;
        Ok(FeatureContainer::Labeled(dataset))
    } else {
        let mut examples = Vec::with_capacity(count.min(1 << 20) as usize);
        for position in 0..count {
            let id = ExampleId(r.read_u64()?);
            let mut features = Vec::with_capacity(dim);
            for j in 0..dim {
                let v = r.read_f32()?;
                if !v.is_finite() {
                    return Err(Error::data(format!(
                        "feature file {}: non-finite feature at example {position}, index {j}",
                        path.display()
                    )));
                }
                features.push(v);
            }
            let tags = if has_tags {
                let n = r.read_u16()? as usize;
                let mut tags = Vec::with_capacity(n);
                for _ in 0..n {
                    tags.push(r.read_u32()?);
                }
                tags
            } else {
                Vec::new()
            };
            examples.push(PoolExample { id, features, tags });
        }
        Ok(FeatureContainer::Pool(UnlabeledPool::new(dim, examples)?))
    }
}

pub fn read_labeled(path: &Path) -> Result<LabeledDataset> {
    match read_features(path)? {
        FeatureContainer::Labeled(d) => Ok(d),
        FeatureContainer::Pool(_) => Err(Error::data(format!(
            "{}: expected a labeled dataset, found an unlabeled pool",
            path.display()
        ))),
    }
}

pub fn read_pool(path: &Path) -> Result<UnlabeledPool> {
    match read_features(path)? {
        FeatureContainer::Pool(p) => Ok(p),
        FeatureContainer::Labeled(_) => Err(Error::data(format!(
            "{}: expected an unlabeled pool, found a labeled dataset",
            path.display()
        ))),
    }
}
