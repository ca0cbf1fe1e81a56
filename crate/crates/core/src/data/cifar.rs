//! CIFAR-10 binary batches.
//!
//! Each record is 3073 bytes: one label byte (0..=9) followed by 3072 pixel
//! bytes, 1024 per channel in R, G, B order, each channel row-major 32×32.
//! Files are a bare concatenation of records.

use std::fs;
use std::path::{Path, PathBuf};

use super::Dataset;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const IMAGE_SHAPE: [usize; 3] = [3, 32, 32];
pub const PIXELS: usize = 3 * 32 * 32;
pub const RECORD_BYTES: usize = 1 + PIXELS;
pub const RECORDS_PER_BATCH: usize = 10_000;
pub const NUM_CLASSES: usize = 10;
pub const TRAIN_FILES: [&str; 5] = [
    "data_batch_1.bin",
    "data_batch_2.bin",
    "data_batch_3.bin",
    "data_batch_4.bin",
    "data_batch_5.bin",
];
pub const TEST_FILE: &str = "test_batch.bin";

/// Byte length of a batch file holding `records` records.
pub const fn batch_file_len(records: usize) -> usize {
    records * RECORD_BYTES
}

/// Decodes one batch file; pixel bytes are scaled by 1/255.
pub fn load_batch(path: &Path) -> Result<Dataset> {
    let bytes = fs::read(path).map_err(|e| Error::DataFile {
        path: path.to_path_buf(),
        reason: format!("cannot read: {e}"),
    })?;
    decode_batch(&bytes).map_err(|reason| Error::DataFile {
        path: path.to_path_buf(),
        reason,
    })
}

fn decode_batch(bytes: &[u8]) -> std::result::Result<Dataset, String> {
    if bytes.is_empty() || !bytes.len().is_multiple_of(RECORD_BYTES) {
        return Err(format!(
            "length {} is not a positive multiple of the {RECORD_BYTES}-byte record size",
            bytes.len()
        ));
    }
    let n = bytes.len() / RECORD_BYTES;
    let mut labels = Vec::with_capacity(n);
    let mut pixels = Vec::with_capacity(n * PIXELS);
    for (i, rec) in bytes.chunks_exact(RECORD_BYTES).enumerate() {
        let label = rec[0] as usize;
        if label >= NUM_CLASSES {
            return Err(format!(
                "record {i} has label byte {label} (expected 0..=9)"
            ));
        }
        labels.push(label);
        pixels.extend(rec[1..].iter().map(|&b| f64::from(b) / 255.0));
    }
    let images = Tensor::new(vec![n, 3, 32, 32], pixels).map_err(|e| e.to_string())?;
    Dataset::new(images, labels, NUM_CLASSES).map_err(|e| e.to_string())
}

/// Loads the five training batches and the test batch from `dir` (or from
/// its `cifar-10-batches-bin` subdirectory).
pub fn load_cifar10(dir: &Path) -> Result<(Dataset, Dataset)> {
    let root = resolve_dir(dir);
    let mut train_parts = Vec::with_capacity(TRAIN_FILES.len());
    for name in TRAIN_FILES {
        train_parts.push(load_batch(&root.join(name))?);
    }
    let test = load_batch(&root.join(TEST_FILE))?;
    Ok((concat(&train_parts)?, test))
}

fn resolve_dir(dir: &Path) -> PathBuf {
    let nested = dir.join("cifar-10-batches-bin");
    if !dir.join(TRAIN_FILES[0]).exists() && nested.is_dir() {
        nested
    } else {
        dir.to_path_buf()
    }
}

/// Concatenates datasets with equal sample shapes and class counts.
pub fn concat(parts: &[Dataset]) -> Result<Dataset> {
    let first = parts
        .first()
        .ok_or_else(|| Error::EmptyDataset("nothing to concatenate".into()))?;
    let mut samples = Vec::new();
    for p in parts {
        if p.sample_shape() != first.sample_shape() {
            return Err(Error::shape(
                "concat",
                first.sample_shape(),
                p.sample_shape(),
            ));
        }
        samples.extend(p.to_samples());
    }
    Dataset::from_samples(first.sample_shape(), samples, first.num_classes())
}

/// Encodes a dataset of `[3, 32, 32]` images in the batch format, rounding
/// pixels to the nearest byte.
pub fn encode_batch(ds: &Dataset) -> Result<Vec<u8>> {
    if ds.sample_shape() != IMAGE_SHAPE {
        return Err(Error::shape(
            "cifar record",
            &IMAGE_SHAPE,
            ds.sample_shape(),
        ));
    }
    let mut out = Vec::with_capacity(batch_file_len(ds.len()));
    for i in 0..ds.len() {
        out.push(ds.labels()[i] as u8);
        out.extend(
            ds.sample(i)
                .iter()
                .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8),
        );
    }
    Ok(out)
}
