//! IDX-format image/label loading for the MNIST-style digit task.

use std::io::Read;
use std::path::Path;

use byteorder::{BigEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;

use crate::error::{EmapError, Result};

use super::{Dataset, FeatureSchema, Split};

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

fn parse_err(offset: u64, message: impl Into<String>) -> EmapError {
    EmapError::Parse {
        offset,
        message: message.into(),
    }
}

struct IdxImages {
    count: usize,
    rows: usize,
    cols: usize,
    pixels: Vec<u8>,
}

fn read_idx_images(path: &Path) -> Result<IdxImages> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut cur = std::io::Cursor::new(&bytes);
    let magic = cur
        .read_u32::<BigEndian>()
        .map_err(|_| parse_err(0, "image file shorter than its magic number"))?;
    if magic != IMAGE_MAGIC {
        return Err(parse_err(0, format!("bad image magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}")));
    }
    let count = cur.read_u32::<BigEndian>().map_err(|_| parse_err(4, "missing image count"))? as usize;
    let rows = cur.read_u32::<BigEndian>().map_err(|_| parse_err(8, "missing row count"))? as usize;
    let cols = cur.read_u32::<BigEndian>().map_err(|_| parse_err(12, "missing column count"))? as usize;
    let expected = count * rows * cols;
    let payload = &bytes[16..];
    if payload.len() != expected {
        return Err(parse_err(
            16,
            format!("truncated image payload: expected {expected} bytes, found {}", payload.len()),
        ));
    }
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: payload.to_vec(),
    })
}

fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut cur = std::io::Cursor::new(&bytes);
    let magic = cur
        .read_u32::<BigEndian>()
        .map_err(|_| parse_err(0, "label file shorter than its magic number"))?;
    if magic != LABEL_MAGIC {
        return Err(parse_err(0, format!("bad label magic {magic:#010x}, expected {LABEL_MAGIC:#010x}")));
    }
    let count = cur.read_u32::<BigEndian>().map_err(|_| parse_err(4, "missing label count"))? as usize;
    let payload = &bytes[8..];
    if payload.len() != count {
        return Err(parse_err(
            8,
            format!("truncated label payload: expected {count} bytes, found {}", payload.len()),
        ));
    }
    Ok(payload.to_vec())
}

/// Loads an IDX image/label pair, keeps only the two digits in `keep_digits`
/// (`keep_digits.0` becomes class 0, `keep_digits.1` class 1), scales pixels
/// to `[0, 1]`, and tags every row with `split`.
pub fn load_mnist_subset(
    image_path: &Path,
    label_path: &Path,
    keep_digits: (u8, u8),
    split: Split,
) -> Result<Dataset> {
    let images = read_idx_images(image_path)?;
    let labels = read_idx_labels(label_path)?;
    if labels.len() != images.count {
        return Err(EmapError::Parse {
            offset: 8,
            message: format!("image/label count mismatch: {} images, {} labels", images.count, labels.len()),
        });
    }
    let d = images.rows * images.cols;
    let keep: Vec<usize> = labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == keep_digits.0 || l == keep_digits.1)
        .map(|(i, _)| i)
        .collect();
    if keep.is_empty() {
        return Err(EmapError::InvalidArgument(format!(
            "no rows with digits {} or {} found",
            keep_digits.0, keep_digits.1
        )));
    }
    let mut rows = Array2::zeros((keep.len(), d));
    let mut out_labels = Vec::with_capacity(keep.len());
    for (r, &i) in keep.iter().enumerate() {
        let base = i * d;
        for (c, &px) in images.pixels[base..base + d].iter().enumerate() {
            rows[[r, c]] = px as f64 / 255.0;
        }
        out_labels.push(if labels[i] == keep_digits.0 { 0 } else { 1 });
    }
    let names: Vec<String> = (0..d).map(|i| format!("px{i}")).collect();
    let schema = FeatureSchema {
        continuous: names,
        categorical: Vec::new(),
    };
    let split = vec![split; keep.len()];
    Dataset::new(schema, rows, out_labels, split)
}

/// Concatenates two datasets over the same schema (row order: `a` then `b`).
pub fn concat_datasets(a: Dataset, b: Dataset) -> Result<Dataset> {
    if a.schema != b.schema {
        return Err(EmapError::Schema("cannot concatenate datasets with different schemas".into()));
    }
    let rows = ndarray::concatenate(ndarray::Axis(0), &[a.rows.view(), b.rows.view()])
        .map_err(|e| EmapError::Schema(e.to_string()))?;
    let mut labels = a.labels;
    labels.extend(b.labels);
    let mut split = a.split;
    split.extend(b.split);
    Dataset::new(a.schema, rows, labels, split)
}

/// Writes an IDX image file (magic `0x00000803`) from `u8` pixel rows.
pub fn write_idx_images(path: &Path, images: &[Vec<u8>], rows: usize, cols: usize) -> Result<()> {
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    out.write_u32::<BigEndian>(IMAGE_MAGIC)?;
    out.write_u32::<BigEndian>(images.len() as u32)?;
    out.write_u32::<BigEndian>(rows as u32)?;
    out.write_u32::<BigEndian>(cols as u32)?;
    for img in images {
        if img.len() != rows * cols {
            return Err(EmapError::InvalidArgument("image size disagrees with rows*cols".into()));
        }
        out.extend_from_slice(img);
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Writes an IDX label file (magic `0x00000801`).
pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.write_u32::<BigEndian>(LABEL_MAGIC)?;
    out.write_u32::<BigEndian>(labels.len() as u32)?;
    out.extend_from_slice(labels);
    std::fs::write(path, out)?;
    Ok(())
}
