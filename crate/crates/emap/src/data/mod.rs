//! Feature schemas, datasets, generators, and loaders.
//!
//! Encoded layout: continuous features first, then one categorical one-hot
//! block per feature in declaration order.

mod adult;
mod blob;
mod io;
mod mnist;
mod moons;
mod synth;

pub use adult::load_adult_subset;
pub use blob::{generate_offset_blob, OffsetBlobParams};
pub use io::{read_dataset_csv, read_rows_csv, write_dataset_csv, DatasetSidecar, Normalization};
pub use mnist::{concat_datasets, load_mnist_subset, write_idx_images, write_idx_labels};
pub use moons::generate_half_moons;
pub use synth::{write_synthetic_adult_csv, write_synthetic_digit_idx, SyntheticDigitParams};

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EmapError, Result};

/// A categorical feature with its ordered value vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalFeature {
    pub name: String,
    pub labels: Vec<String>,
}

impl CategoricalFeature {
    pub fn cardinality(&self) -> usize {
        self.labels.len()
    }
}

/// Declares continuous and categorical features and owns the one-hot layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub continuous: Vec<String>,
    pub categorical: Vec<CategoricalFeature>,
}

impl FeatureSchema {
    pub fn continuous_only(names: &[&str]) -> Self {
        FeatureSchema {
            continuous: names.iter().map(|s| s.to_string()).collect(),
            categorical: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for cat in &self.categorical {
            if cat.cardinality() < 2 {
                return Err(EmapError::Schema(format!(
                    "categorical feature '{}' needs cardinality >= 2, got {}",
                    cat.name,
                    cat.cardinality()
                )));
            }
        }
        Ok(())
    }

    pub fn continuous_len(&self) -> usize {
        self.continuous.len()
    }

    pub fn encoded_width(&self) -> usize {
        self.continuous.len() + self.categorical.iter().map(|c| c.cardinality()).sum::<usize>()
    }

    /// Column range of categorical feature `i`'s one-hot block.
    pub fn categorical_block(&self, i: usize) -> std::ops::Range<usize> {
        let mut start = self.continuous.len();
        for cat in &self.categorical[..i] {
            start += cat.cardinality();
        }
        start..start + self.categorical[i].cardinality()
    }

    /// Names of the encoded columns, continuous first then `feature=value`
    /// per one-hot column.
    pub fn encoded_column_names(&self) -> Vec<String> {
        let mut names = self.continuous.clone();
        for cat in &self.categorical {
            for label in &cat.labels {
                names.push(format!("{}={}", cat.name, label));
            }
        }
        names
    }

    /// Splits an encoded row into continuous values and per-feature category
    /// indices. Errors if a categorical block is not exactly one-hot.
    pub fn decode_row(&self, row: ArrayView1<f64>) -> Result<(Vec<f64>, Vec<usize>)> {
        if row.len() != self.encoded_width() {
            return Err(EmapError::shape(
                "decode_row",
                format!("{}", self.encoded_width()),
                format!("{}", row.len()),
            ));
        }
        let cont = row.iter().take(self.continuous.len()).cloned().collect();
        let mut cats = Vec::with_capacity(self.categorical.len());
        for i in 0..self.categorical.len() {
            let block = self.categorical_block(i);
            let slice = row.slice(ndarray::s![block.clone()]);
            let mut hot = None;
            for (k, &v) in slice.iter().enumerate() {
                if v == 1.0 {
                    if hot.is_some() {
                        return Err(EmapError::Contract(format!(
                            "categorical block '{}' has multiple hot entries",
                            self.categorical[i].name
                        )));
                    }
                    hot = Some(k);
                } else if v != 0.0 {
                    return Err(EmapError::Contract(format!(
                        "categorical block '{}' holds non-binary value {v}",
                        self.categorical[i].name
                    )));
                }
            }
            cats.push(hot.ok_or_else(|| {
                EmapError::Contract(format!("categorical block '{}' has no hot entry", self.categorical[i].name))
            })?);
        }
        Ok((cont, cats))
    }

    /// Inverse of [`decode_row`](Self::decode_row).
    pub fn encode_row(&self, continuous: &[f64], categories: &[usize]) -> Result<Vec<f64>> {
        if continuous.len() != self.continuous.len() || categories.len() != self.categorical.len() {
            return Err(EmapError::shape(
                "encode_row",
                format!("{} continuous + {} categories", self.continuous.len(), self.categorical.len()),
                format!("{} + {}", continuous.len(), categories.len()),
            ));
        }
        let mut row = vec![0.0; self.encoded_width()];
        row[..continuous.len()].copy_from_slice(continuous);
        for (i, &k) in categories.iter().enumerate() {
            let block = self.categorical_block(i);
            if k >= block.len() {
                return Err(EmapError::InvalidArgument(format!(
                    "category index {k} out of range for '{}'",
                    self.categorical[i].name
                )));
            }
            row[block.start + k] = 1.0;
        }
        Ok(row)
    }

    /// Argmax category index per block; used on relaxed rows where the block
    /// may not be exactly one-hot. Ties resolve to the lowest index.
    pub fn block_argmax(&self, row: ArrayView1<f64>, i: usize) -> usize {
        let block = self.categorical_block(i);
        let slice = row.slice(ndarray::s![block]);
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for (k, &v) in slice.iter().enumerate() {
            if v > best_v {
                best_v = v;
                best = k;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// An encoded dataset with binary labels and a train/test tag per row.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub schema: FeatureSchema,
    pub rows: Array2<f64>,
    pub labels: Vec<u8>,
    pub split: Vec<Split>,
}

impl Dataset {
    pub fn new(schema: FeatureSchema, rows: Array2<f64>, labels: Vec<u8>, split: Vec<Split>) -> Result<Self> {
        schema.validate()?;
        if rows.nrows() == 0 {
            return Err(EmapError::InvalidArgument("dataset must hold at least one row".into()));
        }
        if rows.ncols() != schema.encoded_width() {
            return Err(EmapError::shape(
                "dataset rows",
                format!("{} columns", schema.encoded_width()),
                format!("{} columns", rows.ncols()),
            ));
        }
        if labels.len() != rows.nrows() || split.len() != rows.nrows() {
            return Err(EmapError::shape(
                "dataset labels/split",
                format!("{} entries", rows.nrows()),
                format!("{} labels, {} split tags", labels.len(), split.len()),
            ));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(EmapError::InvalidArgument("labels must be binary class ids".into()));
        }
        let ds = Dataset {
            schema,
            rows,
            labels,
            split,
        };
        ds.check_one_hot()?;
        Ok(ds)
    }

    fn check_one_hot(&self) -> Result<()> {
        if self.schema.categorical.is_empty() {
            return Ok(());
        }
        for row in self.rows.rows() {
            self.schema.decode_row(row)?;
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.rows.nrows()
    }

    fn select(&self, tag: Split) -> (Array2<f64>, Vec<u8>) {
        let idx: Vec<usize> = self
            .split
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == tag)
            .map(|(i, _)| i)
            .collect();
        let rows = self.rows.select(Axis(0), &idx);
        let labels = idx.iter().map(|&i| self.labels[i]).collect();
        (rows, labels)
    }

    pub fn train(&self) -> (Array2<f64>, Vec<u8>) {
        self.select(Split::Train)
    }

    pub fn test(&self) -> (Array2<f64>, Vec<u8>) {
        self.select(Split::Test)
    }

    /// Keeps at most `n` training rows (the first `n` in row order), leaving
    /// the test split untouched.
    pub fn subsample_train(&self, n: usize, seed: u64) -> Dataset {
        let mut train_idx: Vec<usize> = self
            .split
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == Split::Train)
            .map(|(i, _)| i)
            .collect();
        if train_idx.len() <= n {
            return self.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        train_idx.shuffle(&mut rng);
        let keep: std::collections::HashSet<usize> = train_idx.into_iter().take(n).collect();
        let idx: Vec<usize> = (0..self.n_rows())
            .filter(|i| self.split[*i] == Split::Test || keep.contains(i))
            .collect();
        Dataset {
            schema: self.schema.clone(),
            rows: self.rows.select(Axis(0), &idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            split: idx.iter().map(|&i| self.split[i]).collect(),
        }
    }
}

/// Seeded permutation split: the first `round(fraction * n)` shuffled indices
/// become the train split.
pub(crate) fn assign_split(n: usize, train_fraction: f64, seed: u64) -> Vec<Split> {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let n_train = ((n as f64) * train_fraction).round() as usize;
    let mut split = vec![Split::Test; n];
    for &i in idx.iter().take(n_train) {
        split[i] = Split::Train;
    }
    split
}

pub(crate) fn one_hot_labels(labels: &[u8]) -> Array2<f64> {
    let mut out = Array2::zeros((labels.len(), 2));
    for (i, &l) in labels.iter().enumerate() {
        out[[i, l as usize]] = 1.0;
    }
    out
}

/// Per-column mean/std over `rows`; stds below 1e-12 are clamped to 1 so
/// constant columns survive normalization.
pub(crate) fn column_stats(rows: &ArrayView2<f64>, cols: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows.nrows().max(1) as f64;
    let mut means = vec![0.0; cols];
    let mut stds = vec![0.0; cols];
    for j in 0..cols {
        let col = rows.column(j);
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        means[j] = mean;
        stds[j] = if var.sqrt() < 1e-12 { 1.0 } else { var.sqrt() };
    }
    (means, stds)
}
