//! The handcrafted "offset blob" dataset: a linear boundary complicated by a
//! pocket of contrarian points.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{EmapError, Result};

use super::{assign_split, Dataset, FeatureSchema};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetBlobParams {
    pub blob_mean: [f64; 2],
    pub blob_std: [f64; 2],
    pub blob_fraction: f64,
}

impl Default for OffsetBlobParams {
    fn default() -> Self {
        OffsetBlobParams {
            blob_mean: [0.5, 0.5],
            blob_std: [0.25, 0.25],
            blob_fraction: 0.2,
        }
    }
}

impl OffsetBlobParams {
    pub fn validate(&self) -> Result<()> {
        if self.blob_std.iter().any(|&s| s <= 0.0) {
            return Err(EmapError::InvalidArgument("blob stds must be positive".into()));
        }
        if !(0.0 < self.blob_fraction && self.blob_fraction < 1.0) {
            return Err(EmapError::InvalidArgument(format!(
                "blob_fraction must lie in (0, 1), got {}",
                self.blob_fraction
            )));
        }
        Ok(())
    }

    /// True when a point lies within `k` blob standard deviations of the
    /// blob mean (Euclidean, stds are equal per axis by default).
    pub fn in_blob_region(&self, x: &[f64], k: f64) -> bool {
        let dx = x[0] - self.blob_mean[0];
        let dy = x[1] - self.blob_mean[1];
        let r = k * 0.5 * (self.blob_std[0] + self.blob_std[1]);
        dx * dx + dy * dy <= r * r
    }
}

/// The base labeling rule: class 1 (paper's "class 2") iff `x1 >= -x2`.
pub fn offset_blob_rule(x1: f64, x2: f64) -> u8 {
    if x1 >= -x2 {
        1
    } else {
        0
    }
}

pub(crate) fn generate_offset_blob_parts(
    n: usize,
    params: &OffsetBlobParams,
    seed: u64,
) -> Result<(Array2<f64>, Vec<u8>, usize)> {
    if n < 2 {
        return Err(EmapError::InvalidArgument(format!("offset blob needs n >= 2, got {n}")));
    }
    params.validate()?;
    let n_blob = ((n as f64) * params.blob_fraction).round() as usize;
    let n_base = n - n_blob;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    let mut rows = Array2::zeros((n, 2));
    let mut labels = Vec::with_capacity(n);

    for i in 0..n_base {
        let x1: f64 = std_normal.sample(&mut rng);
        let x2: f64 = std_normal.sample(&mut rng);
        rows[[i, 0]] = x1;
        rows[[i, 1]] = x2;
        labels.push(offset_blob_rule(x1, x2));
    }
    // The blob: always the paper's class 1 (our label 0), planted inside the
    // class-2 half-plane.
    let bx = Normal::new(params.blob_mean[0], params.blob_std[0]).unwrap();
    let by = Normal::new(params.blob_mean[1], params.blob_std[1]).unwrap();
    for i in n_base..n {
        rows[[i, 0]] = bx.sample(&mut rng);
        rows[[i, 1]] = by.sample(&mut rng);
        labels.push(0);
    }
    Ok((rows, labels, n_base))
}

pub fn generate_offset_blob(n: usize, params: &OffsetBlobParams, seed: u64, train_fraction: f64) -> Result<Dataset> {
    let (rows, labels, _) = generate_offset_blob_parts(n, params, seed)?;
    let split = assign_split(n, train_fraction, seed.wrapping_add(1));
    Dataset::new(FeatureSchema::continuous_only(&["x1", "x2"]), rows, labels, split)
}
