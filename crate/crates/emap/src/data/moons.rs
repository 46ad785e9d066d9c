//! Two interleaving half-circle classes.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{EmapError, Result};

use super::{assign_split, Dataset, FeatureSchema};

/// The conventional half-moons construction: class 0 on the upper unit
/// semicircle, class 1 on a lower semicircle shifted by (1, -0.5), points
/// evenly spaced along each arc, then i.i.d. Gaussian noise per coordinate.
pub fn generate_half_moons(n: usize, noise_std: f64, seed: u64, train_fraction: f64) -> Result<Dataset> {
    if n < 2 {
        return Err(EmapError::InvalidArgument(format!("half-moons needs n >= 2, got {n}")));
    }
    if noise_std < 0.0 {
        return Err(EmapError::InvalidArgument("noise_std must be >= 0".into()));
    }
    let n_outer = n / 2;
    let n_inner = n - n_outer;

    let mut rows = Array2::zeros((n, 2));
    let mut labels = Vec::with_capacity(n);
    let arc = |k: usize, count: usize| -> f64 {
        if count == 1 {
            0.0
        } else {
            std::f64::consts::PI * k as f64 / (count - 1) as f64
        }
    };
    for k in 0..n_outer {
        let t = arc(k, n_outer);
        rows[[k, 0]] = t.cos();
        rows[[k, 1]] = t.sin();
        labels.push(0);
    }
    for k in 0..n_inner {
        let t = arc(k, n_inner);
        rows[[n_outer + k, 0]] = 1.0 - t.cos();
        rows[[n_outer + k, 1]] = 0.5 - t.sin();
        labels.push(1);
    }

    if noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_std).expect("std checked above");
        rows.mapv_inplace(|v| v + normal.sample(&mut rng));
    }

    let split = assign_split(n, train_fraction, seed.wrapping_add(1));
    Dataset::new(FeatureSchema::continuous_only(&["x1", "x2"]), rows, labels, split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Split;

    #[test]
    fn paper_configuration_splits_8000_2000() {
        let ds = generate_half_moons(10_000, 0.2, 7, 0.8).unwrap();
        assert_eq!(ds.n_rows(), 10_000);
        assert_eq!(ds.split.iter().filter(|&&s| s == Split::Train).count(), 8000);
        assert_eq!(ds.split.iter().filter(|&&s| s == Split::Test).count(), 2000);
        let n0 = ds.labels.iter().filter(|&&l| l == 0).count();
        assert_eq!(n0, 5000);
    }

    #[test]
    fn noiseless_outer_arc_lies_on_unit_circle() {
        let ds = generate_half_moons(400, 0.0, 3, 0.8).unwrap();
        for (row, &label) in ds.rows.rows().into_iter().zip(&ds.labels) {
            if label == 0 {
                let r2 = row[0] * row[0] + row[1] * row[1];
                assert!((r2 - 1.0).abs() <= 1e-12, "point off the arc: {row}");
                assert!(row[1] >= -1e-12);
            }
        }
    }

    #[test]
    fn n_two_gives_one_point_per_class() {
        let ds = generate_half_moons(2, 0.1, 1, 0.5).unwrap();
        assert_eq!(ds.labels.iter().filter(|&&l| l == 0).count(), 1);
        assert_eq!(ds.labels.iter().filter(|&&l| l == 1).count(), 1);
    }

    #[test]
    fn n_below_two_rejected() {
        assert!(generate_half_moons(1, 0.2, 0, 0.8).is_err());
    }

    #[test]
    fn same_seed_reproduces_dataset() {
        let a = generate_half_moons(500, 0.2, 11, 0.8).unwrap();
        let b = generate_half_moons(500, 0.2, 11, 0.8).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.split, b.split);
    }
}
