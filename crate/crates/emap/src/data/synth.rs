//! Deterministic stand-in corpora for the image and tabular pipelines.
//!
//! These generators exist so the full pipelines can run at desk scale when
//! the official corpora are not on disk. They emit the *real* file formats
//! (IDX images/labels, UCI-layout CSV) and are consumed through the same
//! loaders as the originals.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;

use super::mnist::{write_idx_images, write_idx_labels};

#[derive(Debug, Clone)]
pub struct SyntheticDigitParams {
    pub side: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl Default for SyntheticDigitParams {
    fn default() -> Self {
        SyntheticDigitParams {
            side: 28,
            n_train: 6000,
            n_test: 1500,
            seed: 0,
        }
    }
}

/// Renders a stylised "8" (two full rings) or "3" (two right-open arcs) with
/// jittered geometry, stroke thickness, and pixel noise.
fn render_digit(digit: u8, side: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let s = side as f64;
    let jitter = |rng: &mut ChaCha8Rng, amp: f64| rng.random_range(-amp..amp);
    let cx = s / 2.0 + jitter(rng, 1.5);
    let top_cy = s * 0.33 + jitter(rng, 1.2);
    let bot_cy = s * 0.67 + jitter(rng, 1.2);
    let top_r = s * 0.16 * (1.0 + jitter(rng, 0.14));
    let bot_r = s * 0.19 * (1.0 + jitter(rng, 0.14));
    let thickness = rng.random_range(1.1..2.0);
    let amplitude = rng.random_range(0.8..1.0);
    let noise = Normal::new(0.0, 0.04).unwrap();

    let mut img = vec![0u8; side * side];
    for py in 0..side {
        for px in 0..side {
            let (x, y) = (px as f64 + 0.5, py as f64 + 0.5);
            let mut intensity: f64 = 0.0;
            for &(cy, r) in &[(top_cy, top_r), (bot_cy, bot_r)] {
                let (dx, dy) = (x - cx, y - cy);
                let dist = (dx * dx + dy * dy).sqrt();
                // A "3" keeps only the right-open arc of each ring.
                if digit == 3 && dx < -0.15 * r {
                    continue;
                }
                let band = (dist - r).abs() / thickness;
                intensity = intensity.max(amplitude * (-band * band).exp());
            }
            let v = (intensity + noise.sample(rng)).clamp(0.0, 1.0);
            img[py * side + px] = (v * 255.0).round() as u8;
        }
    }
    img
}

/// Writes a 3-vs-8 digit corpus as four IDX files into `dir` and returns
/// `(train_images, train_labels, test_images, test_labels)` paths.
pub fn write_synthetic_digit_idx(dir: &Path, params: &SyntheticDigitParams) -> Result<(PathBuf, PathBuf, PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let make = |n: usize, rng: &mut ChaCha8Rng| -> (Vec<Vec<u8>>, Vec<u8>) {
        let mut images = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let digit = if i % 2 == 0 { 8 } else { 3 };
            images.push(render_digit(digit, params.side, rng));
            labels.push(digit);
        }
        (images, labels)
    };
    let (train_images, train_labels) = make(params.n_train, &mut rng);
    let (test_images, test_labels) = make(params.n_test, &mut rng);

    let ti = dir.join("train-images-idx3-ubyte");
    let tl = dir.join("train-labels-idx1-ubyte");
    let vi = dir.join("t10k-images-idx3-ubyte");
    let vl = dir.join("t10k-labels-idx1-ubyte");
    write_idx_images(&ti, &train_images, params.side, params.side)?;
    write_idx_labels(&tl, &train_labels)?;
    write_idx_images(&vi, &test_images, params.side, params.side)?;
    write_idx_labels(&vl, &test_labels)?;
    Ok((ti, tl, vi, vl))
}

const WORKCLASSES: [(&str, f64); 5] = [
    ("Private", 0.70),
    ("Self-emp-not-inc", 0.10),
    ("Local-gov", 0.08),
    ("State-gov", 0.07),
    ("Federal-gov", 0.05),
];

const MARITAL: [(&str, f64, f64); 5] = [
    ("Married-civ-spouse", 0.46, 1.7),
    ("Never-married", 0.33, -0.8),
    ("Divorced", 0.14, -0.3),
    ("Separated", 0.04, -0.4),
    ("Widowed", 0.03, -0.2),
];

const OCCUPATIONS: [(&str, f64, f64); 8] = [
    ("Exec-managerial", 0.13, 1.2),
    ("Prof-specialty", 0.13, 1.0),
    ("Craft-repair", 0.13, 0.1),
    ("Adm-clerical", 0.12, 0.0),
    ("Sales", 0.11, 0.3),
    ("Other-service", 0.11, -0.9),
    ("Handlers-cleaners", 0.07, -0.9),
    ("Farming-fishing", 0.05, -1.0),
];

const RACES: [(&str, f64); 5] = [
    ("White", 0.85),
    ("Black", 0.09),
    ("Asian-Pac-Islander", 0.03),
    ("Amer-Indian-Eskimo", 0.01),
    ("Other", 0.02),
];

fn pick<'a>(table: &'a [(&'a str, f64)], rng: &mut ChaCha8Rng) -> &'a str {
    let total: f64 = table.iter().map(|(_, w)| w).sum();
    let mut u = rng.random_range(0.0..total);
    for (name, w) in table {
        if u < *w {
            return name;
        }
        u -= w;
    }
    table.last().unwrap().0
}

fn pick_scored<'a>(table: &'a [(&'a str, f64, f64)], rng: &mut ChaCha8Rng) -> (&'a str, f64) {
    let total: f64 = table.iter().map(|(_, w, _)| w).sum();
    let mut u = rng.random_range(0.0..total);
    for (name, w, score) in table {
        if u < *w {
            return (name, *score);
        }
        u -= w;
    }
    let last = table.last().unwrap();
    (last.0, last.2)
}

/// Writes a UCI-layout income CSV whose label depends on age, education,
/// hours, marital status, occupation and sex through a noisy linear score.
/// Roughly 5% of rows carry a `?` in workclass or occupation, and classes
/// are imbalanced, so the loading pipeline has real work to do.
pub fn write_synthetic_adult_csv(path: &Path, n: usize, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.8).unwrap();
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        f,
        "age,workclass,fnlwgt,education,education-num,marital-status,occupation,relationship,race,sex,capital-gain,capital-loss,hours-per-week,native-country,income"
    )?;
    for _ in 0..n {
        let age = rng.random_range(18..75);
        let edu = rng.random_range(4..17);
        let hours = rng.random_range(15..66);
        let workclass = if rng.random::<f64>() < 0.025 { "?" } else { pick(&WORKCLASSES, &mut rng) };
        let (marital, marital_s) = pick_scored(&MARITAL, &mut rng);
        let (occupation, occupation_s) = if rng.random::<f64>() < 0.025 {
            ("?", 0.0)
        } else {
            pick_scored(&OCCUPATIONS, &mut rng)
        };
        let race = pick(&RACES, &mut rng);
        let sex = if rng.random::<f64>() < 0.65 { "Male" } else { "Female" };
        let score = 0.045 * (age as f64 - 38.0)
            + 0.32 * (edu as f64 - 10.0)
            + 0.05 * (hours as f64 - 40.0)
            + marital_s
            + occupation_s
            + if sex == "Male" { 0.2 } else { 0.0 }
            + noise.sample(&mut rng);
        let income = if score > 1.2 { ">50K" } else { "<=50K" };
        let fnlwgt = rng.random_range(20_000..400_000);
        let education = match edu {
            0..=8 => "HS-dropout",
            9 => "HS-grad",
            10..=12 => "Some-college",
            13 => "Bachelors",
            14 => "Masters",
            _ => "Doctorate",
        };
        writeln!(
            f,
            "{age},{workclass},{fnlwgt},{education},{edu},{marital},{occupation},Not-in-family,{race},{sex},0,0,{hours},United-States,{income}"
        )?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{load_adult_subset, load_mnist_subset, Split};

    #[test]
    fn digit_corpus_loads_through_idx_loader() {
        let dir = tempfile::tempdir().unwrap();
        let params = SyntheticDigitParams {
            side: 28,
            n_train: 40,
            n_test: 10,
            seed: 1,
        };
        let (ti, tl, vi, vl) = write_synthetic_digit_idx(dir.path(), &params).unwrap();
        let train = load_mnist_subset(&ti, &tl, (8, 3), Split::Train).unwrap();
        let test = load_mnist_subset(&vi, &vl, (8, 3), Split::Test).unwrap();
        assert_eq!(train.n_rows(), 40);
        assert_eq!(test.n_rows(), 10);
        assert_eq!(train.schema.continuous_len(), 784);
        assert!(train.rows.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert_eq!(train.labels.iter().filter(|&&l| l == 0).count(), 20);
    }

    #[test]
    fn digit_classes_differ_on_left_strokes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let eight = render_digit(8, 28, &mut rng);
        let three = render_digit(3, 28, &mut rng);
        let left_mass = |img: &[u8]| -> f64 {
            let mut sum = 0.0;
            for y in 0..28 {
                for x in 0..10 {
                    sum += img[y * 28 + x] as f64;
                }
            }
            sum
        };
        assert!(left_mass(&eight) > 2.0 * left_mass(&three));
    }

    #[test]
    fn adult_corpus_loads_through_csv_loader() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("adult.csv");
        write_synthetic_adult_csv(&path, 3000, 5).unwrap();
        let ds = load_adult_subset(&path, 5, 0.75).unwrap();
        let n0 = ds.labels.iter().filter(|&&l| l == 0).count();
        let n1 = ds.labels.iter().filter(|&&l| l == 1).count();
        assert_eq!(n0, n1);
        assert!(ds.n_rows() > 1000, "too few balanced rows: {}", ds.n_rows());
        assert_eq!(ds.schema.categorical.len(), 5);
    }
}
