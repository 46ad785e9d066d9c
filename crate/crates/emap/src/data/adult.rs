//! UCI Adult subset loader with the experiment's preprocessing.

use std::collections::BTreeSet;
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{EmapError, Result};

use super::{assign_split, column_stats, CategoricalFeature, Dataset, FeatureSchema, Split};

pub(crate) const CONTINUOUS_COLS: [&str; 3] = ["age", "education-num", "hours-per-week"];
pub(crate) const CATEGORICAL_COLS: [&str; 5] = ["workclass", "marital-status", "occupation", "race", "sex"];
const TARGET_COL: &str = "income";

/// Loads a UCI-layout Adult CSV (header row required, `?` marks missing).
///
/// Keeps age / education years / weekly hours as continuous features and
/// workclass / marital status / occupation / race / sex as categoricals;
/// `fnlwgt`, `education`, `relationship`, `native-country`, `capital-gain`
/// and `capital-loss` are dropped. Rows with a missing value in any kept
/// column are removed, classes are balanced by seeded undersampling of the
/// larger class, and the continuous block is standardized with train-split
/// statistics. Income `>50K` is class 1.
pub fn load_adult_subset(csv_path: &Path, seed: u64, train_fraction: f64) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(csv_path)?;

    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let col_index = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| EmapError::Schema(format!("required column '{name}' missing from header")))
    };
    let cont_idx: Vec<usize> = CONTINUOUS_COLS.iter().map(|c| col_index(c)).collect::<Result<_>>()?;
    let cat_idx: Vec<usize> = CATEGORICAL_COLS.iter().map(|c| col_index(c)).collect::<Result<_>>()?;
    let target_idx = col_index(TARGET_COL)?;

    let mut cont_values: Vec<[f64; 3]> = Vec::new();
    let mut cat_values: Vec<[String; 5]> = Vec::new();
    let mut labels: Vec<u8> = Vec::new();

    'rows: for (line, record) in reader.records().enumerate() {
        let record = record?;
        let get = |i: usize| record.get(i).map(str::trim).unwrap_or("");
        // Complete-case filtering over the kept columns.
        for &i in cont_idx.iter().chain(&cat_idx).chain(std::iter::once(&target_idx)) {
            if get(i) == "?" || get(i).is_empty() {
                continue 'rows;
            }
        }
        let mut cont = [0.0; 3];
        for (j, &i) in cont_idx.iter().enumerate() {
            cont[j] = get(i).parse::<f64>().map_err(|e| EmapError::Schema(format!(
                "row {}: column '{}' is not numeric ({e})",
                line + 2,
                CONTINUOUS_COLS[j]
            )))?;
        }
        let cats: [String; 5] = std::array::from_fn(|j| get(cat_idx[j]).to_string());
        let income = get(target_idx).trim_end_matches('.');
        let label = match income {
            ">50K" => 1,
            "<=50K" => 0,
            other => {
                return Err(EmapError::Schema(format!(
                    "row {}: unrecognized income value '{other}'",
                    line + 2
                )))
            }
        };
        cont_values.push(cont);
        cat_values.push(cats);
        labels.push(label);
    }

    if cont_values.is_empty() {
        return Err(EmapError::InvalidArgument("no complete rows in Adult file".into()));
    }

    // Value vocabularies from the raw value sets (all complete rows),
    // sorted for determinism.
    let mut vocab: Vec<BTreeSet<String>> = vec![BTreeSet::new(); 5];
    for cats in &cat_values {
        for (j, v) in cats.iter().enumerate() {
            vocab[j].insert(v.clone());
        }
    }

    // Balance classes by undersampling the larger one, seeded; undersampled
    // survivors keep their original relative order.
    let class1: Vec<usize> = labels.iter().enumerate().filter(|(_, &l)| l == 1).map(|(i, _)| i).collect();
    let class0: Vec<usize> = labels.iter().enumerate().filter(|(_, &l)| l == 0).map(|(i, _)| i).collect();
    let keep_n = class0.len().min(class1.len());
    if keep_n == 0 {
        return Err(EmapError::InvalidArgument("Adult file holds a single class only".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let subsample = |idx: &[usize], rng: &mut ChaCha8Rng| -> Vec<usize> {
        if idx.len() == keep_n {
            return idx.to_vec();
        }
        let mut shuffled = idx.to_vec();
        shuffled.shuffle(rng);
        let mut kept: Vec<usize> = shuffled.into_iter().take(keep_n).collect();
        kept.sort_unstable();
        kept
    };
    let mut kept = subsample(&class0, &mut rng);
    kept.extend(subsample(&class1, &mut rng));
    kept.sort_unstable();
    let categorical: Vec<CategoricalFeature> = CATEGORICAL_COLS
        .iter()
        .zip(vocab.iter())
        .map(|(name, set)| CategoricalFeature {
            name: name.to_string(),
            labels: set.iter().cloned().collect(),
        })
        .collect();
    let schema = FeatureSchema {
        continuous: CONTINUOUS_COLS.iter().map(|s| s.to_string()).collect(),
        categorical,
    };
    schema.validate()?;

    let n = kept.len();
    let split = assign_split(n, train_fraction, seed.wrapping_add(1));

    let width = schema.encoded_width();
    let mut rows = Array2::zeros((n, width));
    let mut out_labels = Vec::with_capacity(n);
    for (r, &i) in kept.iter().enumerate() {
        for j in 0..3 {
            rows[[r, j]] = cont_values[i][j];
        }
        for j in 0..5 {
            let k = schema.categorical[j]
                .labels
                .binary_search(&cat_values[i][j])
                .expect("vocabulary built from these rows");
            let block = schema.categorical_block(j);
            rows[[r, block.start + k]] = 1.0;
        }
        out_labels.push(labels[i]);
    }

    // Standardize continuous columns with train-split statistics only.
    let train_rows: Vec<usize> = (0..n).filter(|&i| split[i] == Split::Train).collect();
    let train_view = rows.select(ndarray::Axis(0), &train_rows);
    let (means, stds) = column_stats(&train_view.view(), 3);
    for mut row in rows.rows_mut() {
        for j in 0..3 {
            row[j] = (row[j] - means[j]) / stds[j];
        }
    }

    Dataset::new(schema, rows, out_labels, split)
}
