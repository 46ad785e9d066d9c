//! CART random forest: the built-in opaque classifier being explained.
//!
//! Axis-aligned splits chosen by Gini impurity over `ceil(sqrt(d))` features
//! resampled per split, one bootstrap resample per tree, majority vote with
//! ties broken toward class 0. Per-tree RNG streams derive from the master
//! seed, so results are identical however tree training is scheduled.

use ndarray::{ArrayView1, ArrayView2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blackbox::BlackBox;
use crate::data::Dataset;
use crate::error::{EmapError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows to purity.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 200,
            max_depth: None,
            min_leaf: 1,
            seed: 0,
        }
    }
}

/// One tree stored as flat parallel arrays. `feature[i] < 0` marks a leaf;
/// `count0`/`count1` hold the training-class distribution of each node.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tree {
    pub feature: Vec<i32>,
    pub threshold: Vec<f64>,
    pub left: Vec<u32>,
    pub right: Vec<u32>,
    pub count0: Vec<u32>,
    pub count1: Vec<u32>,
}

impl Tree {
    fn new() -> Self {
        Tree {
            feature: Vec::new(),
            threshold: Vec::new(),
            left: Vec::new(),
            right: Vec::new(),
            count0: Vec::new(),
            count1: Vec::new(),
        }
    }

    fn push_node(&mut self, counts: (u32, u32)) -> usize {
        self.feature.push(-1);
        self.threshold.push(0.0);
        self.left.push(0);
        self.right.push(0);
        self.count0.push(counts.0);
        self.count1.push(counts.1);
        self.feature.len() - 1
    }

    /// Leaf class distribution reached by `row`: (count0, count1).
    fn leaf_counts(&self, row: ArrayView1<f64>) -> (u32, u32) {
        let mut i = 0usize;
        while self.feature[i] >= 0 {
            i = if row[self.feature[i] as usize] <= self.threshold[i] {
                self.left[i] as usize
            } else {
                self.right[i] as usize
            };
        }
        (self.count0[i], self.count1[i])
    }

    /// Hard vote of this tree; leaf ties go to class 0.
    pub fn predict_row(&self, row: ArrayView1<f64>) -> u8 {
        let (c0, c1) = self.leaf_counts(row);
        u8::from(c1 > c0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomForest {
    pub schema_version: u32,
    pub n_features: usize,
    pub config: ForestConfig,
    pub trees: Vec<Tree>,
}

pub const FOREST_SCHEMA_VERSION: u32 = 1;

struct TreeBuilder<'a> {
    rows: ArrayView2<'a, f64>,
    labels: &'a [u8],
    max_depth: Option<usize>,
    min_leaf: usize,
    n_subsample: usize,
    rng: ChaCha8Rng,
    tree: Tree,
    // Scratch reused across nodes.
    feature_pool: Vec<usize>,
    sorted: Vec<(f64, u8)>,
}

impl<'a> TreeBuilder<'a> {
    fn counts(&self, idx: &[usize]) -> (u32, u32) {
        let mut c = (0u32, 0u32);
        for &i in idx {
            if self.labels[i] == 0 {
                c.0 += 1;
            } else {
                c.1 += 1;
            }
        }
        c
    }

    fn build(&mut self, idx: &mut Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(idx);
        let node = self.tree.push_node(counts);
        let pure = counts.0 == 0 || counts.1 == 0;
        let depth_stop = self.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_stop || idx.len() < 2 * self.min_leaf || idx.len() < 2 {
            return node;
        }

        let Some((feature, threshold)) = self.best_split(idx, counts) else {
            return node;
        };

        let (mut left_idx, mut right_idx): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.rows[[i, feature]] <= threshold);
        idx.clear();
        idx.shrink_to_fit();

        let left = self.build(&mut left_idx, depth + 1);
        let right = self.build(&mut right_idx, depth + 1);
        self.tree.feature[node] = feature as i32;
        self.tree.threshold[node] = threshold;
        self.tree.left[node] = left as u32;
        self.tree.right[node] = right as u32;
        node
    }

    /// Best (feature, threshold) by Gini decrease over a fresh subsample of
    /// `ceil(sqrt(d))` features; `None` when no split improves impurity.
    fn best_split(&mut self, idx: &[usize], counts: (u32, u32)) -> Option<(usize, f64)> {
        let d = self.rows.ncols();
        // Partial Fisher-Yates over the feature pool.
        for k in 0..self.n_subsample {
            let j = self.rng.random_range(k..d);
            self.feature_pool.swap(k, j);
        }

        let n = idx.len() as f64;
        let parent_gini = gini(counts.0 as f64, counts.1 as f64);
        let mut best: Option<(usize, f64)> = None;
        let mut best_gain = 1e-12;

        for fi in 0..self.n_subsample {
            let feature = self.feature_pool[fi];
            self.sorted.clear();
            self.sorted
                .extend(idx.iter().map(|&i| (self.rows[[i, feature]], self.labels[i])));
            self.sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

            let (mut l0, mut l1) = (0.0_f64, 0.0_f64);
            let (mut r0, mut r1) = (counts.0 as f64, counts.1 as f64);
            for w in 0..self.sorted.len() - 1 {
                let (value, label) = self.sorted[w];
                if label == 0 {
                    l0 += 1.0;
                    r0 -= 1.0;
                } else {
                    l1 += 1.0;
                    r1 -= 1.0;
                }
                let next = self.sorted[w + 1].0;
                if next == value {
                    continue;
                }
                let n_left = l0 + l1;
                let n_right = r0 + r1;
                if (n_left as usize) < self.min_leaf || (n_right as usize) < self.min_leaf {
                    continue;
                }
                let child = (n_left * gini(l0, l1) + n_right * gini(r0, r1)) / n;
                let gain = parent_gini - child;
                if gain > best_gain {
                    best_gain = gain;
                    best = Some((feature, 0.5 * (value + next)));
                }
            }
        }
        best
    }
}

fn gini(c0: f64, c1: f64) -> f64 {
    let n = c0 + c1;
    if n == 0.0 {
        return 0.0;
    }
    let (p0, p1) = (c0 / n, c1 / n);
    1.0 - p0 * p0 - p1 * p1
}

fn grow_tree(
    rows: ArrayView2<f64>,
    labels: &[u8],
    config: &ForestConfig,
    tree_index: u64,
) -> Tree {
    // Stream-per-tree: identical forests regardless of scheduling.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(tree_index + 1);

    let n = rows.nrows();
    let mut bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let d = rows.ncols();
    let mut builder = TreeBuilder {
        rows,
        labels,
        max_depth: config.max_depth,
        min_leaf: config.min_leaf.max(1),
        n_subsample: (d as f64).sqrt().ceil() as usize,
        rng,
        tree: Tree::new(),
        feature_pool: (0..d).collect(),
        sorted: Vec::with_capacity(n),
    };
    builder.build(&mut bootstrap, 0);
    builder.tree
}

/// Grows `config.n_trees` CART trees on bootstrap resamples of the train
/// split. Refuses single-class training data.
pub fn train_random_forest(data: &Dataset, config: &ForestConfig) -> Result<RandomForest> {
    let (rows, labels) = data.train();
    if rows.nrows() < 2 {
        return Err(EmapError::InvalidArgument("forest training needs at least 2 rows".into()));
    }
    if config.n_trees == 0 {
        return Err(EmapError::InvalidArgument("n_trees must be >= 1".into()));
    }
    let n1 = labels.iter().filter(|&&l| l == 1).count();
    if n1 == 0 || n1 == labels.len() {
        return Err(EmapError::InvalidArgument(
            "training data holds a single class; a forest cannot split it".into(),
        ));
    }

    let trees: Vec<Tree> = (0..config.n_trees as u64)
        .into_par_iter()
        .map(|t| grow_tree(rows.view(), &labels, config, t))
        .collect();

    Ok(RandomForest {
        schema_version: FOREST_SCHEMA_VERSION,
        n_features: rows.ncols(),
        config: config.clone(),
        trees,
    })
}

impl RandomForest {
    fn check_width(&self, rows: &ArrayView2<f64>) -> Result<()> {
        if rows.ncols() != self.n_features {
            return Err(EmapError::shape(
                "forest predict",
                format!("{} features", self.n_features),
                format!("{} features", rows.ncols()),
            ));
        }
        Ok(())
    }

    /// Per-tree hard votes for one row (test support for the majority-vote
    /// invariant).
    pub fn tree_votes(&self, row: ArrayView1<f64>) -> Vec<u8> {
        self.trees.iter().map(|t| t.predict_row(row)).collect()
    }

    pub fn predict_rows(&self, rows: ArrayView2<f64>) -> Result<Vec<u8>> {
        self.check_width(&rows)?;
        Ok(rows
            .rows()
            .into_iter()
            .map(|row| {
                let votes1 = self.trees.iter().filter(|t| t.predict_row(row) == 1).count();
                // Ties break toward class 0.
                u8::from(2 * votes1 > self.trees.len())
            })
            .collect())
    }

    /// Mean per-tree leaf class-1 frequency.
    pub fn prob_rows(&self, rows: ArrayView2<f64>) -> Result<Vec<f64>> {
        self.check_width(&rows)?;
        Ok(rows
            .rows()
            .into_iter()
            .map(|row| {
                let sum: f64 = self
                    .trees
                    .iter()
                    .map(|t| {
                        let (c0, c1) = t.leaf_counts(row);
                        c1 as f64 / (c0 + c1).max(1) as f64
                    })
                    .sum();
                sum / self.trees.len() as f64
            })
            .collect())
    }

    pub fn save_json(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load_json(path: &std::path::Path) -> Result<Self> {
        let forest: RandomForest = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if forest.schema_version != FOREST_SCHEMA_VERSION {
            return Err(EmapError::Schema(format!(
                "unsupported forest schema_version {}",
                forest.schema_version
            )));
        }
        Ok(forest)
    }
}

impl BlackBox for RandomForest {
    fn predict(&self, rows: ArrayView2<f64>) -> Result<Vec<u8>> {
        self.predict_rows(rows)
    }

    fn prob_class1(&self, rows: ArrayView2<f64>) -> Result<Option<Vec<f64>>> {
        self.prob_rows(rows).map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, FeatureSchema, Split};
    use ndarray::array;

    fn xor_dataset() -> Dataset {
        let rows = array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        Dataset::new(
            FeatureSchema::continuous_only(&["a", "b"]),
            rows,
            vec![0, 1, 1, 0],
            vec![Split::Train; 4],
        )
        .unwrap()
    }

    #[test]
    fn single_class_training_is_refused() {
        let rows = array![[0.0, 0.0], [1.0, 1.0]];
        let ds = Dataset::new(
            FeatureSchema::continuous_only(&["a", "b"]),
            rows,
            vec![0, 0],
            vec![Split::Train; 2],
        )
        .unwrap();
        assert!(train_random_forest(&ds, &ForestConfig::default()).is_err());
    }

    #[test]
    fn xor_is_memorized_by_fifty_trees() {
        let ds = xor_dataset();
        let config = ForestConfig {
            n_trees: 50,
            seed: 5,
            ..Default::default()
        };
        let forest = train_random_forest(&ds, &config).unwrap();
        let preds = forest.predict_rows(ds.rows.view()).unwrap();
        assert_eq!(preds, ds.labels, "training accuracy must be 1.0 on XOR");
    }

    #[test]
    fn prediction_is_deterministic() {
        let ds = xor_dataset();
        let forest = train_random_forest(&ds, &ForestConfig { n_trees: 20, seed: 3, ..Default::default() }).unwrap();
        let a = forest.predict_rows(ds.rows.view()).unwrap();
        let b = forest.predict_rows(ds.rows.view()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn forest_vote_equals_tree_majority() {
        let ds = crate::data::generate_half_moons(200, 0.2, 2, 1.0).unwrap();
        let forest = train_random_forest(&ds, &ForestConfig { n_trees: 7, seed: 9, ..Default::default() }).unwrap();
        let preds = forest.predict_rows(ds.rows.view()).unwrap();
        for (i, row) in ds.rows.rows().into_iter().enumerate() {
            let votes = forest.tree_votes(row);
            let ones = votes.iter().filter(|&&v| v == 1).count();
            let majority = u8::from(2 * ones > votes.len());
            assert_eq!(preds[i], majority);
        }
    }

    #[test]
    fn training_is_reproducible_for_a_seed() {
        let ds = crate::data::generate_half_moons(300, 0.2, 4, 1.0).unwrap();
        let config = ForestConfig { n_trees: 10, seed: 42, ..Default::default() };
        let a = train_random_forest(&ds, &config).unwrap();
        let b = train_random_forest(&ds, &config).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn json_round_trip_preserves_predictions() {
        let ds = crate::data::generate_half_moons(200, 0.2, 8, 1.0).unwrap();
        let forest = train_random_forest(&ds, &ForestConfig { n_trees: 12, seed: 1, ..Default::default() }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("forest.json");
        forest.save_json(&path).unwrap();
        let loaded = RandomForest::load_json(&path).unwrap();
        assert_eq!(
            forest.predict_rows(ds.rows.view()).unwrap(),
            loaded.predict_rows(ds.rows.view()).unwrap()
        );
    }

    #[test]
    fn width_mismatch_is_shape_error() {
        let ds = xor_dataset();
        let forest = train_random_forest(&ds, &ForestConfig { n_trees: 5, seed: 0, ..Default::default() }).unwrap();
        let bad = array![[1.0, 2.0, 3.0]];
        assert!(forest.predict_rows(bad.view()).is_err());
    }

    #[test]
    fn depth_one_stumps_cannot_solve_xor() {
        let ds = xor_dataset();
        let config = ForestConfig {
            n_trees: 50,
            max_depth: Some(1),
            seed: 5,
            ..Default::default()
        };
        let forest = train_random_forest(&ds, &config).unwrap();
        let preds = forest.predict_rows(ds.rows.view()).unwrap();
        assert_ne!(preds, ds.labels, "depth-1 stumps should fail XOR");
    }
}
