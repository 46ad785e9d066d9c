//! Differentiable surrogate distilled from black-box labels.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::blackbox::BlackBox;
use crate::config::TrainConfig;
use crate::data::{one_hot_labels, Dataset};
use crate::error::{EmapError, Result};
use crate::nn::{adam_step, cross_entropy, AdamState, Activation, Mlp, MlpJson};

pub const HIDDEN_WIDTH: usize = 200;
pub const HIDDEN_LAYERS: usize = 3;

/// A frozen 2-class softmax network imitating the black box.
#[derive(Debug, Clone)]
pub struct SurrogateNet {
    net: Mlp,
    frozen: bool,
}

/// One line of a training log: mean batch loss plus the evaluation metric
/// (recovery accuracy here; adversarial accuracy for the perturber).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub metric: f64,
}

impl SurrogateNet {
    /// Three ReLU hidden layers of width 200 into a 2-way softmax head; no
    /// dropout on the surrogate.
    pub fn init(input_dim: usize, rng: &mut ChaCha8Rng) -> Result<SurrogateNet> {
        let mut dims = vec![input_dim];
        dims.extend(std::iter::repeat(HIDDEN_WIDTH).take(HIDDEN_LAYERS));
        dims.push(2);
        let mut acts = vec![Activation::Relu; HIDDEN_LAYERS];
        acts.push(Activation::Softmax);
        Ok(SurrogateNet {
            net: Mlp::new(&dims, &acts, 0.0, rng)?,
            frozen: false,
        })
    }

    pub fn from_net(net: Mlp, frozen: bool) -> Result<SurrogateNet> {
        if net.output_dim() != 2 || *net.activations().last().unwrap() != Activation::Softmax {
            return Err(EmapError::Contract("surrogate needs a 2-way softmax head".into()));
        }
        Ok(SurrogateNet { net, frozen })
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    /// Class probabilities, dropout-free.
    pub fn probs(&self, rows: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.net.infer(rows)
    }

    /// Argmax class per row.
    pub fn classify(&self, rows: ArrayView2<f64>) -> Result<Vec<u8>> {
        let probs = self.probs(rows)?;
        Ok(probs
            .rows()
            .into_iter()
            .map(|r| u8::from(r[1] > r[0]))
            .collect())
    }

    pub fn param_checksum(&self) -> u64 {
        self.net.param_checksum()
    }

    pub fn save_json(&self, path: &std::path::Path) -> Result<()> {
        let file = SurrogateFile {
            role: "surrogate".into(),
            model: MlpJson::from_net(&self.net),
        };
        std::fs::write(path, serde_json::to_string(&file)?)?;
        Ok(())
    }

    pub fn load_json(path: &std::path::Path) -> Result<SurrogateNet> {
        let file: SurrogateFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if file.role != "surrogate" {
            return Err(EmapError::Schema(format!(
                "model file has role '{}', expected 'surrogate'",
                file.role
            )));
        }
        let mut s = SurrogateNet::from_net(file.model.into_net()?, false)?;
        s.freeze();
        Ok(s)
    }
}

#[derive(Serialize, Deserialize)]
struct SurrogateFile {
    role: String,
    #[serde(flatten)]
    model: MlpJson,
}

/// Distills the black box into a surrogate by cross-entropy on one-hot
/// black-box labels over the train split. Returns the frozen net and a
/// per-epoch loss/recovery log (recovery measured on the test split, or the
/// train split when no test rows exist).
pub fn train_surrogate(
    data: &Dataset,
    blackbox: &dyn BlackBox,
    config: &TrainConfig,
) -> Result<(SurrogateNet, Vec<EpochLog>)> {
    config.validate()?;
    let (train_rows, _) = data.train();
    if train_rows.nrows() == 0 {
        return Err(EmapError::InvalidArgument("no training rows".into()));
    }
    let bb_train = blackbox.predict(train_rows.view())?;
    let targets = one_hot_labels(&bb_train);

    let (eval_rows, _) = data.test();
    let eval_rows = if eval_rows.nrows() == 0 { train_rows.clone() } else { eval_rows };
    let bb_eval = blackbox.predict(eval_rows.view())?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut surrogate = SurrogateNet::init(train_rows.ncols(), &mut rng)?;
    let mut state = AdamState::new(surrogate.net());

    let n = train_rows.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    let mut log = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch = train_rows.select(Axis(0), chunk);
            let batch_targets = targets.select(Axis(0), chunk);
            let (probs, cache) = surrogate.net.forward_training(batch.view(), &mut rng)?;
            let (loss, grad) = cross_entropy(probs.view(), batch_targets.view())?;
            if !loss.is_finite() {
                return Err(EmapError::Diverged {
                    epoch,
                    message: format!("surrogate loss became {loss}"),
                });
            }
            let grads = surrogate.net.backward(&cache, grad.view())?;
            adam_step(&mut surrogate.net, &grads, &mut state, config.learning_rate)?;
            epoch_loss += loss;
            batches += 1.0;
        }
        let preds = surrogate.classify(eval_rows.view())?;
        let metric = crate::metrics::accuracy(&preds, &bb_eval)?;
        log.push(EpochLog {
            epoch,
            loss: epoch_loss / batches,
            metric,
        });
    }

    surrogate.freeze();
    Ok((surrogate, log))
}

/// Fraction of rows where the surrogate's argmax equals the black box class.
pub fn recovery_accuracy(surrogate: &SurrogateNet, blackbox: &dyn BlackBox, rows: ArrayView2<f64>) -> Result<f64> {
    if rows.nrows() == 0 {
        return Err(EmapError::InvalidArgument("recovery_accuracy: empty rows".into()));
    }
    let ours = surrogate.classify(rows)?;
    let theirs = blackbox.predict(rows)?;
    crate::metrics::accuracy(&ours, &theirs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureSchema, Split};
    use ndarray::array;

    /// A linear-rule black box for tests: class 1 iff w.x >= b.
    pub(crate) struct LinearSep {
        pub w: Vec<f64>,
        pub b: f64,
    }

    impl BlackBox for LinearSep {
        fn predict(&self, rows: ArrayView2<f64>) -> Result<Vec<u8>> {
            Ok(rows
                .rows()
                .into_iter()
                .map(|r| {
                    let score: f64 = r.iter().zip(&self.w).map(|(x, w)| x * w).sum();
                    u8::from(score >= self.b)
                })
                .collect())
        }
    }

    #[test]
    fn two_separable_points_reach_full_recovery() {
        let rows = array![[-1.0, -1.0], [1.0, 1.0]];
        let ds = Dataset::new(
            FeatureSchema::continuous_only(&["a", "b"]),
            rows,
            vec![0, 1],
            vec![Split::Train; 2],
        )
        .unwrap();
        let bb = LinearSep { w: vec![1.0, 1.0], b: 0.0 };
        let config = TrainConfig {
            epochs: 60,
            batch_size: 2,
            seed: 4,
            ..Default::default()
        };
        let (surrogate, log) = train_surrogate(&ds, &bb, &config).unwrap();
        assert!(surrogate.frozen());
        assert_eq!(log.len(), 60);
        let acc = recovery_accuracy(&surrogate, &bb, ds.rows.view()).unwrap();
        assert_eq!(acc, 1.0);
        assert!(log.last().unwrap().loss < log[0].loss);
    }

    #[test]
    fn exact_copy_oracle_recovers_fully() {
        // The surrogate itself, wrapped as a black box, must agree with
        // itself on every row.
        struct SurrogateAsBlackBox(SurrogateNet);
        impl BlackBox for SurrogateAsBlackBox {
            fn predict(&self, rows: ArrayView2<f64>) -> Result<Vec<u8>> {
                self.0.classify(rows)
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = SurrogateNet::init(2, &mut rng).unwrap();
        let rows = Array2::from_shape_fn((64, 2), |_| rand::Rng::random_range(&mut rng, -2.0..2.0));
        let copy = SurrogateAsBlackBox(s.clone());
        assert_eq!(recovery_accuracy(&s, &copy, rows.view()).unwrap(), 1.0);
    }

    #[test]
    fn constant_surrogate_on_balanced_labels_is_half() {
        // Hand-built net that always predicts class 0.
        let net = Mlp::from_parts(
            vec![2, 2],
            vec![Activation::Softmax],
            vec![crate::nn::LayerParams {
                weights: Array2::zeros((2, 2)),
                bias: array![5.0, -5.0],
            }],
            0.0,
        )
        .unwrap();
        let s = SurrogateNet::from_net(net, true).unwrap();
        let bb = LinearSep { w: vec![1.0, 0.0], b: 0.0 };
        // Balanced rows around the separator.
        let rows = Array2::from_shape_fn((200, 2), |(i, j)| {
            if j == 0 {
                if i % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            } else {
                0.3
            }
        });
        let acc = recovery_accuracy(&s, &bb, rows.view()).unwrap();
        assert!((acc - 0.5).abs() <= 0.05, "got {acc}");
    }

    #[test]
    fn empty_rows_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = SurrogateNet::init(2, &mut rng).unwrap();
        let bb = LinearSep { w: vec![1.0, 0.0], b: 0.0 };
        let rows = Array2::zeros((0, 2));
        assert!(recovery_accuracy(&s, &bb, rows.view()).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut s = SurrogateNet::init(3, &mut rng).unwrap();
        s.freeze();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("surrogate.json");
        s.save_json(&path).unwrap();
        let loaded = SurrogateNet::load_json(&path).unwrap();
        assert_eq!(s.param_checksum(), loaded.param_checksum());
        assert!(loaded.frozen());
    }

    #[test]
    fn determinism_same_seed_same_parameters() {
        let ds = crate::data::generate_half_moons(300, 0.2, 3, 0.8).unwrap();
        let bb = LinearSep { w: vec![0.5, -1.0], b: 0.1 };
        let config = TrainConfig {
            epochs: 3,
            seed: 99,
            ..Default::default()
        };
        let (a, _) = train_surrogate(&ds, &bb, &config).unwrap();
        let (b, _) = train_surrogate(&ds, &bb, &config).unwrap();
        assert_eq!(a.param_checksum(), b.param_checksum());
    }
}
