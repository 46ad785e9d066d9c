//! Minimal feed-forward network engine with manual backpropagation.
//!
//! Scalars are `f64` throughout. Weights are row-major `(out_dim, in_dim)`
//! matrices; batches are `(n_rows, dim)` matrices. Backward returns gradients
//! for every parameter *and* for the network input — the input gradients are
//! what lets the perturber train through a frozen surrogate.
//!
//! Gradient convention at the head: when the final activation is `Softmax`,
//! `backward` expects the upstream gradient taken w.r.t. the final layer's
//! *pre-activation* (the fused softmax convention; [`cross_entropy`] returns
//! exactly that). For `Relu`/`Identity` heads the gradient is w.r.t. the
//! activation output and the element-wise backward happens internally.

mod adam;
mod loss;
mod serialize;

pub use adam::{adam_step, AdamState};
pub use loss::cross_entropy;
pub use serialize::MlpJson;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EmapError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
    Softmax,
}

#[derive(Debug, Clone)]
pub struct LayerParams {
    /// Row-major `(out_dim, in_dim)`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// A fixed-topology dense network.
#[derive(Debug, Clone)]
pub struct Mlp {
    layer_dims: Vec<usize>,
    activations: Vec<Activation>,
    layers: Vec<LayerParams>,
    dropout_rate: f64,
}

/// Intermediates cached by a forward pass, sufficient for backward.
#[derive(Debug)]
pub struct ForwardCache {
    layer_dims: Vec<usize>,
    input: Array2<f64>,
    /// Pre-activation `z` per layer.
    pre_activations: Vec<Array2<f64>>,
    /// Post-activation (and post-dropout) output per layer, as consumed by
    /// the next layer.
    outputs: Vec<Array2<f64>>,
    /// Inverted-dropout masks (entries 0 or 1/(1-p)); `None` when dropout was
    /// not applied to that layer.
    dropout_masks: Vec<Option<Array2<f64>>>,
}

/// Gradients mirroring [`Mlp`] parameters, plus the gradient w.r.t. the
/// network input.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    pub input: Array2<f64>,
}

fn he_uniform(out_dim: usize, in_dim: usize, rng: &mut impl Rng) -> Array2<f64> {
    let limit = (6.0 / in_dim as f64).sqrt();
    Array2::from_shape_fn((out_dim, in_dim), |_| rng.random_range(-limit..limit))
}

fn xavier_uniform(out_dim: usize, in_dim: usize, rng: &mut impl Rng) -> Array2<f64> {
    let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
    Array2::from_shape_fn((out_dim, in_dim), |_| rng.random_range(-limit..limit))
}

/// Row-wise softmax, stabilized by max subtraction. Valid for any finite
/// input.
pub fn softmax_rows(z: &Array2<f64>) -> Array2<f64> {
    let mut out = z.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum: f64 = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

impl Mlp {
    /// Builds a network with He-uniform init for layers feeding a ReLU and
    /// Xavier-uniform for the rest (softmax/identity heads). Biases start at
    /// zero.
    pub fn new(
        layer_dims: &[usize],
        activations: &[Activation],
        dropout_rate: f64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(EmapError::InvalidArgument(
                "layer_dims needs at least an input and an output dim".into(),
            ));
        }
        if layer_dims.iter().any(|&d| d == 0) {
            return Err(EmapError::InvalidArgument("layer dims must be positive".into()));
        }
        if activations.len() != layer_dims.len() - 1 {
            return Err(EmapError::InvalidArgument(format!(
                "expected {} activations for {} layers, got {}",
                layer_dims.len() - 1,
                layer_dims.len() - 1,
                activations.len()
            )));
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(EmapError::InvalidArgument(format!(
                "dropout_rate must lie in [0, 1), got {dropout_rate}"
            )));
        }
        for (i, act) in activations.iter().enumerate() {
            if *act == Activation::Softmax && i != activations.len() - 1 {
                return Err(EmapError::InvalidArgument(
                    "softmax is permitted only as the final activation".into(),
                ));
            }
        }

        let layers = (0..layer_dims.len() - 1)
            .map(|i| {
                let (in_dim, out_dim) = (layer_dims[i], layer_dims[i + 1]);
                let weights = match activations[i] {
                    Activation::Relu => he_uniform(out_dim, in_dim, rng),
                    _ => xavier_uniform(out_dim, in_dim, rng),
                };
                LayerParams {
                    weights,
                    bias: Array1::zeros(out_dim),
                }
            })
            .collect();

        Ok(Mlp {
            layer_dims: layer_dims.to_vec(),
            activations: activations.to_vec(),
            layers,
            dropout_rate,
        })
    }

    /// Builds a network from explicit parameters (tests, deserialization).
    pub fn from_parts(
        layer_dims: Vec<usize>,
        activations: Vec<Activation>,
        layers: Vec<LayerParams>,
        dropout_rate: f64,
    ) -> Result<Self> {
        if layers.len() != layer_dims.len().saturating_sub(1) || layers.len() != activations.len() {
            return Err(EmapError::InvalidArgument("layer count disagreement".into()));
        }
        for (i, layer) in layers.iter().enumerate() {
            let expect = (layer_dims[i + 1], layer_dims[i]);
            if layer.weights.dim() != expect || layer.bias.len() != layer_dims[i + 1] {
                return Err(EmapError::shape(
                    format!("layer {i} parameters"),
                    format!("weights {expect:?}"),
                    format!("weights {:?}, bias {}", layer.weights.dim(), layer.bias.len()),
                ));
            }
        }
        Ok(Mlp {
            layer_dims,
            activations,
            layers,
            dropout_rate,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    pub fn dropout_rate(&self) -> f64 {
        self.dropout_rate
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    /// Order-stable FNV-style hash over the exact parameter bits. Used to
    /// verify that a frozen network did not change.
    pub fn param_checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: f64| {
            h ^= v.to_bits();
            h = h.wrapping_mul(0x1000_0000_01b3);
        };
        for layer in &self.layers {
            layer.weights.iter().for_each(|&v| eat(v));
            layer.bias.iter().for_each(|&v| eat(v));
        }
        h
    }

    fn check_batch(&self, batch: &ArrayView2<f64>) -> Result<()> {
        if batch.ncols() != self.input_dim() {
            return Err(EmapError::shape(
                "network input (layer 0)",
                format!("{} columns", self.input_dim()),
                format!("{} columns", batch.ncols()),
            ));
        }
        Ok(())
    }

    fn forward_impl(
        &self,
        batch: ArrayView2<f64>,
        mut dropout_rng: Option<&mut dyn FnMut() -> f64>,
    ) -> Result<(Array2<f64>, ForwardCache)> {
        self.check_batch(&batch)?;
        let n_layers = self.layers.len();
        let mut pre_activations = Vec::with_capacity(n_layers);
        let mut outputs = Vec::with_capacity(n_layers);
        let mut dropout_masks = Vec::with_capacity(n_layers);

        let input = batch.to_owned();
        let mut current = input.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = current.dot(&layer.weights.t()) + &layer.bias;
            let mut a = match self.activations[i] {
                Activation::Relu => z.mapv(|v| v.max(0.0)),
                Activation::Identity => z.clone(),
                Activation::Softmax => softmax_rows(&z),
            };
            // Inverted dropout after each hidden activation; never on the head.
            let is_hidden = i + 1 < n_layers;
            let mask = match (&mut dropout_rng, is_hidden, self.dropout_rate > 0.0) {
                (Some(sample), true, true) => {
                    let keep = 1.0 - self.dropout_rate;
                    let mask =
                        Array2::from_shape_fn(a.dim(), |_| if sample() < keep { 1.0 / keep } else { 0.0 });
                    a *= &mask;
                    Some(mask)
                }
                _ => None,
            };
            pre_activations.push(z);
            outputs.push(a.clone());
            dropout_masks.push(mask);
            current = a;
        }

        let cache = ForwardCache {
            layer_dims: self.layer_dims.clone(),
            input,
            pre_activations,
            outputs,
            dropout_masks,
        };
        Ok((current, cache))
    }

    /// Forward pass with dropout active (training mode).
    pub fn forward_training(
        &self,
        batch: ArrayView2<f64>,
        rng: &mut impl Rng,
    ) -> Result<(Array2<f64>, ForwardCache)> {
        let mut sample = || rng.random::<f64>();
        self.forward_impl(batch, Some(&mut sample))
    }

    /// Forward pass with dropout disabled; deterministic for a fixed network.
    pub fn forward_inference(&self, batch: ArrayView2<f64>) -> Result<(Array2<f64>, ForwardCache)> {
        self.forward_impl(batch, None)
    }

    /// Inference without retaining the cache.
    pub fn infer(&self, batch: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_batch(&batch)?;
        let mut current = batch.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = current.dot(&layer.weights.t()) + &layer.bias;
            current = match self.activations[i] {
                Activation::Relu => z.mapv(|v| v.max(0.0)),
                Activation::Identity => z,
                Activation::Softmax => softmax_rows(&z),
            };
        }
        Ok(current)
    }

    /// Backpropagates `output_grad` through a cached forward pass.
    ///
    /// See the module docs for the softmax-head gradient convention. Errors
    /// if the cache does not match this network's topology or the gradient's
    /// shape disagrees with the cached batch.
    pub fn backward(&self, cache: &ForwardCache, output_grad: ArrayView2<f64>) -> Result<Gradients> {
        if cache.layer_dims != self.layer_dims {
            return Err(EmapError::Contract(format!(
                "stale cache: built for dims {:?}, network has {:?}",
                cache.layer_dims, self.layer_dims
            )));
        }
        let n = cache.input.nrows();
        let expect = (n, self.output_dim());
        if output_grad.dim() != expect {
            return Err(EmapError::shape(
                "backward output_grad",
                format!("{expect:?}"),
                format!("{:?}", output_grad.dim()),
            ));
        }

        let n_layers = self.layers.len();
        let mut weight_grads = vec![Array2::zeros((0, 0)); n_layers];
        let mut bias_grads = vec![Array1::zeros(0); n_layers];

        let mut upstream = output_grad.to_owned();
        for i in (0..n_layers).rev() {
            // Undo dropout scaling applied to this layer's output.
            if let Some(mask) = &cache.dropout_masks[i] {
                upstream *= mask;
            }
            let dz = match self.activations[i] {
                // Fused convention: upstream already w.r.t. pre-activation.
                Activation::Softmax => upstream,
                Activation::Identity => upstream,
                Activation::Relu => {
                    let mut dz = upstream;
                    dz.zip_mut_with(&cache.pre_activations[i], |g, &z| {
                        if z <= 0.0 {
                            *g = 0.0;
                        }
                    });
                    dz
                }
            };
            let layer_input = if i == 0 { &cache.input } else { &cache.outputs[i - 1] };
            weight_grads[i] = dz.t().dot(layer_input);
            bias_grads[i] = dz.sum_axis(Axis(0));
            upstream = dz.dot(&self.layers[i].weights);
        }

        Ok(Gradients {
            weights: weight_grads,
            biases: bias_grads,
            input: upstream,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity_1layer(dim: usize) -> Mlp {
        Mlp::from_parts(
            vec![dim, dim],
            vec![Activation::Identity],
            vec![LayerParams {
                weights: Array2::eye(dim),
                bias: Array1::zeros(dim),
            }],
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn identity_net_passes_input_through() {
        let net = identity_1layer(2);
        let input = array![[3.0, -1.0]];
        let out = net.infer(input.view()).unwrap();
        assert_eq!(out, input);
    }

    #[test]
    fn softmax_head_rows_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = Mlp::new(&[3, 5, 2], &[Activation::Relu, Activation::Softmax], 0.0, &mut rng).unwrap();
        let batch = Array2::from_shape_fn((16, 3), |_| rng.random_range(-4.0..4.0));
        let out = net.infer(batch.view()).unwrap();
        for row in out.rows() {
            assert!((row.sum() - 1.0).abs() <= 1e-9);
            assert!(row.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn softmax_is_stable_for_extreme_inputs() {
        let z = array![[1e300, -1e300, 0.0], [700.0, 710.0, 705.0]];
        let p = softmax_rows(&z);
        for row in p.rows() {
            assert!(row.iter().all(|v| v.is_finite() && *v >= 0.0));
            assert!((row.sum() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn fixed_2_3_2_relu_net_matches_hand_computation() {
        // Weights on a 3-decimal grid; the expected outputs below were
        // recomputed layer by layer with exact decimal arithmetic.
        let net = Mlp::from_parts(
            vec![2, 3, 2],
            vec![Activation::Relu, Activation::Identity],
            vec![
                LayerParams {
                    weights: array![[0.5, -0.25], [0.1, 0.2], [-0.3, 0.4]],
                    bias: array![0.1, -0.2, 0.05],
                },
                LayerParams {
                    weights: array![[1.0, -1.0, 0.5], [0.25, 0.5, -0.5]],
                    bias: array![0.0, 0.1],
                },
            ],
            0.0,
        )
        .unwrap();
        let input = array![[2.0, 1.0], [-1.0, 0.5]];
        let out = net.infer(input.view()).unwrap();
        let expected = array![[0.65, 0.4125], [0.275, -0.175]];
        for (o, e) in out.iter().zip(expected.iter()) {
            assert!((o - e).abs() <= 1e-12, "{o} vs {e}");
        }
    }

    #[test]
    fn forward_rejects_wrong_input_width() {
        let net = identity_1layer(3);
        let e = net.infer(Array2::zeros((1, 2)).view()).unwrap_err();
        assert!(e.to_string().contains("layer 0"), "{e}");
    }

    #[test]
    fn softmax_only_final_enforced() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = Mlp::new(&[2, 2, 2], &[Activation::Softmax, Activation::Identity], 0.0, &mut rng);
        assert!(err.is_err());
    }

    #[test]
    fn zero_output_grad_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Mlp::new(&[3, 4, 2], &[Activation::Relu, Activation::Identity], 0.0, &mut rng).unwrap();
        let batch = Array2::from_shape_fn((5, 3), |_| rng.random_range(-1.0..1.0));
        let (_, cache) = net.forward_inference(batch.view()).unwrap();
        let grads = net.backward(&cache, Array2::zeros((5, 2)).view()).unwrap();
        assert!(grads.input.iter().all(|&g| g == 0.0));
        for (w, b) in grads.weights.iter().zip(&grads.biases) {
            assert!(w.iter().all(|&g| g == 0.0));
            assert!(b.iter().all(|&g| g == 0.0));
        }
    }

    #[test]
    fn linear_net_input_gradient_is_weight_transpose_times_grad() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let weights = Array2::from_shape_fn((3, 4), |_| rng.random_range(-1.0..1.0));
        let net = Mlp::from_parts(
            vec![4, 3],
            vec![Activation::Identity],
            vec![LayerParams {
                weights: weights.clone(),
                bias: Array1::zeros(3),
            }],
            0.0,
        )
        .unwrap();
        let batch = Array2::from_shape_fn((2, 4), |_| rng.random_range(-1.0..1.0));
        let grad_out = Array2::from_shape_fn((2, 3), |_| rng.random_range(-1.0..1.0));
        let (_, cache) = net.forward_inference(batch.view()).unwrap();
        let grads = net.backward(&cache, grad_out.view()).unwrap();
        let expected = grad_out.dot(&weights);
        for (a, b) in grads.input.iter().zip(expected.iter()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn backward_rejects_mismatched_cache() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let net_a = Mlp::new(&[2, 3, 2], &[Activation::Relu, Activation::Identity], 0.0, &mut rng).unwrap();
        let net_b = Mlp::new(&[2, 4, 2], &[Activation::Relu, Activation::Identity], 0.0, &mut rng).unwrap();
        let batch = Array2::zeros((1, 2));
        let (_, cache) = net_a.forward_inference(batch.view()).unwrap();
        let err = net_b.backward(&cache, Array2::zeros((1, 2)).view()).unwrap_err();
        assert!(matches!(err, EmapError::Contract(_)));
    }

    #[test]
    fn inference_ignores_dropout_and_is_repeatable() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = Mlp::new(&[4, 8, 8, 2], &[Activation::Relu, Activation::Relu, Activation::Identity], 0.5, &mut rng)
            .unwrap();
        let batch = Array2::from_shape_fn((6, 4), |_| rng.random_range(-1.0..1.0));
        let a = net.infer(batch.view()).unwrap();
        let b = net.infer(batch.view()).unwrap();
        assert_eq!(a, b);
        // Training mode with dropout must differ from inference almost surely.
        let mut rng2 = ChaCha8Rng::seed_from_u64(10);
        let (c, _) = net.forward_training(batch.view(), &mut rng2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn dropout_mask_scales_kept_units() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let net = Mlp::new(&[2, 64, 2], &[Activation::Relu, Activation::Identity], 0.2, &mut rng).unwrap();
        let batch = array![[1.0, -0.5]];
        let (_, cache) = net.forward_training(batch.view(), &mut rng).unwrap();
        let mask = cache.dropout_masks[0].as_ref().unwrap();
        let keep = 1.0 - 0.2_f64;
        assert!(mask.iter().all(|&m| m == 0.0 || (m - 1.0 / keep).abs() < 1e-15));
        assert!(cache.dropout_masks[1].is_none(), "no dropout on the head");
    }
}
