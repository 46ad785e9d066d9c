//! Versioned JSON model format.
//!
//! JSON `f64` values are emitted as shortest round-trippable decimals, so a
//! save/load cycle reproduces every parameter bit-exactly.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{EmapError, Result};

use super::{Activation, LayerParams, Mlp};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Wire form of an [`Mlp`]: weights as per-layer row-major arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpJson {
    pub schema_version: u32,
    pub layer_dims: Vec<usize>,
    pub activations: Vec<Activation>,
    pub dropout_rate: f64,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpJson {
    pub fn from_net(net: &Mlp) -> Self {
        MlpJson {
            schema_version: MODEL_SCHEMA_VERSION,
            layer_dims: net.layer_dims().to_vec(),
            activations: net.activations().to_vec(),
            dropout_rate: net.dropout_rate(),
            weights: net.layers().iter().map(|l| l.weights.iter().cloned().collect()).collect(),
            biases: net.layers().iter().map(|l| l.bias.to_vec()).collect(),
        }
    }

    pub fn into_net(self) -> Result<Mlp> {
        if self.schema_version != MODEL_SCHEMA_VERSION {
            return Err(EmapError::Schema(format!(
                "unsupported model schema_version {} (expected {})",
                self.schema_version, MODEL_SCHEMA_VERSION
            )));
        }
        if self.weights.len() + 1 != self.layer_dims.len() || self.biases.len() != self.weights.len() {
            return Err(EmapError::Schema("layer count disagreement in model file".into()));
        }
        let mut layers = Vec::with_capacity(self.weights.len());
        for (i, (w, b)) in self.weights.into_iter().zip(self.biases).enumerate() {
            let (out_dim, in_dim) = (self.layer_dims[i + 1], self.layer_dims[i]);
            if w.len() != out_dim * in_dim || b.len() != out_dim {
                return Err(EmapError::Schema(format!(
                    "layer {i}: expected {out_dim}x{in_dim} weights and {out_dim} biases, got {} and {}",
                    w.len(),
                    b.len()
                )));
            }
            layers.push(LayerParams {
                weights: Array2::from_shape_vec((out_dim, in_dim), w)
                    .map_err(|e| EmapError::Schema(e.to_string()))?,
                bias: Array1::from_vec(b),
            });
        }
        Mlp::from_parts(self.layer_dims, self.activations, layers, self.dropout_rate)
    }
}
