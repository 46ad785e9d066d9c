//! Classification loss.

use ndarray::{Array2, ArrayView2};

use crate::error::{EmapError, Result};

/// Numerical floor inside logs; avoids -inf on saturated softmax outputs.
pub(crate) const EPS_NUM: f64 = 1e-12;

/// Mean cross-entropy of softmax outputs against one-hot labels.
///
/// Returns `(loss, grad)` where `grad = (probs - labels) / N` is the fused
/// softmax+cross-entropy gradient w.r.t. the head's pre-activation logits —
/// feed it straight into [`Mlp::backward`](super::Mlp::backward).
pub fn cross_entropy(probs: ArrayView2<f64>, labels: ArrayView2<f64>) -> Result<(f64, Array2<f64>)> {
    if probs.dim() != labels.dim() {
        return Err(EmapError::shape(
            "cross_entropy",
            format!("{:?}", probs.dim()),
            format!("{:?}", labels.dim()),
        ));
    }
    let n = probs.nrows();
    if n == 0 {
        return Err(EmapError::InvalidArgument("cross_entropy: empty batch".into()));
    }
    for (i, row) in labels.rows().into_iter().enumerate() {
        let ones = row.iter().filter(|&&v| v == 1.0).count();
        let zeros = row.iter().filter(|&&v| v == 0.0).count();
        if ones != 1 || ones + zeros != row.len() {
            return Err(EmapError::Contract(format!(
                "cross_entropy: label row {i} is not one-hot"
            )));
        }
    }
    for (i, row) in probs.rows().into_iter().enumerate() {
        if (row.sum() - 1.0).abs() > 1e-6 {
            return Err(EmapError::Contract(format!(
                "cross_entropy: probability row {i} sums to {}, not 1",
                row.sum()
            )));
        }
    }

    let mut loss = 0.0;
    for (p_row, l_row) in probs.rows().into_iter().zip(labels.rows()) {
        for (&p, &l) in p_row.iter().zip(l_row.iter()) {
            if l != 0.0 {
                loss -= l * (p + EPS_NUM).ln();
            }
        }
    }
    loss /= n as f64;

    let grad = (&probs - &labels) / n as f64;
    Ok((loss, grad))
}
