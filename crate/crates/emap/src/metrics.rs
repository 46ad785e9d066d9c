//! Classification metrics.

use crate::error::{EmapError, Result};

/// Binary F1 with class 1 positive. Returns 0 when precision+recall is 0.
pub fn f_score(predictions: &[u8], truth: &[u8]) -> Result<f64> {
    if predictions.len() != truth.len() || predictions.is_empty() {
        return Err(EmapError::shape(
            "f_score",
            format!("{} non-empty labels", truth.len()),
            format!("{} predictions", predictions.len()),
        ));
    }
    let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
    for (&p, &t) in predictions.iter().zip(truth) {
        match (p, t) {
            (1, 1) => tp += 1.0,
            (1, 0) => fp += 1.0,
            (0, 1) => fn_ += 1.0,
            _ => {}
        }
    }
    let denom = 2.0 * tp + fp + fn_;
    Ok(if denom == 0.0 { 0.0 } else { 2.0 * tp / denom })
}

pub fn accuracy(predictions: &[u8], truth: &[u8]) -> Result<f64> {
    if predictions.len() != truth.len() || predictions.is_empty() {
        return Err(EmapError::shape(
            "accuracy",
            format!("{} non-empty labels", truth.len()),
            format!("{} predictions", predictions.len()),
        ));
    }
    let hits = predictions.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        assert_eq!(f_score(&[1, 0, 1], &[1, 0, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 0, 1], &[1, 0, 1]).unwrap(), 1.0);
    }

    #[test]
    fn known_confusion_counts() {
        // tp=1 fp=1 fn=1 -> f1 = 2/(2+1+1) = 0.5
        let f = f_score(&[1, 1, 0, 0], &[1, 0, 1, 0]).unwrap();
        assert!((f - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_all_negative() {
        assert_eq!(f_score(&[0, 0], &[0, 0]).unwrap(), 0.0);
    }

    #[test]
    fn empty_rejected() {
        assert!(f_score(&[], &[]).is_err());
    }
}
