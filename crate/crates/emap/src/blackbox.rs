//! The opaque classifier interface and an external-process adapter.
//!
//! A black box exposes exactly one capability: rows in, class ids out. No
//! gradients, no parameters. The adapter runs any command that reads CSV
//! rows on stdin and writes one class id per line on stdout, making the
//! explainer usable against models in other runtimes.

use std::io::Write;
use std::process::{Command, Stdio};

use ndarray::ArrayView2;

use crate::error::{EmapError, Result};

pub trait BlackBox: Sync {
    /// One class id in {0, 1} per row; deterministic for a trained model.
    fn predict(&self, rows: ArrayView2<f64>) -> Result<Vec<u8>>;

    /// Class-1 probability per row, when the model can produce one.
    fn prob_class1(&self, rows: ArrayView2<f64>) -> Result<Option<Vec<f64>>> {
        let _ = rows;
        Ok(None)
    }
}

/// Adapter wrapping `sh -c <command>`; one process invocation per `predict`
/// call, all rows batched through stdin.
#[derive(Debug, Clone)]
pub struct ExternalBlackBox {
    command: String,
}

pub fn external_blackbox(command_template: impl Into<String>) -> ExternalBlackBox {
    ExternalBlackBox {
        command: command_template.into(),
    }
}

impl ExternalBlackBox {
    fn run(&self, rows: ArrayView2<f64>) -> Result<Vec<u8>> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| EmapError::Adapter(format!("failed to spawn '{}': {e}", self.command)))?;

        let mut input = String::new();
        for row in rows.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            input.push_str(&line.join(","));
            input.push('\n');
        }
        child
            .stdin
            .take()
            .expect("stdin piped")
            .write_all(input.as_bytes())
            .map_err(|e| EmapError::Adapter(format!("writing rows to '{}': {e}", self.command)))?;

        let output = child
            .wait_with_output()
            .map_err(|e| EmapError::Adapter(format!("waiting for '{}': {e}", self.command)))?;
        if !output.status.success() {
            return Err(EmapError::Adapter(format!(
                "'{}' exited with {}; stderr: {}",
                self.command,
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        let stdout = String::from_utf8_lossy(&output.stdout);
        let mut preds = Vec::with_capacity(rows.nrows());
        for (i, line) in stdout.lines().enumerate() {
            match line.trim() {
                "0" => preds.push(0),
                "1" => preds.push(1),
                other => {
                    return Err(EmapError::Adapter(format!(
                        "'{}' line {}: expected class id 0 or 1, got '{other}'",
                        self.command,
                        i + 1
                    )))
                }
            }
        }
        if preds.len() != rows.nrows() {
            return Err(EmapError::Adapter(format!(
                "'{}' returned {} predictions for {} rows; stderr: {}",
                self.command,
                preds.len(),
                rows.nrows(),
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        Ok(preds)
    }
}

impl BlackBox for ExternalBlackBox {
    fn predict(&self, rows: ArrayView2<f64>) -> Result<Vec<u8>> {
        self.run(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn constant_zero_stub() {
        let bb = external_blackbox("while read -r _; do echo 0; done");
        let rows = Array2::from_elem((5, 3), 1.5);
        assert_eq!(bb.predict(rows.view()).unwrap(), vec![0; 5]);
    }

    #[test]
    fn count_mismatch_is_adapter_error() {
        // Emits N-1 lines for N rows.
        let bb = external_blackbox("sed -n '2,$p' | while read -r _; do echo 1; done");
        let rows = Array2::zeros((4, 2));
        let err = bb.predict(rows.view()).unwrap_err();
        assert!(matches!(err, EmapError::Adapter(_)), "{err}");
        assert!(err.to_string().contains("3 predictions for 4 rows"), "{err}");
    }

    #[test]
    fn malformed_line_is_adapter_error() {
        let bb = external_blackbox("while read -r _; do echo maybe; done");
        let rows = Array2::zeros((2, 2));
        let err = bb.predict(rows.view()).unwrap_err();
        assert!(err.to_string().contains("expected class id"), "{err}");
    }

    #[test]
    fn nonzero_exit_carries_stderr() {
        let bb = external_blackbox("echo boom >&2; exit 3");
        let rows = Array2::zeros((1, 1));
        let err = bb.predict(rows.view()).unwrap_err();
        assert!(err.to_string().contains("boom"), "{err}");
    }

    #[test]
    fn rows_arrive_as_csv() {
        // Classify by the first field's sign to prove values round-trip.
        let bb = external_blackbox("awk -F, '{ print ($1 >= 0 ? 1 : 0) }'");
        let rows = ndarray::array![[2.5, 0.0], [-1.25, 3.0], [0.75, -9.0]];
        assert_eq!(bb.predict(rows.view()).unwrap(), vec![1, 0, 1]);
    }
}
