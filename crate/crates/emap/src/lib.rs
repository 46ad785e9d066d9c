//! EMAP: explanation by minimal adversarial perturbation.
//!
//! Pipeline: a black-box classifier (`blackbox`) is distilled into a
//! differentiable surrogate (`surrogate`); a perturbation network
//! (`perturber`) is then trained through the frozen surrogate to emit the
//! smallest perturbation that flips each instance's class. Negating the
//! perturbation yields a per-instance explanation direction (`explain`),
//! comparable against a sampling-based local-linear baseline (`baseline`).

pub mod baseline;
pub mod blackbox;
pub mod config;
pub mod data;
pub mod error;
pub mod explain;
pub mod forest;
pub mod metrics;
pub mod nn;
pub mod perturber;
pub mod plot;
pub mod surrogate;

pub use config::TrainConfig;
pub use error::{EmapError, Result};
