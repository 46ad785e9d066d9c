//! Dataset CSV export/import with a JSON schema sidecar.
//!
//! The CSV holds one encoded row per line: feature columns (continuous names
//! first, then `feature=value` one-hot columns), `label`, `split`. Reals are
//! written as shortest round-trippable decimals, so export/import is
//! bit-exact.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{EmapError, Result};

use super::{Dataset, FeatureSchema, Split};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// JSON sidecar describing a dataset CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSidecar {
    pub schema_version: u32,
    pub schema: FeatureSchema,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Normalization>,
    /// Rows/cols for image-shaped continuous data, when applicable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_shape: Option<(usize, usize)>,
}

pub const SIDECAR_SCHEMA_VERSION: u32 = 1;

impl DatasetSidecar {
    pub fn new(schema: FeatureSchema) -> Self {
        DatasetSidecar {
            schema_version: SIDECAR_SCHEMA_VERSION,
            schema,
            normalization: None,
            image_shape: None,
        }
    }
}

/// Writes `dataset.csv` plus its sidecar; returns the sidecar path.
pub fn write_dataset_csv(dataset: &Dataset, csv_path: &Path, sidecar: &DatasetSidecar) -> Result<std::path::PathBuf> {
    let mut writer = csv::Writer::from_path(csv_path)?;
    let mut header = sidecar.schema.encoded_column_names();
    header.push("label".into());
    header.push("split".into());
    writer.write_record(&header)?;
    for (i, row) in dataset.rows.rows().into_iter().enumerate() {
        let mut record: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        record.push(format!("{}", dataset.labels[i]));
        record.push(match dataset.split[i] {
            Split::Train => "train".into(),
            Split::Test => "test".into(),
        });
        writer.write_record(&record)?;
    }
    writer.flush()?;

    let sidecar_path = sidecar_path_for(csv_path);
    std::fs::write(&sidecar_path, serde_json::to_string_pretty(sidecar)?)?;
    Ok(sidecar_path)
}

/// The sidecar convention: `<stem>.schema.json` next to the CSV.
pub fn sidecar_path_for(csv_path: &Path) -> std::path::PathBuf {
    csv_path.with_extension("schema.json")
}

/// Reads a dataset CSV written by [`write_dataset_csv`], using its sidecar.
pub fn read_dataset_csv(csv_path: &Path) -> Result<(Dataset, DatasetSidecar)> {
    let sidecar_path = sidecar_path_for(csv_path);
    let sidecar: DatasetSidecar = serde_json::from_str(&std::fs::read_to_string(&sidecar_path).map_err(|e| {
        EmapError::Schema(format!("cannot read sidecar {}: {e}", sidecar_path.display()))
    })?)?;
    if sidecar.schema_version != SIDECAR_SCHEMA_VERSION {
        return Err(EmapError::Schema(format!(
            "unsupported sidecar schema_version {}",
            sidecar.schema_version
        )));
    }

    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(csv_path)?;
    let width = sidecar.schema.encoded_width();
    let headers = reader.headers()?.clone();
    if headers.len() != width + 2 {
        return Err(EmapError::Schema(format!(
            "dataset CSV has {} columns, sidecar schema implies {}",
            headers.len(),
            width + 2
        )));
    }
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut split = Vec::new();
    for record in reader.records() {
        let record = record?;
        for j in 0..width {
            values.push(parse_f64(record.get(j).unwrap_or(""))?);
        }
        labels.push(match record.get(width) {
            Some("0") => 0u8,
            Some("1") => 1u8,
            other => return Err(EmapError::Schema(format!("bad label {other:?}"))),
        });
        split.push(match record.get(width + 1) {
            Some("train") => Split::Train,
            Some("test") => Split::Test,
            other => return Err(EmapError::Schema(format!("bad split tag {other:?}"))),
        });
    }
    let n = labels.len();
    let rows = Array2::from_shape_vec((n, width), values).map_err(|e| EmapError::Schema(e.to_string()))?;
    let dataset = Dataset::new(sidecar.schema.clone(), rows, labels, split)?;
    Ok((dataset, sidecar))
}

/// Reads bare feature rows (no labels required) for explanation inputs.
///
/// Columns are matched by name against `schema`'s encoded column names;
/// extra columns such as `label`/`split` are ignored.
pub fn read_rows_csv(csv_path: &Path, schema: &FeatureSchema) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(csv_path)?;
    let headers = reader.headers()?.clone();
    let wanted = schema.encoded_column_names();
    let mut positions = Vec::with_capacity(wanted.len());
    for name in &wanted {
        let pos = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| EmapError::Schema(format!("input CSV is missing column '{name}'")))?;
        positions.push(pos);
    }
    let mut values = Vec::new();
    let mut n = 0usize;
    for record in reader.records() {
        let record = record?;
        for &p in &positions {
            values.push(parse_f64(record.get(p).unwrap_or(""))?);
        }
        n += 1;
    }
    if n == 0 {
        return Err(EmapError::InvalidArgument(format!(
            "input file {} holds no data rows",
            csv_path.display()
        )));
    }
    Array2::from_shape_vec((n, wanted.len()), values).map_err(|e| EmapError::Schema(e.to_string()))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|e| EmapError::Schema(format!("bad real value '{s}': {e}")))
}
