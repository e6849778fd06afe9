//! Dataset ingestion and persistence.
//!
//! Two formats: RFC-4180 CSV (header required, UTF-8, `.` decimal separator)
//! and a versioned JSON container that also carries the schema and weights.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Row};
use crate::error::{Error, Result};
use crate::schema::Schema;

/// Column bindings and defaults for CSV ingestion.
#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub label_column: String,
    pub group_column: String,
    /// Column holding row weights, read when present in the header.
    pub weight_column: String,
    /// Group assigned to every row when the group column is absent.
    pub default_group: Option<String>,
    /// Class count; inferred as max label + 1 when `None`.
    pub n_classes: Option<usize>,
}

impl CsvOptions {
    pub fn new(label_column: impl Into<String>, group_column: impl Into<String>) -> Self {
        CsvOptions {
            label_column: label_column.into(),
            group_column: group_column.into(),
            weight_column: "weight".into(),
            default_group: None,
            n_classes: None,
        }
    }
}

/// Load a CSV file against a declared schema.
pub fn load_csv(
    path: impl AsRef<Path>,
    schema: &Schema,
    label_column: &str,
    group_column: &str,
) -> Result<Dataset> {
    load_csv_with(path, schema, &CsvOptions::new(label_column, group_column))
}

/// Load a CSV file with explicit column options.
pub fn load_csv_with(
    path: impl AsRef<Path>,
    schema: &Schema,
    options: &CsvOptions,
) -> Result<Dataset> {
    let file = File::open(path.as_ref())?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(BufReader::new(file));

    let headers = reader.headers()?.clone();
    let position = |name: &str| headers.iter().position(|h| h == name);

    let mut feature_cols = Vec::with_capacity(schema.len());
    for name in schema.names() {
        match position(name) {
            Some(idx) => feature_cols.push(idx),
            None => {
                return Err(Error::Schema(format!(
                    "CSV is missing declared feature column {name:?}"
                )))
            }
        }
    }
    let label_col = position(&options.label_column).ok_or_else(|| {
        Error::Schema(format!(
            "CSV is missing label column {:?}",
            options.label_column
        ))
    })?;
    let group_col = match position(&options.group_column) {
        Some(idx) => Some(idx),
        None if options.default_group.is_some() => None,
        None => {
            return Err(Error::Schema(format!(
                "CSV is missing group column {:?} and no default group was supplied",
                options.group_column
            )))
        }
    };
    // A schema feature named like the weight column binds as a feature.
    let weight_col = if schema.index_of(&options.weight_column).is_some() {
        None
    } else {
        position(&options.weight_column)
    };

    let mut rows = Vec::new();
    let mut max_label = 0usize;
    for (i, record) in reader.records().enumerate() {
        let row_no = i + 1;
        let record = record?;
        let mut features = Vec::with_capacity(feature_cols.len());
        for (&col, name) in feature_cols.iter().zip(schema.names()) {
            let cell = record.get(col).unwrap_or("");
            let value: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                row: row_no,
                message: format!("feature {name:?} value {cell:?} is not numeric"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row: row_no,
                    message: format!("feature {name:?} value {cell:?} is not finite"),
                });
            }
            features.push(value);
        }
        let label_cell = record.get(label_col).unwrap_or("").trim();
        let label: usize = label_cell.parse().map_err(|_| Error::Label {
            row: row_no,
            message: format!("label value {label_cell:?} is not a class index"),
        })?;
        if let Some(k) = options.n_classes {
            if label >= k {
                return Err(Error::Label {
                    row: row_no,
                    message: format!("label {label} out of range 0..{k}"),
                });
            }
        }
        max_label = max_label.max(label);
        let group = match group_col {
            Some(col) => record.get(col).unwrap_or("").trim().to_string(),
            None => options.default_group.clone().expect("checked above"),
        };
        let weight = match weight_col {
            Some(col) => {
                let cell = record.get(col).unwrap_or("").trim();
                cell.parse().map_err(|_| Error::Parse {
                    row: row_no,
                    message: format!("weight value {cell:?} is not numeric"),
                })?
            }
            None => 1.0,
        };
        rows.push(Row {
            features,
            label,
            group,
            weight,
        });
    }

    let n_classes = options.n_classes.unwrap_or((max_label + 1).max(2));
    Dataset::new(schema.clone(), n_classes, rows)
}

/// Write a dataset as CSV: feature columns, then label, group, weight.
pub fn write_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));

    let mut header: Vec<String> = data.schema().names().map(str::to_string).collect();
    header.extend(["label".into(), "group".into(), "weight".into()]);
    writer.write_record(&header)?;

    for row in data.rows() {
        let mut record: Vec<String> = row.features.iter().map(|v| format_value(*v)).collect();
        record.push(row.label.to_string());
        record.push(row.group.clone());
        record.push(format_value(row.weight));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

// Shortest decimal that parses back to the same f64.
fn format_value(v: f64) -> String {
    let mut buffer = ryu_like(v);
    if buffer.is_empty() {
        buffer = v.to_string();
    }
    buffer
}

fn ryu_like(v: f64) -> String {
    // `{}` on f64 is already shortest-round-trip in Rust.
    format!("{v}")
}

const DATASET_CONTAINER_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct DatasetContainer {
    version: u32,
    dataset: Dataset,
}

/// Write the versioned JSON container.
pub fn write_dataset_json(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let container = DatasetContainer {
        version: DATASET_CONTAINER_VERSION,
        dataset: data.clone(),
    };
    let file = File::create(path.as_ref())?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer(&mut writer, &container)?;
    writer.flush()?;
    Ok(())
}

/// Read the versioned JSON container.
pub fn read_dataset_json(path: impl AsRef<Path>) -> Result<Dataset> {
    let file = File::open(path.as_ref())?;
    let container: DatasetContainer = serde_json::from_reader(BufReader::new(file))?;
    if container.version != DATASET_CONTAINER_VERSION {
        return Err(Error::Incompatible(format!(
            "dataset container version {} (expected {})",
            container.version, DATASET_CONTAINER_VERSION
        )));
    }
    Ok(container.dataset)
}
