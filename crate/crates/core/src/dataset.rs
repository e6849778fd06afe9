//! In-memory dataset: weighted feature rows with class labels and group tags.
//!
//! The group tag is metadata only. It never enters the feature vector, so
//! nothing trained on a `Dataset` can condition on it.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::schema::{FeatureFlag, Schema};

/// One observation: features aligned to the schema, an outcome class, a
/// group tag, and a nonnegative weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub features: Vec<f64>,
    pub label: usize,
    pub group: String,
    pub weight: f64,
}

impl Row {
    pub fn new(features: Vec<f64>, label: usize, group: impl Into<String>) -> Self {
        Row {
            features,
            label,
            group: group.into(),
            weight: 1.0,
        }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }
}

/// Immutable collection of rows under one schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    schema: Schema,
    n_classes: usize,
    rows: Vec<Row>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    class_names: Option<Vec<String>>,
}

impl Dataset {
    /// Validate and build a dataset.
    ///
    /// Rows must match the schema width, labels must fall in `0..n_classes`,
    /// and weights must be finite and nonnegative. A nonempty dataset must
    /// carry positive total weight; an empty dataset is permitted (e.g. a
    /// zero-size generated population).
    pub fn new(schema: Schema, n_classes: usize, rows: Vec<Row>) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::Schema(format!(
                "need at least 2 classes, got {n_classes}"
            )));
        }
        let mut total_weight = 0.0;
        for (i, row) in rows.iter().enumerate() {
            if row.features.len() != schema.len() {
                return Err(Error::Schema(format!(
                    "row {} has {} features, schema has {}",
                    i,
                    row.features.len(),
                    schema.len()
                )));
            }
            if row.label >= n_classes {
                return Err(Error::Label {
                    row: i,
                    message: format!("label {} out of range 0..{}", row.label, n_classes),
                });
            }
            if !row.weight.is_finite() || row.weight < 0.0 {
                return Err(Error::Numeric(format!(
                    "row {} has invalid weight {}",
                    i, row.weight
                )));
            }
            total_weight += row.weight;
        }
        if !rows.is_empty() && total_weight <= 0.0 {
            return Err(Error::Degenerate(
                "dataset has rows but zero total weight".into(),
            ));
        }
        Ok(Dataset {
            schema,
            n_classes,
            rows,
            class_names: None,
        })
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_classes {
            return Err(Error::Schema(format!(
                "{} class names for {} classes",
                names.len(),
                self.n_classes
            )));
        }
        self.class_names = Some(names);
        Ok(self)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.rows.iter().map(|r| r.weight).sum()
    }

    /// Display names for classes; defaults to `class0..classK-1`.
    pub fn class_names(&self) -> Vec<String> {
        match &self.class_names {
            Some(names) => names.clone(),
            None => (0..self.n_classes).map(|k| format!("class{k}")).collect(),
        }
    }

    /// Distinct group ids in first-appearance order.
    pub fn group_ids(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for row in &self.rows {
            if seen.insert(row.group.as_str()) {
                out.push(row.group.clone());
            }
        }
        out
    }

    /// Weighted share of each class among the rows.
    pub fn class_weights(&self) -> Vec<f64> {
        let mut totals = vec![0.0; self.n_classes];
        for row in &self.rows {
            totals[row.label] += row.weight;
        }
        totals
    }

    /// Keep rows whose group matches; schema unchanged.
    pub fn filter_group(&self, group: &str) -> Result<Dataset> {
        let rows: Vec<Row> = self
            .rows
            .iter()
            .filter(|r| r.group == group)
            .cloned()
            .collect();
        if rows.is_empty() {
            return Err(Error::EmptySelection(group.to_string()));
        }
        let mut out = Dataset::new(self.schema.clone(), self.n_classes, rows)?;
        out.class_names = self.class_names.clone();
        Ok(out)
    }

    /// Drop every feature carrying any of the given flags, projecting rows.
    ///
    /// The same columns are removed from every row, whatever its group.
    pub fn apply_exclusions(&self, drop_flags: &BTreeSet<FeatureFlag>) -> Result<Dataset> {
        if drop_flags.is_empty() {
            return Ok(self.clone());
        }
        let schema = self.schema.without_flags(drop_flags)?;
        let kept: Vec<usize> = self
            .schema
            .features()
            .iter()
            .enumerate()
            .filter(|(_, f)| !f.has_any_flag(drop_flags))
            .map(|(i, _)| i)
            .collect();
        let rows = self
            .rows
            .iter()
            .map(|r| Row {
                features: kept.iter().map(|&i| r.features[i]).collect(),
                label: r.label,
                group: r.group.clone(),
                weight: r.weight,
            })
            .collect();
        let mut out = Dataset::new(schema, self.n_classes, rows)?;
        out.class_names = self.class_names.clone();
        Ok(out)
    }

    /// Subset of rows by source index, preserving order.
    fn take(&self, indices: &[usize]) -> Dataset {
        let rows = indices.iter().map(|&i| self.rows[i].clone()).collect();
        Dataset {
            schema: self.schema.clone(),
            n_classes: self.n_classes,
            rows,
            class_names: self.class_names.clone(),
        }
    }

    /// Stable hex fingerprint over schema and rows.
    pub fn fingerprint(&self) -> String {
        crate::hash::hex_digest(&serde_json::to_vec(self).expect("dataset serializes"))
    }
}

/// Disjoint random train/test partition of a source dataset.
#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub seed: u64,
    /// Source row indices of the train side, ascending.
    pub train_indices: Vec<usize>,
    /// Source row indices of the test side, ascending.
    pub test_indices: Vec<usize>,
}

/// Uniform random partition into halves determined solely by `seed`.
///
/// For odd `n` the extra row goes to the test side. Row order within each
/// side follows the source order, so replays are bit-identical.
pub fn split_equal(data: &Dataset, seed: u64) -> Result<SplitPair> {
    let n = data.len();
    if n < 2 {
        return Err(Error::Size(format!("cannot split {n} rows into two halves")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = rng_from_seed(seed);
    perm.shuffle(&mut rng);

    let train_size = n / 2;
    let mut train_indices: Vec<usize> = perm[..train_size].to_vec();
    let mut test_indices: Vec<usize> = perm[train_size..].to_vec();
    train_indices.sort_unstable();
    test_indices.sort_unstable();

    Ok(SplitPair {
        train: data.take(&train_indices),
        test: data.take(&test_indices),
        seed,
        train_indices,
        test_indices,
    })
}
