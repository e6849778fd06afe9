//! Multi-class stochastic gradient boosting with weighted regression trees,
//! a softmax link, shrinkage, and row subsampling.

mod loss;
mod tree;
mod train;

pub use loss::{deviance_grad_hess, row_deviance, softmax, ClassProbabilities};
pub use train::{train, train_restricted};
pub use tree::{fit_tree, ColumnStore, Node, Tree, TreeGrowth};

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::schema::Schema;

/// Boosting hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmConfig {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// Minimum summed hessian allowed in each child of a split.
    pub min_child_weight: f64,
    /// Fraction of rows drawn (without replacement) each round.
    pub subsample: f64,
    pub n_classes: usize,
    pub seed: u64,
    /// L2 penalty on leaf values.
    pub lambda: f64,
}

impl GbmConfig {
    pub fn defaults(n_classes: usize) -> Self {
        GbmConfig {
            n_rounds: 300,
            learning_rate: 0.1,
            max_depth: 4,
            min_child_weight: 1.0,
            subsample: 0.8,
            n_classes,
            seed: 0,
            lambda: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Numeric(format!(
                "learning_rate {} outside (0, 1]",
                self.learning_rate
            )));
        }
        if self.max_depth == 0 {
            return Err(Error::Numeric("max_depth must be positive".into()));
        }
        if !(self.min_child_weight >= 0.0) {
            return Err(Error::Numeric("min_child_weight must be >= 0".into()));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::Numeric(format!(
                "subsample {} outside (0, 1]",
                self.subsample
            )));
        }
        if self.n_classes < 2 {
            return Err(Error::Numeric("n_classes must be >= 2".into()));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::Numeric("lambda must be >= 0".into()));
        }
        Ok(())
    }
}

/// Trained additive ensemble: K base scores plus K trees per round.
///
/// Prediction is a pure function of the feature vector; the group tag is not
/// an input anywhere in this type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostModel {
    pub config: GbmConfig,
    pub base_scores: Vec<f64>,
    /// `rounds[r][k]` is round r's tree for class k.
    pub rounds: Vec<Vec<Tree>>,
    pub trained_schema: Schema,
    /// Group the model was trained on, when training was group-restricted.
    pub training_group: Option<String>,
}

impl BoostModel {
    pub fn n_classes(&self) -> usize {
        self.config.n_classes
    }

    pub fn n_rounds(&self) -> usize {
        self.rounds.len()
    }

    /// Raw additive scores: base scores plus shrunken leaf sums over the
    /// first `n_rounds` rounds.
    pub fn scores_at(&self, features: &[f64], n_rounds: usize) -> Result<Vec<f64>> {
        if features.len() != self.trained_schema.len() {
            return Err(Error::Schema(format!(
                "feature vector has {} entries, model was trained on {}",
                features.len(),
                self.trained_schema.len()
            )));
        }
        let mut scores = self.base_scores.clone();
        for round in &self.rounds[..n_rounds] {
            for (class, tree) in round.iter().enumerate() {
                scores[class] += self.config.learning_rate * tree.leaf_value(features);
            }
        }
        Ok(scores)
    }

    pub fn scores(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.scores_at(features, self.rounds.len())
    }

    /// Class probabilities for one feature vector.
    pub fn predict_proba(&self, features: &[f64]) -> Result<ClassProbabilities> {
        softmax(&self.scores(features)?)
    }

    /// Hard class assignment: argmax probability, ties to the lowest index.
    pub fn predict_class(&self, features: &[f64]) -> Result<usize> {
        Ok(self.predict_proba(features)?.argmax())
    }

    /// Hard class for every row of a dataset (schema checked once).
    pub fn predict_classes(&self, data: &Dataset) -> Result<Vec<usize>> {
        self.check_schema(data)?;
        data.rows()
            .iter()
            .map(|r| self.predict_class(&r.features))
            .collect()
    }

    pub fn check_schema(&self, data: &Dataset) -> Result<()> {
        if data.schema() != &self.trained_schema {
            return Err(Error::Schema(
                "dataset schema differs from the model's training schema".into(),
            ));
        }
        Ok(())
    }

    /// Weighted multinomial deviance of the model on a dataset.
    pub fn deviance(&self, data: &Dataset) -> Result<f64> {
        self.check_schema(data)?;
        let mut total = 0.0;
        for row in data.rows() {
            let p = self.predict_proba(&row.features)?;
            total += row_deviance(row.label, &p, row.weight);
        }
        Ok(total)
    }
}

const MODEL_CONTAINER_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelContainer {
    version: u32,
    schema_fingerprint: String,
    model: BoostModel,
}

/// Persist a model as versioned JSON. Reload reproduces bit-identical
/// predictions.
pub fn write_model_json(model: &BoostModel, path: impl AsRef<Path>) -> Result<()> {
    let container = ModelContainer {
        version: MODEL_CONTAINER_VERSION,
        schema_fingerprint: model.trained_schema.fingerprint(),
        model: model.clone(),
    };
    let file = File::create(path.as_ref())?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer(&mut writer, &container)?;
    writer.flush()?;
    Ok(())
}

pub fn read_model_json(path: impl AsRef<Path>) -> Result<BoostModel> {
    let file = File::open(path.as_ref())?;
    let container: ModelContainer = serde_json::from_reader(BufReader::new(file))?;
    if container.version != MODEL_CONTAINER_VERSION {
        return Err(Error::Incompatible(format!(
            "model container version {} (expected {})",
            container.version, MODEL_CONTAINER_VERSION
        )));
    }
    if container.schema_fingerprint != container.model.trained_schema.fingerprint() {
        return Err(Error::Incompatible(
            "model schema fingerprint does not match its schema".into(),
        ));
    }
    Ok(container.model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Row;
    use crate::schema::{Feature, FeatureKind};

    fn small_model() -> BoostModel {
        let schema = Schema::new(vec![
            Feature::new("x0", FeatureKind::Count),
            Feature::new("x1", FeatureKind::Count),
        ])
        .unwrap();
        let mut rows = Vec::new();
        for i in 0..24 {
            let x0 = (i % 6) as f64;
            let label = if x0 < 2.0 { 0 } else if x0 < 4.0 { 1 } else { 2 };
            rows.push(Row::new(vec![x0, (i % 5) as f64], label, "W"));
        }
        let data = Dataset::new(schema, 3, rows).unwrap();
        let mut config = GbmConfig::defaults(3);
        config.n_rounds = 10;
        config.min_child_weight = 0.0;
        config.subsample = 1.0;
        train(&data, &config).unwrap()
    }

    #[test]
    fn config_validation_catches_bad_ranges() {
        let mut c = GbmConfig::defaults(3);
        c.learning_rate = 0.0;
        assert!(c.validate().is_err());
        c = GbmConfig::defaults(3);
        c.subsample = 1.5;
        assert!(c.validate().is_err());
        c = GbmConfig::defaults(1);
        assert!(c.validate().is_err());
    }

    #[test]
    fn predict_rejects_wrong_arity() {
        let model = small_model();
        assert!(model.predict_proba(&[1.0]).is_err());
    }

    #[test]
    fn probabilities_normalize_over_random_inputs() {
        let model = small_model();
        for i in 0..100 {
            let f = vec![(i % 11) as f64 * 0.7, (i % 13) as f64 * 0.3];
            let p = model.predict_proba(&f).unwrap();
            let sum: f64 = p.as_slice().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn predict_class_agrees_with_argmax() {
        let model = small_model();
        for i in 0..1000 {
            let f = vec![(i % 17) as f64 * 0.5, (i % 7) as f64];
            let p = model.predict_proba(&f).unwrap();
            assert_eq!(model.predict_class(&f).unwrap(), p.argmax());
        }
    }

    #[test]
    fn model_json_round_trip_preserves_predictions_bitwise() {
        let model = small_model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        write_model_json(&model, &path).unwrap();
        let back = read_model_json(&path).unwrap();
        assert_eq!(back, model);
        for i in 0..50 {
            let f = vec![i as f64 * 0.31, (50 - i) as f64 * 0.17];
            let a = model.predict_proba(&f).unwrap();
            let b = back.predict_proba(&f).unwrap();
            assert_eq!(a.as_slice(), b.as_slice());
        }
    }

    #[test]
    fn training_is_deterministic_bit_for_bit() {
        let a = small_model();
        let b = small_model();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}
