//! Non-parametric bootstrap intervals for audit metrics.
//!
//! The trained model and the training data are treated as fixed; only test
//! rows are resampled. Intervals are percentile intervals, deterministic in
//! the seed.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::gbm::BoostModel;
use crate::rng::rng_for_stream;

/// Audit metric families selectable as bootstrap statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    PredictedShare,
    ColError,
    RowError,
}

/// A named scalar statistic over an audited test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticSpec {
    pub metric: MetricKind,
    pub class: usize,
    /// Restrict to one group's rows; `None` uses the whole test set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
}

impl StatisticSpec {
    pub fn predicted_share(class: usize) -> Self {
        StatisticSpec {
            metric: MetricKind::PredictedShare,
            class,
            group: None,
        }
    }

    pub fn col_error(class: usize) -> Self {
        StatisticSpec {
            metric: MetricKind::ColError,
            class,
            group: None,
        }
    }

    pub fn for_group(mut self, group: impl Into<String>) -> Self {
        self.group = Some(group.into());
        self
    }

    pub fn describe(&self) -> String {
        let metric = match self.metric {
            MetricKind::PredictedShare => "predicted_share",
            MetricKind::ColError => "col_error",
            MetricKind::RowError => "row_error",
        };
        match &self.group {
            Some(g) => format!("{metric}[class {}] for group {g}", self.class),
            None => format!("{metric}[class {}]", self.class),
        }
    }
}

/// Percentile bootstrap interval for an audit statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub statistic: StatisticSpec,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub replicates: usize,
    /// Resamples redrawn because the statistic was undefined on them.
    pub redraws: usize,
    pub seed: u64,
}

struct ScoredRow {
    label: usize,
    prediction: usize,
    weight: f64,
}

fn evaluate(rows: &[ScoredRow], indices: &[usize], spec: &StatisticSpec) -> Option<f64> {
    let mut total = 0.0;
    let mut class_pred = 0.0; // mass predicted as `class`
    let mut class_pred_wrong = 0.0;
    let mut class_obs = 0.0; // mass observed as `class`
    let mut class_obs_wrong = 0.0;
    for &i in indices {
        let row = &rows[i];
        total += row.weight;
        if row.prediction == spec.class {
            class_pred += row.weight;
            if row.label != spec.class {
                class_pred_wrong += row.weight;
            }
        }
        if row.label == spec.class {
            class_obs += row.weight;
            if row.prediction != spec.class {
                class_obs_wrong += row.weight;
            }
        }
    }
    if total <= 0.0 {
        return None;
    }
    match spec.metric {
        MetricKind::PredictedShare => Some(class_pred / total),
        MetricKind::ColError => {
            if class_pred > 0.0 {
                Some(class_pred_wrong / class_pred)
            } else {
                None
            }
        }
        MetricKind::RowError => {
            if class_obs > 0.0 {
                Some(class_obs_wrong / class_obs)
            } else {
                None
            }
        }
    }
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let rank = q * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = rank - lo as f64;
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

/// Resample test rows with replacement `b` times and return the percentile
/// interval for `statistic` at the given confidence level.
///
/// Resamples on which the statistic is undefined (e.g. an empty predicted
/// class) are redrawn, with the redraw count reported.
pub fn bootstrap_ci(
    test: &Dataset,
    model: &BoostModel,
    statistic: &StatisticSpec,
    b: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapResult> {
    if b < 100 {
        return Err(Error::Size(format!("need B >= 100 resamples, got {b}")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Numeric(format!("level {level} outside (0, 1)")));
    }
    model.check_schema(test)?;

    // Predictions are computed once; the model is fixed under resampling.
    let rows: Vec<ScoredRow> = test
        .rows()
        .iter()
        .filter(|r| statistic.group.as_deref().is_none_or(|g| r.group == g))
        .map(|r| {
            Ok(ScoredRow {
                label: r.label,
                prediction: model.predict_class(&r.features)?,
                weight: r.weight,
            })
        })
        .collect::<Result<_>>()?;
    if rows.is_empty() {
        return Err(match &statistic.group {
            Some(g) => Error::EmptySelection(g.clone()),
            None => Error::Size("empty test set".into()),
        });
    }

    let full: Vec<usize> = (0..rows.len()).collect();
    let point = evaluate(&rows, &full, statistic).ok_or_else(|| {
        Error::Degenerate(format!(
            "statistic {} undefined on the full test set",
            statistic.describe()
        ))
    })?;

    let mut stats = Vec::with_capacity(b);
    let mut redraws = 0usize;
    let mut draw = 0u64;
    let max_draws = (b as u64) * 10;
    let mut indices = vec![0usize; rows.len()];
    while stats.len() < b {
        if draw >= max_draws {
            return Err(Error::Degenerate(format!(
                "statistic {} undefined on too many resamples ({redraws} redraws)",
                statistic.describe()
            )));
        }
        let mut rng = rng_for_stream(seed, draw);
        draw += 1;
        for slot in indices.iter_mut() {
            *slot = rng.gen_range(0..rows.len());
        }
        match evaluate(&rows, &indices, statistic) {
            Some(s) => stats.push(s),
            None => redraws += 1,
        }
    }
    stats.sort_by(|a, b| a.partial_cmp(b).expect("finite statistics"));
    let alpha = 1.0 - level;
    let lower = percentile(&stats, alpha / 2.0);
    let upper = percentile(&stats, 1.0 - alpha / 2.0);

    Ok(BootstrapResult {
        statistic: statistic.clone(),
        point,
        lower,
        upper,
        level,
        replicates: b,
        redraws,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Row;
    use crate::gbm::{Node, Tree};
    use crate::schema::{Feature, FeatureKind, Schema};
    use crate::GbmConfig;
    use rand::Rng;

    fn schema1() -> Schema {
        Schema::new(vec![Feature::new("x", FeatureKind::Count)]).unwrap()
    }

    /// Hand-built model: class 1 wins when x >= 0.5, class 0 otherwise.
    fn step_model() -> BoostModel {
        let mut config = GbmConfig::defaults(2);
        config.n_rounds = 1;
        config.learning_rate = 1.0;
        let tree_for_class1 = Tree {
            nodes: vec![
                Node::Split {
                    feature: 0,
                    threshold: 0.5,
                    gain: 1.0,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { value: -2.0 },
                Node::Leaf { value: 2.0 },
            ],
        };
        let flat = Tree {
            nodes: vec![Node::Leaf { value: 0.0 }],
        };
        BoostModel {
            config,
            base_scores: vec![0.0, 0.0],
            rounds: vec![vec![flat, tree_for_class1]],
            trained_schema: schema1(),
            training_group: None,
        }
    }

    fn dataset_with_positive_fraction(n: usize, fraction: f64, seed: u64) -> Dataset {
        let mut rng = crate::rng::rng_from_seed(seed);
        let rows = (0..n)
            .map(|_| {
                let x = if rng.gen_bool(fraction) { 1.0 } else { 0.0 };
                Row::new(vec![x], usize::from(x >= 0.5), "W")
            })
            .collect();
        Dataset::new(schema1(), 2, rows).unwrap()
    }

    #[test]
    fn degenerate_share_gives_unit_interval() {
        // Model predicts class 0 for every row.
        let data = dataset_with_positive_fraction(200, 0.0, 1);
        let model = step_model();
        let result = bootstrap_ci(
            &data,
            &model,
            &StatisticSpec::predicted_share(0),
            200,
            0.95,
            42,
        )
        .unwrap();
        assert_eq!(result.point, 1.0);
        assert_eq!(result.lower, 1.0);
        assert_eq!(result.upper, 1.0);
    }

    #[test]
    fn point_lies_inside_the_interval() {
        let data = dataset_with_positive_fraction(500, 0.3, 2);
        let model = step_model();
        let result = bootstrap_ci(
            &data,
            &model,
            &StatisticSpec::predicted_share(1),
            300,
            0.9,
            7,
        )
        .unwrap();
        assert!(result.lower <= result.point && result.point <= result.upper);
    }

    #[test]
    fn same_seed_gives_identical_intervals() {
        let data = dataset_with_positive_fraction(400, 0.4, 3);
        let model = step_model();
        let spec = StatisticSpec::col_error(1);
        let a = bootstrap_ci(&data, &model, &spec, 250, 0.95, 11).unwrap();
        let b = bootstrap_ci(&data, &model, &spec, 250, 0.95, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn interval_width_shrinks_like_sqrt_n() {
        let model = step_model();
        let big = dataset_with_positive_fraction(40_000, 0.3, 4);
        let small = dataset_with_positive_fraction(10_000, 0.3, 5);
        let spec = StatisticSpec::predicted_share(1);
        let wide = bootstrap_ci(&small, &model, &spec, 1000, 0.95, 21).unwrap();
        let narrow = bootstrap_ci(&big, &model, &spec, 1000, 0.95, 22).unwrap();
        let ratio = (wide.upper - wide.lower) / (narrow.upper - narrow.lower);
        assert!(
            (1.7..=2.3).contains(&ratio),
            "width ratio {ratio} outside [1.7, 2.3]"
        );
    }

    #[test]
    fn rejects_small_b_and_bad_level() {
        let data = dataset_with_positive_fraction(100, 0.5, 6);
        let model = step_model();
        let spec = StatisticSpec::predicted_share(1);
        assert!(bootstrap_ci(&data, &model, &spec, 50, 0.95, 0).is_err());
        assert!(bootstrap_ci(&data, &model, &spec, 200, 1.0, 0).is_err());
    }
}
