//! Per-group confusion tables and the derived audit metrics.
//!
//! A confusion table here is weighted: rows are observed classes, columns are
//! predicted classes. Three families of numbers are derived:
//! classification error (row-wise), prediction error (column-wise, the
//! operative forecasting metric), and predicted-class shares.

mod bootstrap;
mod robustness;

pub use bootstrap::{bootstrap_ci, BootstrapResult, MetricKind, StatisticSpec};
pub use robustness::{robustness_harness, DispersionReport, HarnessCell, MetricDispersion};

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::gbm::BoostModel;
use crate::rng::rng_from_seed;

/// Group label used for the pooled report.
pub const ALL_GROUPS: &str = "all";

/// Weighted K x K confusion table for one group, with derived metrics.
///
/// A row or column with zero mass reports its error as `None` rather than 0,
/// so degenerate groups cannot masquerade as perfect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionReport {
    pub group: String,
    pub class_names: Vec<String>,
    /// `counts[observed][predicted]`, weighted.
    pub counts: Vec<Vec<f64>>,
    /// Per observed class: fraction of its mass predicted elsewhere.
    pub row_errors: Vec<Option<f64>>,
    /// Per predicted class: fraction of its forecasts that are wrong.
    pub col_errors: Vec<Option<f64>>,
    /// Fraction of total mass assigned to each predicted class.
    pub predicted_shares: Vec<f64>,
    /// Total weight.
    pub n: f64,
}

impl ConfusionReport {
    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    fn from_counts(group: &str, class_names: Vec<String>, counts: Vec<Vec<f64>>) -> Result<Self> {
        let k = counts.len();
        let total: f64 = counts.iter().flatten().sum();
        if total <= 0.0 {
            return Err(Error::Degenerate(
                "confusion table has zero total weight".into(),
            ));
        }
        let mut row_errors = Vec::with_capacity(k);
        let mut col_errors = Vec::with_capacity(k);
        let mut predicted_shares = Vec::with_capacity(k);
        for i in 0..k {
            let row_sum: f64 = counts[i].iter().sum();
            row_errors.push(if row_sum > 0.0 {
                Some((row_sum - counts[i][i]) / row_sum)
            } else {
                None
            });
        }
        for j in 0..k {
            let col_sum: f64 = counts.iter().map(|row| row[j]).sum();
            col_errors.push(if col_sum > 0.0 {
                Some((col_sum - counts[j][j]) / col_sum)
            } else {
                None
            });
            predicted_shares.push(col_sum / total);
        }
        Ok(ConfusionReport {
            group: group.to_string(),
            class_names,
            counts,
            row_errors,
            col_errors,
            predicted_shares,
            n: total,
        })
    }
}

/// Build a weighted confusion report from parallel label/prediction slices.
pub fn confusion(
    labels: &[usize],
    predictions: &[usize],
    weights: &[f64],
    n_classes: usize,
    group: &str,
    class_names: &[String],
) -> Result<ConfusionReport> {
    if labels.len() != predictions.len() || labels.len() != weights.len() {
        return Err(Error::Incompatible(format!(
            "labels ({}), predictions ({}), and weights ({}) differ in length",
            labels.len(),
            predictions.len(),
            weights.len()
        )));
    }
    let mut counts = vec![vec![0.0; n_classes]; n_classes];
    for ((&label, &pred), &w) in labels.iter().zip(predictions).zip(weights) {
        if w < 0.0 {
            return Err(Error::Numeric("negative weight in confusion input".into()));
        }
        counts[label][pred] += w;
    }
    ConfusionReport::from_counts(group, class_names.to_vec(), counts)
}

/// Build a report directly from a counts matrix (e.g. a published table).
pub fn confusion_from_counts(
    counts: Vec<Vec<f64>>,
    group: &str,
    class_names: &[String],
) -> Result<ConfusionReport> {
    ConfusionReport::from_counts(group, class_names.to_vec(), counts)
}

/// Signed per-class difference between two groups' audit metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisparityEntry {
    pub group_a: String,
    pub group_b: String,
    /// `predicted_shares[a] - predicted_shares[b]` per class.
    pub predicted_share_diff: Vec<f64>,
    /// `col_errors[a] - col_errors[b]` per class; `None` when undefined on
    /// either side.
    pub col_error_diff: Vec<Option<f64>>,
}

/// One model audited on one test set: a confusion report per group plus the
/// pooled report, mean predicted probabilities, and pairwise disparities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditBundle {
    pub groups: BTreeMap<String, ConfusionReport>,
    pub all: ConfusionReport,
    /// Mean predicted class probabilities per group (and for "all").
    pub mean_proba: BTreeMap<String, Vec<f64>>,
    pub disparities: Vec<DisparityEntry>,
    pub training_group: Option<String>,
    pub test_fingerprint: String,
}

impl AuditBundle {
    pub fn report_for(&self, group: &str) -> Option<&ConfusionReport> {
        if group == ALL_GROUPS {
            Some(&self.all)
        } else {
            self.groups.get(group)
        }
    }
}

/// Predict every test row once, then partition the results by group tag.
pub fn audit_by_group(model: &BoostModel, test: &Dataset) -> Result<AuditBundle> {
    if test.is_empty() {
        return Err(Error::Size("cannot audit an empty test set".into()));
    }
    model.check_schema(test)?;
    let k = test.n_classes();
    let class_names = test.class_names();

    let mut predictions = Vec::with_capacity(test.len());
    let mut proba_sums: BTreeMap<String, (Vec<f64>, f64)> = BTreeMap::new();
    let mut all_proba_sum = (vec![0.0; k], 0.0);
    for row in test.rows() {
        let p = model.predict_proba(&row.features)?;
        predictions.push(p.argmax());
        let entry = proba_sums
            .entry(row.group.clone())
            .or_insert_with(|| (vec![0.0; k], 0.0));
        for class in 0..k {
            entry.0[class] += row.weight * p[class];
            all_proba_sum.0[class] += row.weight * p[class];
        }
        entry.1 += row.weight;
        all_proba_sum.1 += row.weight;
    }

    let labels: Vec<usize> = test.rows().iter().map(|r| r.label).collect();
    let weights: Vec<f64> = test.rows().iter().map(|r| r.weight).collect();
    let all = confusion(&labels, &predictions, &weights, k, ALL_GROUPS, &class_names)?;

    let mut groups = BTreeMap::new();
    for group in test.group_ids() {
        let mut g_labels = Vec::new();
        let mut g_preds = Vec::new();
        let mut g_weights = Vec::new();
        for (row, &pred) in test.rows().iter().zip(&predictions) {
            if row.group == group {
                g_labels.push(row.label);
                g_preds.push(pred);
                g_weights.push(row.weight);
            }
        }
        let report = confusion(&g_labels, &g_preds, &g_weights, k, &group, &class_names)?;
        groups.insert(group, report);
    }

    let mut mean_proba = BTreeMap::new();
    for (group, (sums, total)) in &proba_sums {
        mean_proba.insert(group.clone(), sums.iter().map(|s| s / total).collect());
    }
    mean_proba.insert(
        ALL_GROUPS.to_string(),
        all_proba_sum.0.iter().map(|s| s / all_proba_sum.1).collect(),
    );

    let disparities = pairwise_disparities(&groups);

    Ok(AuditBundle {
        groups,
        all,
        mean_proba,
        disparities,
        training_group: model.training_group.clone(),
        test_fingerprint: test.fingerprint(),
    })
}

fn pairwise_disparities(groups: &BTreeMap<String, ConfusionReport>) -> Vec<DisparityEntry> {
    let names: Vec<&String> = groups.keys().collect();
    let mut out = Vec::new();
    for i in 0..names.len() {
        for j in (i + 1)..names.len() {
            let a = &groups[names[i]];
            let b = &groups[names[j]];
            let k = a.n_classes();
            let predicted_share_diff = (0..k)
                .map(|c| a.predicted_shares[c] - b.predicted_shares[c])
                .collect();
            let col_error_diff = (0..k)
                .map(|c| match (a.col_errors[c], b.col_errors[c]) {
                    (Some(x), Some(y)) => Some(x - y),
                    _ => None,
                })
                .collect();
            out.push(DisparityEntry {
                group_a: names[i].clone(),
                group_b: names[j].clone(),
                predicted_share_diff,
                col_error_diff,
            });
        }
    }
    out
}

/// Predictor-free reference policies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselinePolicy {
    /// Predict the weighted modal class for everyone.
    MajorityClass,
    /// Predict the least severe class (class 0) for everyone.
    ReleaseAll,
    /// Predict the most severe class (class K-1) for everyone.
    ReleaseNone,
    /// Predict a uniformly random class per row.
    CoinFlip { seed: u64 },
}

/// Audit a baseline policy against observed labels.
pub fn baseline_policy(
    policy: BaselinePolicy,
    labels: &[usize],
    weights: &[f64],
    n_classes: usize,
    class_names: &[String],
) -> Result<ConfusionReport> {
    if labels.is_empty() {
        return Err(Error::Size("baseline_policy needs labels".into()));
    }
    let predictions: Vec<usize> = match policy {
        BaselinePolicy::MajorityClass => {
            let mut totals = vec![0.0; n_classes];
            for (&label, &w) in labels.iter().zip(weights) {
                totals[label] += w;
            }
            let mut modal = 0;
            for (class, &t) in totals.iter().enumerate().skip(1) {
                if t > totals[modal] {
                    modal = class;
                }
            }
            vec![modal; labels.len()]
        }
        BaselinePolicy::ReleaseAll => vec![0; labels.len()],
        BaselinePolicy::ReleaseNone => vec![n_classes - 1; labels.len()],
        BaselinePolicy::CoinFlip { seed } => {
            let mut rng = rng_from_seed(seed);
            (0..labels.len())
                .map(|_| rng.gen_range(0..n_classes))
                .collect()
        }
    };
    confusion(labels, &predictions, weights, n_classes, ALL_GROUPS, class_names)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("class{i}")).collect()
    }

    fn unit_weights(n: usize) -> Vec<f64> {
        vec![1.0; n]
    }

    #[test]
    fn white_conventional_reference_table() {
        // Published audit of conventionally trained boosting, group W.
        let counts = vec![
            vec![17877.0, 6848.0, 2535.0],
            vec![6454.0, 7593.0, 2062.0],
            vec![1859.0, 1779.0, 1234.0],
        ];
        let report = confusion_from_counts(counts, "W", &names(3)).unwrap();
        let expect_row = [0.34, 0.53, 0.75];
        let expect_col = [0.32, 0.53, 0.79];
        let expect_share = [0.54, 0.34, 0.12];
        for k in 0..3 {
            assert!((report.row_errors[k].unwrap() - expect_row[k]).abs() < 0.005);
            assert!((report.col_errors[k].unwrap() - expect_col[k]).abs() < 0.005);
            assert!((report.predicted_shares[k] - expect_share[k]).abs() < 0.005);
        }
    }

    #[test]
    fn perfect_predictions_have_zero_errors() {
        let labels = vec![0, 1, 2, 1, 0];
        let report = confusion(
            &labels,
            &labels,
            &unit_weights(5),
            3,
            ALL_GROUPS,
            &names(3),
        )
        .unwrap();
        for k in 0..3 {
            assert_eq!(report.row_errors[k], Some(0.0));
            assert_eq!(report.col_errors[k], Some(0.0));
        }
        assert!((report.predicted_shares[0] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn matches_naive_counting_on_random_points() {
        let mut rng = rng_from_seed(404);
        let n = 20;
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let preds: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
        let report = confusion(&labels, &preds, &weights, 3, ALL_GROUPS, &names(3)).unwrap();

        // Direct count-and-divide reference.
        for i in 0..3 {
            for j in 0..3 {
                let expected: f64 = (0..n)
                    .filter(|&r| labels[r] == i && preds[r] == j)
                    .map(|r| weights[r])
                    .sum();
                assert!((report.counts[i][j] - expected).abs() < 1e-12);
            }
        }
        for i in 0..3 {
            let row: f64 = report.counts[i].iter().sum();
            if row > 0.0 {
                let expected = (row - report.counts[i][i]) / row;
                assert!((report.row_errors[i].unwrap() - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn empty_row_reports_none_not_zero() {
        // No observed class-2 rows at all.
        let labels = vec![0, 0, 1];
        let preds = vec![0, 1, 1];
        let report = confusion(&labels, &preds, &unit_weights(3), 3, ALL_GROUPS, &names(3)).unwrap();
        assert_eq!(report.row_errors[2], None);
        assert_eq!(report.col_errors[2], None);
        assert_eq!(report.predicted_shares[2], 0.0);
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(confusion(&[0, 1], &[0], &[1.0, 1.0], 2, ALL_GROUPS, &names(2)).is_err());
    }

    #[test]
    fn majority_class_error_is_one_minus_modal_share() {
        // 57 / 33 / 10 split over 100 rows.
        let mut labels = vec![0usize; 57];
        labels.extend(vec![1usize; 33]);
        labels.extend(vec![2usize; 10]);
        let report = baseline_policy(
            BaselinePolicy::MajorityClass,
            &labels,
            &unit_weights(100),
            3,
            &names(3),
        )
        .unwrap();
        assert_eq!(report.predicted_shares[0], 1.0);
        assert_eq!(report.col_errors[0], Some(0.43));
        assert_eq!(report.col_errors[1], None);
    }

    #[test]
    fn release_all_on_homogeneous_labels_is_perfect() {
        let labels = vec![0usize; 8];
        let report = baseline_policy(
            BaselinePolicy::ReleaseAll,
            &labels,
            &unit_weights(8),
            3,
            &names(3),
        )
        .unwrap();
        assert_eq!(report.col_errors[0], Some(0.0));
        assert_eq!(report.row_errors[0], Some(0.0));
    }

    #[test]
    fn coin_flip_shares_approach_uniform() {
        let mut rng = rng_from_seed(7);
        let labels: Vec<usize> = (0..30000).map(|_| rng.gen_range(0..3)).collect();
        let report = baseline_policy(
            BaselinePolicy::CoinFlip { seed: 99 },
            &labels,
            &unit_weights(labels.len()),
            3,
            &names(3),
        )
        .unwrap();
        for k in 0..3 {
            assert!(
                (report.predicted_shares[k] - 1.0 / 3.0).abs() < 0.01,
                "share {k} = {}",
                report.predicted_shares[k]
            );
        }
    }
}
