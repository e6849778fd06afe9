//! The boosting loop: base scores from weighted class priors, then per round
//! a seeded row subsample, gradients at current scores, one tree per class,
//! and shrunken score updates.

use rand::Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

use super::loss::{deviance_grad_hess, softmax};
use super::tree::{fit_tree, ColumnStore, TreeGrowth};
use super::{BoostModel, GbmConfig};

/// Train a multi-class boosted model.
///
/// Deterministic in (row order, config, seed): identical inputs give a
/// bit-identical model.
pub fn train(data: &Dataset, config: &GbmConfig) -> Result<BoostModel> {
    train_restricted(data, config, None)
}

/// Train, optionally restricted to one group's rows; the restriction is
/// recorded in the model.
pub fn train_restricted(
    data: &Dataset,
    config: &GbmConfig,
    training_group: Option<&str>,
) -> Result<BoostModel> {
    config.validate()?;
    let restricted;
    let data = match training_group {
        Some(group) => {
            restricted = data.filter_group(group)?;
            &restricted
        }
        None => data,
    };
    if data.is_empty() {
        return Err(Error::Size("cannot train on an empty dataset".into()));
    }
    if data.n_classes() != config.n_classes {
        return Err(Error::Schema(format!(
            "config expects {} classes, dataset has {}",
            config.n_classes,
            data.n_classes()
        )));
    }

    let k = config.n_classes;
    let n = data.len();
    let class_totals = data.class_weights();
    let total_weight: f64 = class_totals.iter().sum();
    for (class, &w) in class_totals.iter().enumerate() {
        if w <= 0.0 {
            return Err(Error::Degenerate(format!(
                "class {class} has zero total weight in training data"
            )));
        }
    }
    let base_scores: Vec<f64> = class_totals
        .iter()
        .map(|&w| (w / total_weight).ln())
        .collect();

    let store = ColumnStore::from_dataset(data);
    let growth = TreeGrowth {
        max_depth: config.max_depth,
        min_child_weight: config.min_child_weight,
        lambda: config.lambda,
    };

    // scores[row * k + class]
    let mut scores = vec![0.0; n * k];
    for row in 0..n {
        scores[row * k..(row + 1) * k].copy_from_slice(&base_scores);
    }

    let mut rng = rng_from_seed(config.seed);
    let mut rounds = Vec::with_capacity(config.n_rounds);
    let mut grads = vec![vec![0.0; n]; k];
    let mut hess = vec![vec![0.0; n]; k];

    for _round in 0..config.n_rounds {
        let sample = draw_subsample(n, config.subsample, &mut rng);

        for &row in &sample {
            let row = row as usize;
            let p = softmax(&scores[row * k..(row + 1) * k])?;
            let r = data.rows()[row].label;
            let (g, h) = deviance_grad_hess(r, &p, data.rows()[row].weight);
            for class in 0..k {
                grads[class][row] = g[class];
                hess[class][row] = h[class];
            }
        }

        let mut round_trees = Vec::with_capacity(k);
        for class in 0..k {
            let tree = fit_tree(&store, &sample, &grads[class], &hess[class], &growth)?;
            round_trees.push(tree);
        }
        // Scores advance for every row, not just the subsample, so the next
        // round's gradients see the full model.
        for (row, data_row) in data.rows().iter().enumerate() {
            for (class, tree) in round_trees.iter().enumerate() {
                scores[row * k + class] +=
                    config.learning_rate * tree.leaf_value(&data_row.features);
            }
        }
        rounds.push(round_trees);
    }

    Ok(BoostModel {
        config: config.clone(),
        base_scores,
        rounds,
        trained_schema: data.schema().clone(),
        training_group: training_group.map(str::to_string),
    })
}

/// Sorted sample of `floor(n * fraction)` distinct row ids (at least one).
/// `fraction >= 1` short-circuits to all rows with no RNG consumption.
fn draw_subsample(n: usize, fraction: f64, rng: &mut impl Rng) -> Vec<u32> {
    if fraction >= 1.0 {
        return (0..n as u32).collect();
    }
    let take = ((n as f64 * fraction).floor() as usize).max(1);
    let mut pool: Vec<u32> = (0..n as u32).collect();
    for i in 0..take {
        let j = rng.gen_range(i..n);
        pool.swap(i, j);
    }
    let mut sample = pool[..take].to_vec();
    sample.sort_unstable();
    sample
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Row;
    use crate::schema::{Feature, FeatureKind, Schema};

    fn toy_dataset() -> Dataset {
        let schema = Schema::new(vec![
            Feature::new("x0", FeatureKind::Count),
            Feature::new("x1", FeatureKind::Count),
        ])
        .unwrap();
        let mut rows = Vec::new();
        for i in 0..30 {
            let x0 = (i % 10) as f64;
            let x1 = (i % 7) as f64;
            let label = if x0 < 3.0 {
                0
            } else if x0 < 7.0 {
                1
            } else {
                2
            };
            rows.push(Row::new(vec![x0, x1], label, if i % 2 == 0 { "W" } else { "B" }));
        }
        Dataset::new(schema, 3, rows).unwrap()
    }

    fn quick_config(n_rounds: usize) -> GbmConfig {
        GbmConfig {
            n_rounds,
            learning_rate: 0.1,
            max_depth: 3,
            min_child_weight: 0.0,
            subsample: 1.0,
            n_classes: 3,
            seed: 5,
            lambda: 1.0,
        }
    }

    #[test]
    fn zero_rounds_predicts_class_priors() {
        let data = toy_dataset();
        let model = train(&data, &quick_config(0)).unwrap();
        let priors: Vec<f64> = {
            let w = data.class_weights();
            let t: f64 = w.iter().sum();
            w.iter().map(|x| x / t).collect()
        };
        let p = model.predict_proba(&[4.0, 2.0]).unwrap();
        for class in 0..3 {
            assert!((p[class] - priors[class]).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_class_is_rejected() {
        let schema = Schema::new(vec![Feature::new("x", FeatureKind::Count)]).unwrap();
        let rows = vec![
            Row::new(vec![0.0], 0, "W"),
            Row::new(vec![1.0], 0, "W"),
            Row::new(vec![2.0], 1, "W"),
        ];
        let data = Dataset::new(schema, 3, rows).unwrap();
        let err = train(&data, &quick_config(2)).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn training_fits_the_toy_data() {
        let data = toy_dataset();
        let model = train(&data, &quick_config(60)).unwrap();
        let mut correct = 0;
        for row in data.rows() {
            if model.predict_class(&row.features).unwrap() == row.label {
                correct += 1;
            }
        }
        assert!(correct >= 28, "got {correct}/30 correct");
    }

    #[test]
    fn restricted_training_records_the_group() {
        let data = toy_dataset();
        let model = train_restricted(&data, &quick_config(3), Some("W")).unwrap();
        assert_eq!(model.training_group.as_deref(), Some("W"));
    }

    #[test]
    fn subsample_draw_is_deterministic() {
        let mut a_rng = rng_from_seed(9);
        let mut b_rng = rng_from_seed(9);
        let a = draw_subsample(100, 0.3, &mut a_rng);
        let b = draw_subsample(100, 0.3, &mut b_rng);
        assert_eq!(a, b);
        assert_eq!(a.len(), 30);
        let mut dedup = a.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 30);
    }
}
