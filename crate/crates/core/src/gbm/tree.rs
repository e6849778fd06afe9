//! Weighted regression trees grown by exact greedy split search.
//!
//! Split candidates sit at midpoints between consecutive distinct sorted
//! feature values; the chosen split maximizes the second-order gain
//! `0.5 [G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l)]`. Equal-gain candidates
//! resolve to the lower feature index, then the lower threshold. Leaf values
//! are `-G/(H+l)`.
//!
//! Gradient/hessian prefix sums accumulate per distinct-value run, starting
//! each run from zero. That makes integer-weighted rows and adjacent
//! duplicated rows produce bit-identical statistics, which downstream
//! equivalence checks rely on.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Tree node. `Split` routes `value < threshold` left, `>= threshold` right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Binary regression tree as a flat node array; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Leaf value reached by a feature vector.
    pub fn leaf_value(&self, features: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    idx = if features[*feature] < *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    /// Total split gain attributed to each feature.
    pub fn gain_by_feature(&self, n_features: usize) -> Vec<f64> {
        let mut gains = vec![0.0; n_features];
        for node in &self.nodes {
            if let Node::Split { feature, gain, .. } = node {
                gains[*feature] += gain;
            }
        }
        gains
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }
}

/// Growth limits for a single tree.
#[derive(Debug, Clone, Copy)]
pub struct TreeGrowth {
    pub max_depth: usize,
    pub min_child_weight: f64,
    pub lambda: f64,
}

/// Column-major feature storage with per-feature sort orders, built once per
/// training set and shared by every tree.
pub struct ColumnStore {
    n_rows: usize,
    columns: Vec<Vec<f64>>,
    /// Row ids sorted by (feature value, row id) per feature.
    sorted: Vec<Vec<u32>>,
}

impl ColumnStore {
    pub fn from_dataset(data: &Dataset) -> Self {
        let n_features = data.schema().len();
        let iter = data.rows().iter().map(|r| r.features.as_slice());
        Self::from_feature_rows(n_features, iter)
    }

    pub fn from_feature_rows<'a, I>(n_features: usize, rows: I) -> Self
    where
        I: Iterator<Item = &'a [f64]>,
    {
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); n_features];
        for row in rows {
            debug_assert_eq!(row.len(), n_features);
            for (col, &v) in columns.iter_mut().zip(row.iter()) {
                col.push(v);
            }
        }
        let n_rows = columns.first().map_or(0, Vec::len);
        let sorted = columns
            .iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..n_rows as u32).collect();
                idx.sort_by(|&a, &b| {
                    col[a as usize]
                        .partial_cmp(&col[b as usize])
                        .expect("finite feature values")
                        .then(a.cmp(&b))
                });
                idx
            })
            .collect();
        ColumnStore {
            n_rows,
            columns,
            sorted,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn value(&self, row: u32, feature: usize) -> f64 {
        self.columns[feature][row as usize]
    }
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
    left_grad: f64,
    left_hess: f64,
}

/// Fit one regression tree to (gradient, hessian) targets over a row subset.
///
/// `rows` are ids into `store`; `grads` and `hess` are indexed by row id.
pub fn fit_tree(
    store: &ColumnStore,
    rows: &[u32],
    grads: &[f64],
    hess: &[f64],
    growth: &TreeGrowth,
) -> Result<Tree> {
    if rows.is_empty() {
        return Err(Error::Fit("fit_tree needs at least one row".into()));
    }
    for &r in rows {
        if hess[r as usize] < 0.0 {
            return Err(Error::Fit(format!(
                "negative hessian at row {r}; second-order boosting requires hess >= 0"
            )));
        }
    }

    // Restrict each feature's sort order to the subsample.
    let mut member = vec![false; store.n_rows()];
    for &r in rows {
        member[r as usize] = true;
    }
    let node_lists: Vec<Vec<u32>> = store
        .sorted
        .iter()
        .map(|order| {
            order
                .iter()
                .copied()
                .filter(|&r| member[r as usize])
                .collect()
        })
        .collect();

    let (total_grad, total_hess) = run_grouped_totals(store, 0, &node_lists[0], grads, hess);

    let mut nodes = Vec::new();
    grow(
        store,
        node_lists,
        total_grad,
        total_hess,
        grads,
        hess,
        growth,
        0,
        &mut nodes,
    );
    Ok(Tree { nodes })
}

/// Node totals accumulated per distinct-value run of one feature's order.
fn run_grouped_totals(
    store: &ColumnStore,
    feature: usize,
    order: &[u32],
    grads: &[f64],
    hess: &[f64],
) -> (f64, f64) {
    let mut total_g = 0.0;
    let mut total_h = 0.0;
    let mut i = 0;
    while i < order.len() {
        let value = store.value(order[i], feature);
        let mut run_g = 0.0;
        let mut run_h = 0.0;
        while i < order.len() && store.value(order[i], feature) == value {
            run_g += grads[order[i] as usize];
            run_h += hess[order[i] as usize];
            i += 1;
        }
        total_g += run_g;
        total_h += run_h;
    }
    (total_g, total_h)
}

fn leaf_value(grad: f64, hess: f64, lambda: f64) -> f64 {
    let denom = hess + lambda;
    if denom > 0.0 {
        -grad / denom
    } else {
        0.0
    }
}

fn gain_term(grad: f64, hess: f64, lambda: f64) -> f64 {
    let denom = hess + lambda;
    if denom > 0.0 {
        grad * grad / denom
    } else {
        0.0
    }
}

#[allow(clippy::too_many_arguments)]
fn grow(
    store: &ColumnStore,
    node_lists: Vec<Vec<u32>>,
    node_grad: f64,
    node_hess: f64,
    grads: &[f64],
    hess: &[f64],
    growth: &TreeGrowth,
    depth: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let index = nodes.len();
    if depth >= growth.max_depth {
        nodes.push(Node::Leaf {
            value: leaf_value(node_grad, node_hess, growth.lambda),
        });
        return index;
    }

    let best = find_best_split(store, &node_lists, node_grad, node_hess, grads, hess, growth);
    let Some(best) = best else {
        nodes.push(Node::Leaf {
            value: leaf_value(node_grad, node_hess, growth.lambda),
        });
        return index;
    };

    // Placeholder; children indices patched after recursion.
    nodes.push(Node::Split {
        feature: best.feature,
        threshold: best.threshold,
        gain: best.gain,
        left: 0,
        right: 0,
    });

    let mut left_lists = Vec::with_capacity(node_lists.len());
    let mut right_lists = Vec::with_capacity(node_lists.len());
    for list in &node_lists {
        let mut left = Vec::new();
        let mut right = Vec::new();
        for &r in list {
            if store.value(r, best.feature) < best.threshold {
                left.push(r);
            } else {
                right.push(r);
            }
        }
        left_lists.push(left);
        right_lists.push(right);
    }
    drop(node_lists);

    let right_grad = node_grad - best.left_grad;
    let right_hess = node_hess - best.left_hess;
    let left_index = grow(
        store,
        left_lists,
        best.left_grad,
        best.left_hess,
        grads,
        hess,
        growth,
        depth + 1,
        nodes,
    );
    let right_index = grow(
        store,
        right_lists,
        right_grad,
        right_hess,
        grads,
        hess,
        growth,
        depth + 1,
        nodes,
    );
    if let Node::Split { left, right, .. } = &mut nodes[index] {
        *left = left_index;
        *right = right_index;
    }
    index
}

fn find_best_split(
    store: &ColumnStore,
    node_lists: &[Vec<u32>],
    node_grad: f64,
    node_hess: f64,
    grads: &[f64],
    hess: &[f64],
    growth: &TreeGrowth,
) -> Option<BestSplit> {
    let parent_term = gain_term(node_grad, node_hess, growth.lambda);
    let mut best: Option<BestSplit> = None;

    for (feature, order) in node_lists.iter().enumerate() {
        let mut left_g = 0.0;
        let mut left_h = 0.0;
        let mut i = 0;
        while i < order.len() {
            let value = store.value(order[i], feature);
            let mut run_g = 0.0;
            let mut run_h = 0.0;
            while i < order.len() && store.value(order[i], feature) == value {
                run_g += grads[order[i] as usize];
                run_h += hess[order[i] as usize];
                i += 1;
            }
            left_g += run_g;
            left_h += run_h;
            if i == order.len() {
                break; // no rows to the right of the last run
            }
            let next_value = store.value(order[i], feature);
            let threshold = 0.5 * (value + next_value);
            let right_h = node_hess - left_h;
            if left_h < growth.min_child_weight || right_h < growth.min_child_weight {
                continue;
            }
            let right_g = node_grad - left_g;
            let gain = 0.5
                * (gain_term(left_g, left_h, growth.lambda)
                    + gain_term(right_g, right_h, growth.lambda)
                    - parent_term);
            if gain <= 0.0 {
                continue;
            }
            let better = match &best {
                None => true,
                Some(b) => {
                    gain > b.gain
                        || (gain == b.gain
                            && (feature < b.feature
                                || (feature == b.feature && threshold < b.threshold)))
                }
            };
            if better {
                best = Some(BestSplit {
                    gain,
                    feature,
                    threshold,
                    left_grad: left_g,
                    left_hess: left_h,
                });
            }
        }
    }
    best
}
